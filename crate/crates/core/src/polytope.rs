//! Labelled polytopes `Δ = {μ : L_s(μ) ≥ 0}` and their combinatorics.
//!
//! Rational labels are handled exactly. Float labels use [`COMB_EPS`] for
//! feasibility and rank decisions.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::affine::AffineFunction;
use crate::error::{Error, Result};
use crate::scalar::{nullspace, rank, solve, Mat, Scalar, COMB_EPS};

/// A set of facet indices, at most 64 facets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FacetSet(pub u64);

impl FacetSet {
    pub fn empty() -> Self {
        FacetSet(0)
    }
    pub fn full(n: usize) -> Self {
        if n == 64 {
            FacetSet(u64::MAX)
        } else {
            FacetSet((1u64 << n) - 1)
        }
    }
    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        FacetSet(it.into_iter().fold(0u64, |acc, s| acc | (1u64 << s)))
    }
    pub fn contains(&self, s: usize) -> bool {
        self.0 >> s & 1 == 1
    }
    pub fn insert(&mut self, s: usize) {
        self.0 |= 1u64 << s;
    }
    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }
    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }
    pub fn is_subset(&self, other: &FacetSet) -> bool {
        self.0 & !other.0 == 0
    }
    pub fn intersection(&self, other: &FacetSet) -> FacetSet {
        FacetSet(self.0 & other.0)
    }
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(move |&s| self.contains(s))
    }
}

/// Partition of the facet indices into simplex factors. Group `i` lists the
/// facets `I_i` in the order `r = 0, 1, …, m_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
}

impl Grouping {
    pub fn new(groups: Vec<Vec<usize>>) -> Self {
        Self { groups }
    }

    /// Consecutive facet blocks of the given sizes.
    pub fn consecutive(sizes: &[usize]) -> Self {
        let mut next = 0;
        let groups = sizes
            .iter()
            .map(|&k| {
                let g = (next..next + k).collect();
                next += k;
                g
            })
            .collect();
        Self { groups }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Factor dimensions `m_i = |I_i| - 1`.
    pub fn factor_dims(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len().saturating_sub(1)).collect()
    }

    pub fn n_facets(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// `i(s)` for each facet.
    pub fn factor_of(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.n_facets()];
        for (i, g) in self.groups.iter().enumerate() {
            for &s in g {
                if s < out.len() {
                    out[s] = i;
                }
            }
        }
        out
    }

    /// Checks the groups partition `0..n`.
    pub fn check_partition(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for g in &self.groups {
            for &s in g {
                if s >= n || seen[s] {
                    return Err(Error::GroupingMismatch(format!("facet {s} is out of range or repeated")));
                }
                seen[s] = true;
            }
        }
        if seen.iter().any(|x| !x) {
            return Err(Error::GroupingMismatch("grouping does not cover every facet".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub facets: FacetSet,
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    /// All facets containing the face.
    pub facets: FacetSet,
    /// -1 for the empty face.
    pub dim: i32,
}

/// Nonempty faces (plus the empty face), each keyed by the set of facets
/// containing it. Ordered by decreasing dimension, then by facet set.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceLattice {
    pub dim: usize,
    pub n_facets: usize,
    pub faces: Vec<Face>,
    pub vertices: Vec<Vertex>,
}

impl FaceLattice {
    pub fn count(&self, dim: i32) -> usize {
        self.faces.iter().filter(|f| f.dim == dim).count()
    }

    /// Face counts for dimensions 0..=m.
    pub fn f_vector(&self) -> Vec<usize> {
        (0..=self.dim as i32).map(|k| self.count(k)).collect()
    }

    /// Whether `F_{S'} = {μ ∈ Δ : L_s(μ) = 0, s ∈ S'}` is nonempty.
    pub fn is_nonempty(&self, set: FacetSet) -> bool {
        self.vertices.iter().any(|v| set.is_subset(&v.facets))
    }

    /// Closure under intersection of the vertex incidence sets.
    fn close(dim: usize, n_facets: usize, vertex_sets: &[FacetSet], ranks: impl Fn(FacetSet) -> usize) -> Vec<Face> {
        let mut sets: BTreeSet<FacetSet> = vertex_sets.iter().copied().collect();
        loop {
            let current: Vec<FacetSet> = sets.iter().copied().collect();
            let mut grew = false;
            for (i, a) in current.iter().enumerate() {
                for b in &current[i + 1..] {
                    if sets.insert(a.intersection(b)) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let mut faces: Vec<Face> = sets.into_iter().map(|f| Face { facets: f, dim: dim as i32 - ranks(f) as i32 }).collect();
        faces.push(Face { facets: FacetSet::full(n_facets), dim: -1 });
        faces.sort_by(|a, b| b.dim.cmp(&a.dim).then(a.facets.cmp(&b.facets)));
        faces
    }

    /// Rebuild the lattice from vertex incidences alone.
    pub fn from_vertices(dim: usize, n_facets: usize, vertices: Vec<Vertex>, normals: &[Vec<f64>]) -> Self {
        let sets: Vec<FacetSet> = vertices.iter().map(|v| v.facets).collect();
        let faces = Self::close(dim, n_facets, &sets, |f| normal_rank(normals, f));
        Self { dim, n_facets, faces, vertices }
    }
}

fn normal_rank<T: Scalar>(normals: &[Vec<T>], set: FacetSet) -> usize {
    let rows: Mat<T> = set.iter().map(|s| normals[s].clone()).collect();
    if rows.is_empty() {
        0
    } else {
        rank(&rows)
    }
}

struct RawVertex<T> {
    facets: FacetSet,
    point: Vec<T>,
}

fn check_labels<T: Scalar>(labels: &[AffineFunction<T>], m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if labels.len() > 64 {
        return Err(Error::InvalidInput("at most 64 facets are supported".into()));
    }
    for (s, l) in labels.iter().enumerate() {
        if l.dim() != m {
            return Err(Error::InvalidInput(format!("facet {s} has dimension {} instead of {m}", l.dim())));
        }
        if l.a.iter().all(Scalar::negligible) {
            return Err(Error::InvalidInput(format!("facet {s} has a zero normal")));
        }
    }
    Ok(())
}

/// Detects a nonzero recession direction of `{⟨a_s, v⟩ ≥ 0 ∀s}`.
fn check_bounded<T: Scalar>(labels: &[AffineFunction<T>], m: usize) -> Result<()> {
    let normals: Mat<T> = labels.iter().map(|l| l.a.clone()).collect();
    if rank(&normals) < m {
        return Err(Error::Unbounded);
    }
    // The cone is pointed, so it is nonzero iff it has an extreme ray, cut
    // out by m-1 independent tight constraints.
    for subset in (0..labels.len()).combinations(m - 1) {
        let rows: Mat<T> = subset.iter().map(|&s| normals[s].clone()).collect();
        let ker = if rows.is_empty() {
            vec![{
                let mut v = vec![T::zero(); m];
                v[0] = T::one();
                v
            }]
        } else {
            nullspace(&rows, m)
        };
        if ker.len() != 1 {
            continue;
        }
        let v = &ker[0];
        let signs: Vec<i8> = normals.iter().map(|a| crate::scalar::dot(a, v).sign()).collect();
        if signs.iter().all(|&x| x >= 0) || signs.iter().all(|&x| x <= 0) {
            return Err(Error::Unbounded);
        }
    }
    Ok(())
}

fn active_set<T: Scalar>(labels: &[AffineFunction<T>], p: &[T]) -> FacetSet {
    FacetSet::from_indices((0..labels.len()).filter(|&s| labels[s].eval(p).negligible()))
}

fn enumerate_vertices<T: Scalar>(labels: &[AffineFunction<T>], m: usize) -> Result<Vec<RawVertex<T>>> {
    let mut out: Vec<RawVertex<T>> = Vec::new();
    for subset in (0..labels.len()).combinations(m) {
        let a: Mat<T> = subset.iter().map(|&s| labels[s].a.clone()).collect();
        let b: Vec<T> = subset.iter().map(|&s| -labels[s].a0.clone()).collect();
        let Some(p) = solve(&a, &b) else { continue };
        if p.iter().any(|x| !x.to_f64().is_finite()) {
            return Err(Error::Degenerate);
        }
        if labels.iter().any(|l| l.eval(&p).sign() < 0) {
            continue;
        }
        if out.iter().any(|v| v.point.iter().zip(&p).all(|(x, y)| (x.clone() - y.clone()).negligible())) {
            continue;
        }
        let facets = active_set(labels, &p);
        out.push(RawVertex { facets, point: p });
    }
    Ok(out)
}

fn barycenter<T: Scalar>(points: &[&Vec<T>], m: usize) -> Vec<T> {
    let n = T::from_i64(points.len() as i64);
    (0..m).map(|j| points.iter().fold(T::zero(), |acc, p| acc + p[j].clone()) / n.clone()).collect()
}

fn lattice_generic<T: Scalar>(labels: &[AffineFunction<T>], m: usize) -> Result<(FaceLattice, Vec<RawVertex<T>>)> {
    check_labels(labels, m)?;
    check_bounded(labels, m)?;
    let raw = enumerate_vertices(labels, m)?;
    if raw.is_empty() {
        return Err(Error::Empty);
    }
    let pts: Vec<&Vec<T>> = raw.iter().map(|v| &v.point).collect();
    let b = barycenter(&pts, m);
    if labels.iter().any(|l| l.eval(&b).sign() <= 0) {
        return Err(Error::EmptyInterior);
    }
    let normals: Vec<Vec<T>> = labels.iter().map(|l| l.a.clone()).collect();
    let sets: Vec<FacetSet> = raw.iter().map(|v| v.facets).collect();
    let faces = FaceLattice::close(m, labels.len(), &sets, |f| normal_rank(&normals, f));
    let vertices = raw.iter().map(|v| Vertex { facets: v.facets, point: v.point.iter().map(Scalar::to_f64).collect() }).collect();
    Ok((FaceLattice { dim: m, n_facets: labels.len(), faces, vertices }, raw))
}

fn check_nonredundant<T: Scalar>(labels: &[AffineFunction<T>], m: usize, raw: &[RawVertex<T>]) -> Result<()> {
    for s in 0..labels.len() {
        let on: Vec<&Vec<T>> = raw.iter().filter(|v| v.facets.contains(s)).map(|v| &v.point).collect();
        if on.is_empty() {
            return Err(Error::Redundant(s));
        }
        let b = barycenter(&on, m);
        if active_set(labels, &b) != FacetSet::from_indices([s]) {
            return Err(Error::Redundant(s));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelledPolytope {
    dim: usize,
    facets: Vec<AffineFunction>,
    exact: Option<Vec<AffineFunction<BigRational>>>,
    grouping: Option<Grouping>,
    lattice: Option<FaceLattice>,
}

impl LabelledPolytope {
    /// Validated polytope from float labels: bounded, nonempty interior,
    /// every facet nonredundant.
    pub fn new(facets: Vec<AffineFunction>) -> Result<Self> {
        let mut p = Self::unchecked(facets);
        p.validate()?;
        Ok(p)
    }

    /// Validated polytope from exact rational labels.
    pub fn from_exact(facets: Vec<AffineFunction<BigRational>>) -> Result<Self> {
        let mut p = Self::unchecked_exact(facets);
        p.validate()?;
        Ok(p)
    }

    /// Raw labels with no validation, for Levi data that need not define a
    /// polytope.
    pub fn unchecked(facets: Vec<AffineFunction>) -> Self {
        let dim = facets.first().map_or(0, AffineFunction::dim);
        Self { dim, facets, exact: None, grouping: None, lattice: None }
    }

    pub fn unchecked_exact(facets: Vec<AffineFunction<BigRational>>) -> Self {
        let dim = facets.first().map_or(0, |f| f.dim());
        let float = facets.iter().map(AffineFunction::to_f64).collect();
        Self { dim, facets: float, exact: Some(facets), grouping: None, lattice: None }
    }

    fn validate(&mut self) -> Result<()> {
        let lattice = match &self.exact {
            Some(ex) => {
                let (lat, raw) = lattice_generic(ex, self.dim)?;
                check_nonredundant(ex, self.dim, &raw)?;
                lat
            }
            None => {
                let (lat, raw) = lattice_generic(&self.facets, self.dim)?;
                check_nonredundant(&self.facets, self.dim, &raw)?;
                lat
            }
        };
        self.lattice = Some(lattice);
        Ok(())
    }

    pub fn with_grouping(mut self, grouping: Grouping) -> Result<Self> {
        grouping.check_partition(self.facets.len())?;
        self.grouping = Some(grouping);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn facets(&self) -> &[AffineFunction] {
        &self.facets
    }

    pub fn exact_facets(&self) -> Option<&[AffineFunction<BigRational>]> {
        self.exact.as_deref()
    }

    pub fn grouping(&self) -> Option<&Grouping> {
        self.grouping.as_ref()
    }

    pub fn is_validated(&self) -> bool {
        self.lattice.is_some()
    }

    pub fn face_lattice(&self) -> Result<FaceLattice> {
        if let Some(l) = &self.lattice {
            return Ok(l.clone());
        }
        match &self.exact {
            Some(ex) => lattice_generic(ex, self.dim).map(|x| x.0),
            None => lattice_generic(&self.facets, self.dim).map(|x| x.0),
        }
    }

    fn lattice_ref(&self) -> Option<&FaceLattice> {
        self.lattice.as_ref()
    }

    /// Vertex coordinates; empty when the labels do not define a polytope.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match self.lattice_ref() {
            Some(l) => l.vertices.iter().map(|v| v.point.clone()).collect(),
            None => self.face_lattice().map(|l| l.vertices.into_iter().map(|v| v.point).collect()).unwrap_or_default(),
        }
    }

    /// Mean of the vertices, an interior point.
    pub fn vertex_barycenter(&self) -> Vec<f64> {
        let vs = self.vertices();
        let n = vs.len().max(1) as f64;
        (0..self.dim).map(|j| vs.iter().map(|v| v[j]).sum::<f64>() / n).collect()
    }

    pub fn diameter(&self) -> f64 {
        let vs = self.vertices();
        let mut d: f64 = 0.0;
        for (i, a) in vs.iter().enumerate() {
            for b in &vs[i + 1..] {
                let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                d = d.max(libm::sqrt(s));
            }
        }
        d
    }

    pub fn label_values(&self, mu: &[f64]) -> Vec<f64> {
        self.facets.iter().map(|l| l.eval(mu)).collect()
    }

    pub fn min_label(&self, mu: &[f64]) -> f64 {
        self.facets.iter().map(|l| l.eval(mu)).fold(f64::INFINITY, f64::min)
    }

    /// Smallest Euclidean distance from μ to a facet hyperplane.
    pub fn min_distance(&self, mu: &[f64]) -> f64 {
        self.facets.iter().map(|l| l.distance(mu)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, mu: &[f64], tol: f64) -> bool {
        self.min_label(mu) >= -tol
    }
}

pub fn face_lattice(p: &LabelledPolytope) -> Result<FaceLattice> {
    p.face_lattice()
}

/// Every vertex lies on exactly m facets with independent normals.
pub fn is_simple(p: &LabelledPolytope) -> Result<bool> {
    let lat = p.face_lattice()?;
    let m = p.dim();
    Ok(lat.vertices.iter().all(|v| {
        if v.facets.len() != m {
            return false;
        }
        match p.exact_facets() {
            Some(ex) => normal_rank(&ex.iter().map(|l| l.a.clone()).collect::<Vec<_>>(), v.facets) == m,
            None => normal_rank(&p.facets().iter().map(|l| l.a.clone()).collect::<Vec<_>>(), v.facets) == m,
        }
    }))
}

/// Face lattice of Δ agrees over S with that of the product of simplices
/// prescribed by the grouping: `F_{S'} ≠ ∅` iff `S'` omits an index of every
/// group.
pub fn matches_product_of_simplices(p: &LabelledPolytope, grouping: &Grouping) -> Result<bool> {
    let n = p.n_facets();
    if grouping.groups().iter().any(|g| g.len() < 2) {
        return Err(Error::GroupingMismatch("every factor needs at least two facets".into()));
    }
    let dims: usize = grouping.factor_dims().iter().sum();
    if dims != p.dim() || grouping.n_facets() != n {
        return Err(Error::GroupingMismatch(format!(
            "factor sizes give dimension {dims} with {} facets, polytope has dimension {} with {n} facets",
            grouping.n_facets(),
            p.dim()
        )));
    }
    grouping.check_partition(n)?;
    let lat = match p.face_lattice() {
        Ok(l) => l,
        Err(Error::Unbounded | Error::Empty | Error::EmptyInterior | Error::Degenerate) => return Ok(false),
        Err(e) => return Err(e),
    };
    let group_sets: Vec<FacetSet> = grouping.groups().iter().map(|g| FacetSet::from_indices(g.iter().copied())).collect();
    // No face lies on every facet of a factor.
    for v in &lat.vertices {
        if group_sets.iter().any(|g| g.is_subset(&v.facets)) {
            return Ok(false);
        }
    }
    // Each vertex of the product is realized.
    for omitted in grouping.groups().iter().map(|g| g.iter().copied()).multi_cartesian_product() {
        let mut set = FacetSet::full(n);
        for s in omitted {
            set.0 &= !(1u64 << s);
        }
        if !lat.is_nonempty(set) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn cube_pairs(p: &LabelledPolytope, grouping: &Grouping) -> Result<Vec<(usize, usize)>> {
    if grouping.len() != p.dim() || grouping.groups().iter().any(|g| g.len() != 2) {
        return Err(Error::NotCuboid);
    }
    match matches_product_of_simplices(p, grouping) {
        Ok(true) => {}
        _ => return Err(Error::NotCuboid),
    }
    Ok(grouping.groups().iter().map(|g| (g[0], g[1])).collect())
}

fn detect_generic<T: Scalar>(labels: &[AffineFunction<T>], pairs: &[(usize, usize)], m: usize) -> Result<Option<AffineFunction<T>>> {
    let w = if m == 1 {
        // Every affine function lies in the span of the two labels; the
        // constant is returned.
        AffineFunction::constant(T::one(), 1)
    } else {
        let mut complement: Mat<T> = Vec::new();
        for &(s, t) in pairs {
            let span: Mat<T> = vec![labels[s].to_vector(), labels[t].to_vector()];
            complement.extend(nullspace(&span, m + 1));
        }
        let ker = nullspace(&complement, m + 1);
        match ker.len() {
            0 => return Ok(None),
            1 => AffineFunction::from_vector(&ker[0]),
            _ => return Err(Error::Degenerate),
        }
    };
    let raw = enumerate_vertices(labels, m)?;
    let values: Vec<T> = raw.iter().map(|v| w.eval(&v.point)).collect();
    let w = if values.iter().all(|x| x.sign() < 0) {
        w.neg()
    } else if values.iter().all(|x| x.sign() > 0) {
        w
    } else {
        return Ok(None);
    };
    let min = raw
        .iter()
        .map(|v| w.eval(&v.point))
        .fold(None, |acc: Option<T>, x| match acc {
            Some(a) if a <= x => Some(a),
            _ => Some(x),
        })
        .ok_or(Error::Empty)?;
    Ok(Some(w.scale(&(T::one() / min))))
}

/// Affine `w` vanishing where opposite facets meet, normalized to minimum 1
/// over the vertices. `None` when the pencils of opposite facets share no
/// hyperplane.
///
/// For m = 1 every positive affine function qualifies and the constant 1 is
/// returned.
pub fn detect_projective_cube(p: &LabelledPolytope, grouping: &Grouping) -> Result<Option<AffineFunction>> {
    let pairs = cube_pairs(p, grouping)?;
    match p.exact_facets() {
        Some(ex) => Ok(detect_generic(ex, &pairs, p.dim())?.map(|w| w.to_f64())),
        None => detect_generic(p.facets(), &pairs, p.dim()),
    }
}

/// Exact variant of [`detect_projective_cube`] for rational labels.
pub fn detect_projective_cube_exact(p: &LabelledPolytope, grouping: &Grouping) -> Result<Option<AffineFunction<BigRational>>> {
    let pairs = cube_pairs(p, grouping)?;
    let ex = p.exact_facets().ok_or_else(|| Error::InvalidInput("labels are not rational".into()))?;
    detect_generic(ex, &pairs, p.dim())
}

fn integral_normals(p: &LabelledPolytope) -> Result<Vec<Vec<BigInt>>> {
    match p.exact_facets() {
        Some(ex) => ex
            .iter()
            .map(|l| l.a.iter().map(|x| if x.is_integer() { Ok(x.to_integer()) } else { Err(Error::NonIntegral) }).collect())
            .collect(),
        None => p
            .facets()
            .iter()
            .map(|l| {
                l.a.iter()
                    .map(|&x| {
                        let r = libm::round(x);
                        if (x - r).abs() <= COMB_EPS {
                            Ok(BigInt::from(r as i64))
                        } else {
                            Err(Error::NonIntegral)
                        }
                    })
                    .collect()
            })
            .collect(),
    }
}

/// Diagonal of the Smith normal form (nonnegative, each dividing the next).
pub fn smith_normal_form(mut a: Vec<Vec<BigInt>>) -> Vec<BigInt> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut diag = Vec::new();
    for t in 0..rows.min(cols) {
        loop {
            // Smallest nonzero entry of the trailing block to (t, t).
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if !a[i][j].is_zero() && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                diag.push(BigInt::zero());
                break;
            };
            a.swap(t, bi);
            for row in a.iter_mut() {
                row.swap(t, bj);
            }
            let p = a[t][t].clone();
            let mut clean = true;
            for i in t + 1..rows {
                let q = a[i][t].div_floor(&p);
                for j in t..cols {
                    let v = &q * &a[t][j];
                    a[i][j] -= v;
                }
                if !a[i][t].is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                let q = a[t][j].div_floor(&p);
                for row in a.iter_mut().skip(t) {
                    let v = &q * &row[t];
                    row[j] -= v;
                }
                if !a[t][j].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // Divisibility of the trailing block by the pivot.
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a[i][j].is_multiple_of(&p)));
            match bad {
                Some(i) => {
                    for j in t..cols {
                        let v = a[i][j].clone();
                        a[t][j] += v;
                    }
                }
                None => {
                    diag.push(p.abs());
                    break;
                }
            }
        }
    }
    diag
}

/// Order of `(Λ ∩ span_ℝ{u_s}) / span_ℤ{u_s}` over the facets of a face,
/// the orbifold structure group there.
pub fn stabilizer_order(p: &LabelledPolytope, face: &[usize]) -> Result<u64> {
    let normals = integral_normals(p)?;
    if face.iter().any(|&s| s >= normals.len()) {
        return Err(Error::InvalidInput("facet index out of range".into()));
    }
    let set = FacetSet::from_indices(face.iter().copied());
    if set.len() != face.len() {
        return Err(Error::InvalidInput("repeated facet index".into()));
    }
    if let Ok(lat) = p.face_lattice() {
        if !lat.is_nonempty(set) {
            return Err(Error::InvalidInput("facets do not meet in a face".into()));
        }
    }
    let m: Vec<Vec<BigInt>> = face.iter().map(|&s| normals[s].clone()).collect();
    let mf: Mat<BigRational> = m.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
    if !m.is_empty() && rank(&mf) != m.len() {
        return Err(Error::InvalidInput("face normals are linearly dependent".into()));
    }
    let prod = smith_normal_form(m).into_iter().fold(BigInt::one(), |acc, d| acc * d);
    prod.to_u64().ok_or_else(|| Error::InvalidInput("stabilizer order overflows u64".into()))
}
