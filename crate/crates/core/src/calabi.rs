//! Toric bundles over products of toric bases: the polytope
//! `Δ̂ = {L_i(x) ≥ 0, (⟨p_j, x⟩ + c_j) L^j_r ≥ 0}`, composition of potentials,
//! and the CSC family over `ℂP¹` with an orthotoric simplex fibre.
//!
//! Coordinates on `Δ̂` are `(x, ŷ_1, …, ŷ_N)` with the lifted base momenta
//! `ŷ_j = (⟨p_j, x⟩ + c_j) y_j`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::affine::AffineFunction;
use crate::curvature::abreu_scalar_exact;
use crate::error::{Error, Result};
use crate::polytope::{Grouping, LabelledPolytope};
use crate::potential::{levi_kahler_potential, SymplecticPotential};
use crate::sampling;
use crate::scalar::{rational, rational_from_f64, Scalar};

type Q = BigRational;

/// Spread allowed in `G_Δ̂ − composed` over the sample.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Relative spread allowed in the scalar curvature of a CSC certificate.
pub const CSC_TOL: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct BaseFactor {
    pub polytope: LabelledPolytope,
    pub p: Vec<Q>,
    pub c: Q,
}

#[derive(Clone, Debug)]
pub struct FibrationData {
    pub fibre: LabelledPolytope,
    pub bases: Vec<BaseFactor>,
}

fn exact_labels(p: &LabelledPolytope) -> Result<Vec<AffineFunction<Q>>> {
    match p.exact_facets() {
        Some(ex) => Ok(ex.to_vec()),
        None => p
            .facets()
            .iter()
            .map(|l| {
                let conv = |x: f64| rational_from_f64(x).ok_or_else(|| Error::InvalidInput("non-finite label".into()));
                Ok(AffineFunction::new(conv(l.a0)?, l.a.iter().map(|&x| conv(x)).collect::<Result<_>>()?))
            })
            .collect(),
    }
}

fn grouping_of(p: &LabelledPolytope) -> Result<&Grouping> {
    p.grouping().ok_or_else(|| Error::InvalidInput("polytope has no grouping".into()))
}

impl FibrationData {
    pub fn new(fibre: LabelledPolytope, bases: Vec<BaseFactor>) -> Result<Self> {
        grouping_of(&fibre)?;
        let l = fibre.dim();
        for b in &bases {
            grouping_of(&b.polytope)?;
            if b.p.len() != l {
                return Err(Error::InvalidInput(format!("p has {} entries for a fibre of dimension {l}", b.p.len())));
            }
        }
        let d = Self { fibre, bases };
        // ⟨p_j, x⟩ + c_j is affine, so positivity on the fibre is a vertex check.
        let scale = 1.0 + d.fibre.diameter();
        for v in d.fibre.vertices() {
            for j in 0..d.bases.len() {
                if !(d.weight(j, &v) > 1e-12 * scale) {
                    return Err(Error::PositivityFailure(format!("⟨p_{j}, x⟩ + c_{j} ≤ 0 at fibre vertex {v:?}")));
                }
            }
        }
        Ok(d)
    }

    /// `⟨p_j, x⟩ + c_j`.
    pub fn weight(&self, j: usize, x: &[f64]) -> f64 {
        let b = &self.bases[j];
        b.c.to_f64() + b.p.iter().zip(x).map(|(p, x)| p.to_f64() * x).sum::<f64>()
    }

    pub fn total_dim(&self) -> usize {
        self.fibre.dim() + self.bases.iter().map(|b| b.polytope.dim()).sum::<usize>()
    }

    /// `(x, y_1, …, y_N) ↦ (x, ŷ_1, …, ŷ_N)`.
    pub fn lift(&self, x: &[f64], ys: &[Vec<f64>]) -> Vec<f64> {
        let mut out = x.to_vec();
        for (j, y) in ys.iter().enumerate() {
            let w = self.weight(j, x);
            out.extend(y.iter().map(|v| v * w));
        }
        out
    }

    /// Inverse of [`lift`](Self::lift).
    pub fn split(&self, point: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let l = self.fibre.dim();
        let x = point[..l].to_vec();
        let mut off = l;
        let mut ys = Vec::with_capacity(self.bases.len());
        for (j, b) in self.bases.iter().enumerate() {
            let d = b.polytope.dim();
            let w = self.weight(j, &x);
            ys.push(point[off..off + d].iter().map(|v| v / w).collect());
            off += d;
        }
        (x, ys)
    }
}

/// Fibre labels verbatim, base labels homogenized; groups are the fibre
/// groups followed by the base groups.
pub fn hat_polytope(data: &FibrationData) -> Result<LabelledPolytope> {
    let l = data.fibre.dim();
    let n = data.total_dim();
    let mut labels = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (lab, _) in exact_labels(&data.fibre)?.into_iter().zip(0..) {
        let mut a = lab.a.clone();
        a.resize(n, Q::zero());
        labels.push(AffineFunction::new(lab.a0, a));
    }
    groups.extend(grouping_of(&data.fibre)?.groups().iter().cloned());
    let mut off = l;
    for b in &data.bases {
        let d = b.polytope.dim();
        let start = labels.len();
        for lab in exact_labels(&b.polytope)? {
            let mut a = vec![Q::zero(); n];
            for (k, p) in b.p.iter().enumerate() {
                a[k] = &lab.a0 * p;
            }
            for (k, v) in lab.a.iter().enumerate() {
                a[off + k] = v.clone();
            }
            labels.push(AffineFunction::new(&lab.a0 * &b.c, a));
        }
        groups.extend(grouping_of(&b.polytope)?.groups().iter().map(|g| g.iter().map(|s| s + start).collect()));
        off += d;
    }
    LabelledPolytope::from_exact(labels)?.with_grouping(Grouping::new(groups))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComposeReport {
    pub points: usize,
    /// `max − min` of `G_Δ̂ − (G_V + Σ_j w_j G_j(ŷ_j/w_j))`.
    pub spread: f64,
    pub offset: f64,
}

/// `G_V(x) + Σ_j w_j(x) G_j(ŷ_j / w_j(x))` with `w_j = ⟨p_j, x⟩ + c_j`.
pub fn composed_potential(data: &FibrationData, fibre: &SymplecticPotential, bases: &[SymplecticPotential], point: &[f64]) -> Result<f64> {
    let (x, ys) = data.split(point);
    let mut total = fibre.eval(&x)?;
    for (j, (g, y)) in bases.iter().zip(&ys).enumerate() {
        total += data.weight(j, &x) * g.eval(y)?;
    }
    Ok(total)
}

/// Compares the LK potential of `Δ̂` with the composition of the fibre and
/// base LK potentials at `n` random interior points.
pub fn compose_check(data: &FibrationData, n: usize, seed: u64) -> Result<ComposeReport> {
    let hat = hat_polytope(data)?;
    let g_hat = levi_kahler_potential(&hat, grouping_of(&hat)?)?;
    let g_v = levi_kahler_potential(&data.fibre, grouping_of(&data.fibre)?)?;
    let g_b: Vec<SymplecticPotential> =
        data.bases.iter().map(|b| levi_kahler_potential(&b.polytope, grouping_of(&b.polytope)?)).collect::<Result<_>>()?;
    let verts = hat.vertices();
    let mut rng = sampling::rng(seed);
    let (mut lo, mut hi, mut scale) = (f64::INFINITY, f64::NEG_INFINITY, 1.0f64);
    for _ in 0..n {
        let pt = sampling::convex_combination(&mut rng, &verts);
        let a = g_hat.eval(&pt)?;
        let b = composed_potential(data, &g_v, &g_b, &pt)?;
        lo = lo.min(a - b);
        hi = hi.max(a - b);
        scale = scale.max(a.abs());
    }
    let spread = hi - lo;
    if !(spread <= IDENTITY_TOL * scale) {
        return Err(Error::IdentityFailure(spread));
    }
    Ok(ComposeReport { points: n, spread, offset: 0.5 * (hi + lo) })
}

/// `det(Hess G_Δ̂)^{-1} / (∏_k L_k(x) · ∏_j w_j^{d_j} ∏_r L^j_r(y_j))`.
pub fn det_ratio(data: &FibrationData, g_hat: &SymplecticPotential, point: &[f64]) -> Result<f64> {
    let h: DMatrix<f64> = g_hat.metric_h(point)?;
    let (x, ys) = data.split(point);
    let mut denom: f64 = data.fibre.label_values(&x).iter().product();
    for (j, (b, y)) in data.bases.iter().zip(&ys).enumerate() {
        denom *= libm::pow(data.weight(j, &x), b.polytope.dim() as f64) * b.polytope.label_values(y).iter().product::<f64>();
    }
    Ok(h.determinant() / denom)
}

/// `F(x) = −c(x² − 1)(x − β)(x − η)` with `|β| < 1`, `η < −1`, `c > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct HfkgData {
    pub beta: Q,
    pub eta: Q,
    pub c: Q,
}

impl HfkgData {
    pub fn new(beta: Q, eta: Q, c: Q) -> Result<Self> {
        let one = Q::one();
        if !(beta.abs() < one) {
            return Err(Error::InvalidInput("need |β| < 1".into()));
        }
        if !(eta < -one.clone()) {
            return Err(Error::InvalidInput("need η < −1".into()));
        }
        if !c.is_positive() {
            return Err(Error::InvalidInput("need c > 0".into()));
        }
        Ok(Self { beta, eta, c })
    }

    /// `β = 1/n`, `η = −n`, `c = 2/(3n² + 1)`, CSC with `s = 4`.
    pub fn family(n: i64) -> Result<Self> {
        Self::new(rational(1, n), rational(-n, 1), rational(2, 3 * n * n + 1))
    }

    pub fn f(&self, x: &Q) -> Q {
        let one = Q::one();
        -&self.c * (x * x - &one) * (x - &self.beta) * (x - &self.eta)
    }

    /// `F/p_c = −c(x² − 1)(x − β)`.
    pub fn f_over_pc(&self, x: &Q) -> Q {
        -&self.c * (x * x - Q::one()) * (x - &self.beta)
    }

    /// `(F/p_c)'`.
    pub fn f_over_pc_prime(&self, x: &Q) -> Q {
        let two = rational(2, 1);
        -&self.c * (&two * x * (x - &self.beta) + x * x - Q::one())
    }

    /// `F''(η) = −2c(3η² − 2βη − 1)`.
    pub fn f_second_at_eta(&self) -> Q {
        let e = &self.eta;
        -rational(2, 1) * &self.c * (rational(3, 1) * e * e - rational(2, 1) * &self.beta * e - Q::one())
    }

    /// `(ξ_1, ξ_2) ↦ (σ_1, σ_2) = (ξ_1 + ξ_2, ξ_1ξ_2)`.
    pub fn sigma(xi1: f64, xi2: f64) -> [f64; 2] {
        [xi1 + xi2, xi1 * xi2]
    }

    /// `p = (−η, 1)`, `c = η²`, from `(η − ξ_1)(η − ξ_2) = η² − ησ_1 + σ_2`.
    pub fn base_weight(&self) -> (Vec<Q>, Q) {
        (vec![-self.eta.clone(), Q::one()], &self.eta * &self.eta)
    }
}

/// The labelled simplex `L_{−1}, L_{+1}, L_β` in `(σ_1, σ_2)` with
/// `c_r (F/p_c)'(r) = 2`.
pub fn hfkg_fibre(data: &HfkgData) -> Result<LabelledPolytope> {
    let one = Q::one();
    let b = &data.beta;
    let coef = |r: &Q| rational(2, 1) / data.f_over_pc_prime(r);
    let (cm, cp, cb) = (coef(&-one.clone()), coef(&one), coef(b));
    let labels = vec![
        AffineFunction::new(-&cm, vec![-&cm, -&cm]),
        AffineFunction::new(-&cp, vec![cp.clone(), -&cp]),
        AffineFunction::new(-&cb * b * b, vec![&cb * b, -&cb]),
    ];
    // Each label is a product of signed factors on the box; check a grid.
    let (bf, k) = (b.to_f64(), 10);
    for i in 0..=k {
        for j in 0..=k {
            let xi1 = -1.0 + (bf + 1.0) * i as f64 / k as f64;
            let xi2 = bf + (1.0 - bf) * j as f64 / k as f64;
            let s = HfkgData::sigma(xi1, xi2);
            for (r, l) in labels.iter().enumerate() {
                let v = l.to_f64().eval(&s);
                if v < -1e-12 {
                    return Err(Error::SignFailure(format!("label {r} is {v:e} at ξ = ({xi1}, {xi2})")));
                }
            }
        }
    }
    LabelledPolytope::from_exact(labels)?.with_grouping(Grouping::consecutive(&[3]))
}

/// Unit interval `[0, 4/s]`, whose LK metric has scalar curvature `s`.
pub fn base_interval(s: &Q) -> Result<LabelledPolytope> {
    let len = rational(4, 1) / s;
    LabelledPolytope::from_exact(vec![AffineFunction::new(Q::zero(), vec![Q::one()]), AffineFunction::new(len, vec![-Q::one()])])?
        .with_grouping(Grouping::consecutive(&[2]))
}

/// The fibration over the interval with weight `(η − ξ_1)(η − ξ_2)`.
pub fn hfkg_fibration(data: &HfkgData, s: &Q) -> Result<FibrationData> {
    let (p, c) = data.base_weight();
    FibrationData::new(hfkg_fibre(data)?, vec![BaseFactor { polytope: base_interval(s)?, p, c }])
}

#[derive(Clone, Debug, PartialEq)]
pub struct CscReport {
    /// `2c(3η² − 2βη − 1)`, which must equal `s`.
    pub condition_value: Q,
    pub points: usize,
    pub scalar_mean: f64,
    pub scalar_min: f64,
    pub scalar_max: f64,
    pub relative_spread: f64,
}

/// Interior grid of `Δ̂`: cell centres of `[−1, β] × [β, 1] × [0, 1]` in
/// `(ξ_1, ξ_2, z)`, with `ŷ = z·len·w(x)`.
pub fn hfkg_grid(data: &HfkgData, fib: &FibrationData, k: usize) -> Vec<Vec<f64>> {
    let b = data.beta.to_f64();
    let len = fib.bases[0].polytope.vertices().iter().map(|v| v[0]).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(k * k * k);
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                let t = |q: usize| (q as f64 + 0.5) / k as f64;
                let x = HfkgData::sigma(-1.0 + (b + 1.0) * t(i), b + (1.0 - b) * t(j));
                out.push(fib.lift(&x, &[vec![len * t(l)]]));
            }
        }
    }
    out
}

/// Certifies the CSC family member: the exact condition `F''(η) = −s`, then
/// constancy of the Abreu scalar of the LK potential of `Δ̂` on a `k³` grid.
pub fn csc_certify(data: &HfkgData, s: &Q, k: usize) -> Result<CscReport> {
    if !s.is_positive() {
        return Err(Error::InvalidInput("base scalar curvature must be positive".into()));
    }
    let condition_value = -data.f_second_at_eta();
    if &condition_value != s {
        return Err(Error::ConditionFailure(format!("2c(3η² − 2βη − 1) = {condition_value}, s = {s}")));
    }
    let fib = hfkg_fibration(data, s)?;
    let hat = hat_polytope(&fib)?;
    let g = levi_kahler_potential(&hat, grouping_of(&hat)?)?;
    let pts = hfkg_grid(data, &fib, k);
    let vals: Vec<f64> = pts.iter().map(|p| abreu_scalar_exact(&g, p)).collect::<Result<_>>()?;
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let relative_spread = (hi - lo) / mean.abs().max(f64::MIN_POSITIVE);
    if !(relative_spread < CSC_TOL) {
        return Err(Error::NonConstantScalar(relative_spread));
    }
    Ok(CscReport { condition_value, points: vals.len(), scalar_mean: mean, scalar_min: lo, scalar_max: hi, relative_spread })
}
