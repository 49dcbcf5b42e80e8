//! Quotients of `S³ × S³`: the data `C = (α γ; β δ)`, `c = (c_1, c_2)`.
//!
//! Labels are `L_{j0} = μ_j`, `L_{j∞} = Σ_i μ_i C_ij − c_j` and
//! `L_{j1} = −L_{j0} − L_{j∞}`, ordered `(L_10, L_11, L_20, L_21)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::affine::AffineFunction;
use crate::cube::{CubeAnsatz, CubePolynomial};
use crate::curvature::{abreu_scalar, affine_fit, wp_scalar};
use crate::error::{Error, Result};
use crate::levi::{moment, LeviSetup, SigmaPoint};
use crate::polytope::{detect_projective_cube, Grouping, LabelledPolytope};
use crate::potential::levi_kahler_potential;
use crate::scalar::{nullspace, rank, rational_from_f64, Scalar};

/// Entries this small count as zero when reading floating-point input.
pub const ZERO_TOL: f64 = 1e-10;
/// Relative affine-fit residual below which `s` counts as affine.
pub const EXTREMAL_TOL: f64 = 1e-8;
/// Relative variation below which `s_{J,w,4}` counts as constant.
pub const CONSTANT_TOL: f64 = 1e-6;

type Q = BigRational;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadData {
    c_mat: [[Q; 2]; 2],
    c: [Q; 2],
}

fn qf(x: f64) -> Result<Q> {
    if x.abs() <= ZERO_TOL {
        return Ok(Q::zero());
    }
    rational_from_f64(x).ok_or_else(|| Error::InvalidInput("non-finite entry".into()))
}

impl QuadData {
    pub fn new(c_mat: [[Q; 2]; 2], c: [Q; 2]) -> Result<Self> {
        if !(c[0].is_positive() && c[1].is_positive()) {
            return Err(Error::InvalidInput("c_i must be positive".into()));
        }
        let d = Self { c_mat, c };
        d.check_positivity()?;
        Ok(d)
    }

    /// Floats are read exactly, except that entries below `ZERO_TOL` become 0.
    pub fn from_f64(c_mat: [[f64; 2]; 2], c: [f64; 2]) -> Result<Self> {
        Self::new([[qf(c_mat[0][0])?, qf(c_mat[0][1])?], [qf(c_mat[1][0])?, qf(c_mat[1][1])?]], [qf(c[0])?, qf(c[1])?])
    }

    /// `(α, β, γ, δ)`.
    pub fn entries(&self) -> [Q; 4] {
        [self.c_mat[0][0].clone(), self.c_mat[1][0].clone(), self.c_mat[0][1].clone(), self.c_mat[1][1].clone()]
    }

    pub fn c_matrix(&self) -> &[[Q; 2]; 2] {
        &self.c_mat
    }

    pub fn c(&self) -> &[Q; 2] {
        &self.c
    }

    fn f(&self) -> ([f64; 4], [f64; 2]) {
        let [a, b, g, d] = self.entries();
        ([a.to_f64(), b.to_f64(), g.to_f64(), d.to_f64()], [self.c[0].to_f64(), self.c[1].to_f64()])
    }

    /// The other ordering of the two factors.
    pub fn swapped(&self) -> Self {
        let m = &self.c_mat;
        Self { c_mat: [[m[1][1].clone(), m[1][0].clone()], [m[0][1].clone(), m[0][0].clone()]], c: [self.c[1].clone(), self.c[0].clone()] }
    }

    /// `Z` and both numerators `(1+δσ_2)c_1 − βσ_2c_2`, `(1+ασ_1)c_2 − γσ_1c_1`
    /// are affine in each σ_i, so positivity on the square is a corner check.
    fn check_positivity(&self) -> Result<()> {
        let [a, b, g, d] = self.entries();
        let [c1, c2] = self.c.clone();
        let one = Q::one();
        for (s1, s2) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let (s1, s2) = (Q::from_i64(s1), Q::from_i64(s2));
            let z = (&one + &a * &s1) * (&one + &d * &s2) - &b * &g * &s1 * &s2;
            let n1 = (&one + &d * &s2) * &c1 - &b * &s2 * &c2;
            let n2 = (&one + &a * &s1) * &c2 - &g * &s1 * &c1;
            if !z.is_positive() {
                return Err(Error::PositivityFailure(format!("Z = {z} at σ = ({s1}, {s2})")));
            }
            if !(n1.is_positive() && n2.is_positive()) {
                return Err(Error::PositivityFailure(format!("characteristic function vanishes at σ = ({s1}, {s2})")));
            }
        }
        Ok(())
    }

    pub fn labels_exact(&self) -> Vec<AffineFunction<Q>> {
        let mut out = Vec::with_capacity(4);
        for j in 0..2 {
            let l0 = AffineFunction::<Q>::coordinate(j, 2);
            let linf = AffineFunction::new(-self.c[j].clone(), vec![self.c_mat[0][j].clone(), self.c_mat[1][j].clone()]);
            let l1 = l0.add(&linf).neg();
            out.push(l0);
            out.push(l1);
        }
        out
    }

    /// `L_{j∞}` for `j = 1, 2`.
    pub fn infinity_labels(&self) -> [AffineFunction; 2] {
        let l = self.labels_exact();
        [l[0].add(&l[1]).neg().to_f64(), l[2].add(&l[3]).neg().to_f64()]
    }

    pub fn z(&self, s1: f64, s2: f64) -> f64 {
        let ([a, b, g, d], _) = self.f();
        1.0 + a * s1 + d * s2 + (a * d - b * g) * s1 * s2
    }

    /// Momenta from the quotient: rational in σ.
    pub fn moment_from_sigma(&self, s1: f64, s2: f64) -> [f64; 2] {
        let ([a, b, g, d], [c1, c2]) = self.f();
        let z = self.z(s1, s2);
        [(c1 * s1 * (1.0 + d * s2) - c2 * b * s1 * s2) / z, (-c1 * g * s1 * s2 + c2 * (1.0 + a * s1) * s2) / z]
    }

    /// The torus metric in the `dt` basis read off from σ directly, in the
    /// normalization of `(Hess G)^{-1}`: twice the bare expression.
    pub fn toral_metric(&self, s1: f64, s2: f64) -> DMatrix<f64> {
        let ([a, b, g, d], [c1, c2]) = self.f();
        let z3 = 0.5 * libm::pow(self.z(s1, s2), 3.0);
        let f1 = s1 * (1.0 - s1) * ((1.0 + d * s2) * c1 - b * s2 * c2) / z3;
        let v1 = [1.0 + d * s2, -g * s2];
        let f2 = s2 * (1.0 - s2) * ((1.0 + a * s1) * c2 - g * s1 * c1) / z3;
        let v2 = [-b * s1, 1.0 + a * s1];
        DMatrix::from_fn(2, 2, |i, j| f1 * v1[i] * v1[j] + f2 * v2[i] * v2[j])
    }
}

/// Grouped quadrilateral and its Levi setup, cross-checked against the
/// moment map of the setup at a 3×3 grid of σ.
pub fn quad_setup(data: &QuadData) -> Result<(LabelledPolytope, LeviSetup)> {
    let grouping = Grouping::consecutive(&[2, 2]);
    let p = LabelledPolytope::from_exact(data.labels_exact())?.with_grouping(grouping.clone())?;
    let setup = LeviSetup::from_labels(p.facets(), &grouping)?;
    let scale = p.diameter().max(1.0);
    for s1 in [0.0, 0.5, 1.0] {
        for s2 in [0.0, 0.5, 1.0] {
            let sp = SigmaPoint::new(vec![s1, 1.0 - s1, s2, 1.0 - s2], &grouping)?;
            let mu = moment(&sp, &setup)?.mu;
            let want = data.moment_from_sigma(s1, s2);
            let err = (mu[0] - want[0]).abs().max((mu[1] - want[1]).abs());
            if err > 1e-10 * scale {
                return Err(Error::SelfCheckFailure(format!("moment at σ = ({s1}, {s2}) off by {err:e}")));
            }
        }
    }
    Ok((p, setup))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmbitoricTag {
    Product,
    Calabi,
    Orthotoric,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmbitoricClass {
    pub tag: AmbitoricTag,
    pub beta_zero: bool,
    pub gamma_zero: bool,
    /// `dim(g ∩ ab_i)` for the two factor tori.
    pub intersections: [usize; 2],
}

/// Tag from the vanishing of β and γ, confirmed by intersecting
/// `g = ker u` with the factor subalgebras.
pub fn classify(data: &QuadData) -> Result<AmbitoricClass> {
    let [_, b, g, _] = data.entries();
    let beta_zero = b.is_zero();
    let gamma_zero = g.is_zero();
    let labels = data.labels_exact();
    let u: Vec<Vec<Q>> = (0..2).map(|r| labels.iter().map(|l| l.a[r].clone()).collect()).collect();
    let ker = nullspace(&u, 4);
    let mut intersections = [0; 2];
    for (i, dim) in intersections.iter_mut().enumerate() {
        let mut rows = ker.clone();
        for s in [2 * i, 2 * i + 1] {
            let mut e = vec![Q::zero(); 4];
            e[s] = Q::one();
            rows.push(e);
        }
        *dim = ker.len() + 2 - rank(&rows);
    }
    let tag = match (beta_zero, gamma_zero) {
        (true, true) => AmbitoricTag::Product,
        (false, false) => AmbitoricTag::Orthotoric,
        _ => AmbitoricTag::Calabi,
    };
    if intersections != [beta_zero as usize, gamma_zero as usize] {
        return Err(Error::SelfCheckFailure(format!("subspace criterion gives {intersections:?} for {tag:?}")));
    }
    Ok(AmbitoricClass { tag, beta_zero, gamma_zero, intersections })
}

/// Segre coordinates `ξ_1 = σ_1/(c_2 − k_1σ_1)`, `ξ_2 = σ_2/(c_1 − k_2σ_2)`
/// with `k_1 = c_1γ − c_2α`, `k_2 = c_2β − c_1δ`, and
/// `A_1 = c_1c_2 ξ(1 + k_1ξ)(1 + (k_1 − c_2)ξ)`, likewise `A_2` with `c_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segre {
    pub k: [f64; 2],
    pub a1: CubePolynomial,
    pub a2: CubePolynomial,
    c: [f64; 2],
    b: [f64; 2],
}

impl Segre {
    pub fn xi_from_sigma(&self, s1: f64, s2: f64) -> [f64; 2] {
        [s1 / (self.c[1] - self.k[0] * s1), s2 / (self.c[0] - self.k[1] * s2)]
    }

    /// `b = (1, c_1γ, c_2β)`; quad momenta are `c_1c_2` times the cube's.
    pub fn cube_ansatz(&self) -> Result<CubeAnsatz> {
        CubeAnsatz::new(vec![1.0, self.b[0], self.b[1]], vec![self.a1.clone(), self.a2.clone()])
    }
}

fn segre_poly(c_own: f64, c_other: f64, k: f64) -> Result<CubePolynomial> {
    // Roots 0, 1/(c_other − k) and −1/k.
    let top = 1.0 / (c_other - k);
    if k == 0.0 {
        CubePolynomial::from_roots(-c_own * c_other * c_other, 0.0, top, None)
    } else {
        CubePolynomial::from_roots(c_own * c_other * k * (k - c_other), 0.0, top, Some(-1.0 / k))
    }
}

pub fn segre_coordinates(data: &QuadData) -> Result<Segre> {
    let ([a, b, g, d], [c1, c2]) = data.f();
    let k = [c1 * g - c2 * a, c2 * b - c1 * d];
    let s = Segre { k, a1: segre_poly(c1, c2, k[0])?, a2: segre_poly(c2, c1, k[1])?, c: [c1, c2], b: [c1 * g, c2 * b] };
    for s1 in [0.1, 0.5, 0.9] {
        for s2 in [0.2, 0.7] {
            let [x1, x2] = s.xi_from_sigma(s1, s2);
            let (d1, d2) = (x1 / s1, x2 / s2);
            let lhs = 1.0 + c1 * g * x1 + c2 * b * x2;
            let rhs = c1 * c2 * d1 * d2 * data.z(s1, s2);
            if (lhs - rhs).abs() > 1e-10 * lhs.abs().max(1.0) {
                return Err(Error::SelfCheckFailure(format!("Segre identity off by {:e}", lhs - rhs)));
            }
        }
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtremalReport {
    pub class: AmbitoricClass,
    pub extremal: bool,
    /// Relative affine-fit residual of `s`.
    pub residual: f64,
    /// The fitted `s` when extremal.
    pub extremal_function: Option<AffineFunction>,
    /// Verdict of the closed-form criterion, where one applies.
    pub closed_form: Option<bool>,
    /// Positive affine function vanishing where opposite sides meet.
    pub w: AffineFunction,
    /// Whether `s_{J,w,4}` is constant.
    pub einstein_maxwell: bool,
    pub wp_variation: f64,
}

/// Calabi type with `β = 0`, in `x = 1 + c_1γξ_1 = 1/μ_0`, `y = −c_1γξ_2`,
/// `A(x) = (c_1γ)²A_1(ξ_1)` and `B(y) = (c_1γ)²A_2(ξ_2)`. For quadratic `B`,
/// `s·x = −(A''(0) + B''(0))x² − 6A'(0)x − 12A(0)`, and affine functions of
/// μ are `x`-multiples of affine functions of `(x, y)`. So `h` is extremal
/// iff `B` has degree 2 (`δ = 0`) and `A''(0) = −B''(0)`.
pub fn calabi_closed_form(data: &QuadData) -> Result<bool> {
    let ([_, b, g, d], [c1, _]) = data.f();
    if b != 0.0 || g == 0.0 {
        return Err(Error::InvalidInput("closed form needs β = 0 and γ ≠ 0".into()));
    }
    if d != 0.0 {
        return Ok(false);
    }
    let s = segre_coordinates(data)?;
    // A''(x) = A_1''(ξ_1) and B''(y) = A_2''(ξ_2); x = 0 is ξ_1 = −1/(c_1γ).
    let lhs = s.a1.d2(-1.0 / (c1 * g));
    let rhs = -s.a2.d2(0.0);
    Ok((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()).max(1.0))
}

/// Interior σ grid of `k × k` cell centres.
pub fn sigma_grid(k: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            out.push([(i as f64 + 0.5) / k as f64, (j as f64 + 0.5) / k as f64]);
        }
    }
    out
}

pub fn extremal_check(data: &QuadData) -> Result<ExtremalReport> {
    let class = classify(data)?;
    let (p, _) = quad_setup(data)?;
    let grouping = p.grouping().cloned().ok_or_else(|| Error::InvalidInput("ungrouped".into()))?;
    let g = levi_kahler_potential(&p, &grouping)?;
    let w =
        detect_projective_cube(&p, &grouping)?.ok_or_else(|| Error::SelfCheckFailure("quadrilateral is not a projective cube".into()))?;
    let mut s_pts = Vec::new();
    let mut wp_vals = Vec::new();
    for [s1, s2] in sigma_grid(8) {
        let mu = data.moment_from_sigma(s1, s2).to_vec();
        s_pts.push((mu.clone(), abreu_scalar(&g, &mu)?));
        wp_vals.push(wp_scalar(&g, &mu, &w, 4.0)?);
    }
    let fit = affine_fit(&s_pts)?;
    let extremal = fit.max_residual < EXTREMAL_TOL;
    let lo = wp_vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = wp_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let wp_variation = (hi - lo) / lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let einstein_maxwell = wp_variation < CONSTANT_TOL;
    let closed_form = match class.tag {
        AmbitoricTag::Product => Some(true),
        AmbitoricTag::Calabi if class.beta_zero => Some(calabi_closed_form(data)?),
        AmbitoricTag::Calabi => Some(calabi_closed_form(&data.swapped())?),
        AmbitoricTag::Orthotoric => None,
    };
    if let Some(cf) = closed_form {
        if cf != extremal {
            return Err(Error::SelfCheckFailure(format!("closed form says {cf}, affine fit residual {:e}", fit.max_residual)));
        }
    }
    // Off the product case extremality and constant s_{J,w,4} coincide.
    if class.tag != AmbitoricTag::Product && einstein_maxwell != extremal {
        return Err(Error::SelfCheckFailure(format!("extremal = {extremal} but s_J,w,4 variation {wp_variation:e}")));
    }
    Ok(ExtremalReport {
        class,
        extremal,
        residual: fit.max_residual,
        extremal_function: extremal.then_some(fit.function),
        closed_form,
        w,
        einstein_maxwell,
        wp_variation,
    })
}
