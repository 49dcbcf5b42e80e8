//! Projective cubes: the diagonal ansatz in coordinates `ξ_i = μ_i/μ_0`.
//!
//! The chart is `μ = (μ_1, …, μ_m)` with `μ_0 = (1 − Σ_{i≥1} b_i μ_i)/b_0`,
//! so `b_0 ≠ 0` is required.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::affine::AffineFunction;
use crate::error::{Error, Result};
use crate::polytope::{Grouping, LabelledPolytope};
use crate::scalar::rational_from_f64;

/// Smallest accepted gap between distinct roots.
pub const ROOT_GAP: f64 = 1e-9;
/// Agreement required between stored roots and coefficients.
pub const ROOT_CHECK: f64 = 1e-10;

/// `A(y) = a ∏_{r∈H} (y − α_r)` with `H = {0, 1, ∞}`; `α_∞ = None` means
/// degree 2.
#[derive(Clone, Debug, PartialEq)]
pub struct CubePolynomial {
    /// `c_0 + c_1 y + c_2 y² + c_3 y³`.
    coeffs: [f64; 4],
    lead: f64,
    alpha0: f64,
    alpha1: f64,
    alpha_inf: Option<f64>,
}

fn q(x: f64) -> Result<BigRational> {
    rational_from_f64(x).ok_or_else(|| Error::InvalidInput("non-finite coefficient".into()))
}

impl CubePolynomial {
    /// Positive on `(α_0, α_1)` with `α_0 < α_1`; `α_∞` outside `[α_0, α_1]`.
    pub fn from_roots(lead: f64, alpha0: f64, alpha1: f64, alpha_inf: Option<f64>) -> Result<Self> {
        let r = [alpha0, alpha1];
        let coeffs = match alpha_inf {
            None => [lead * r[0] * r[1], -lead * (r[0] + r[1]), lead, 0.0],
            Some(c) => [-lead * r[0] * r[1] * c, lead * (r[0] * r[1] + r[0] * c + r[1] * c), -lead * (r[0] + r[1] + c), lead],
        };
        Self::new(coeffs, alpha0, alpha1, alpha_inf)
    }

    /// From coefficients and claimed roots, verified against each other.
    pub fn new(coeffs: [f64; 4], alpha0: f64, alpha1: f64, alpha_inf: Option<f64>) -> Result<Self> {
        let all = [Some(alpha0), Some(alpha1), alpha_inf];
        if all.iter().flatten().any(|x| !x.is_finite()) || coeffs.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateRoots("non-finite data".into()));
        }
        if !(alpha1 - alpha0 > ROOT_GAP) {
            return Err(Error::DegenerateRoots(format!("need α0 < α1, got {alpha0}, {alpha1}")));
        }
        let lead = match alpha_inf {
            None => {
                if coeffs[3] != 0.0 {
                    return Err(Error::DegenerateRoots("cubic term without a root at α∞".into()));
                }
                coeffs[2]
            }
            Some(c) => {
                if (c - alpha0).abs() <= ROOT_GAP || (c - alpha1).abs() <= ROOT_GAP {
                    return Err(Error::DegenerateRoots("repeated root".into()));
                }
                if alpha0 < c && c < alpha1 {
                    return Err(Error::DegenerateRoots("α∞ inside the interval".into()));
                }
                coeffs[3]
            }
        };
        let p = Self { coeffs, lead, alpha0, alpha1, alpha_inf };
        let scale = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max)
            * libm::pow(all.iter().flatten().map(|x| x.abs()).fold(1.0, f64::max), p.degree() as f64);
        for r in all.iter().flatten() {
            if p.eval(*r).abs() > ROOT_CHECK * scale {
                return Err(Error::DegenerateRoots(format!("{r} is not a root")));
            }
        }
        if lead == 0.0 || !(p.eval(0.5 * (alpha0 + alpha1)) > 0.0) {
            return Err(Error::PositivityFailure("A is not positive on (α0, α1)".into()));
        }
        Ok(p)
    }

    pub fn degree(&self) -> usize {
        if self.alpha_inf.is_some() {
            3
        } else {
            2
        }
    }

    pub fn coefficients(&self) -> [f64; 4] {
        self.coeffs
    }

    pub fn leading(&self) -> f64 {
        self.lead
    }

    pub fn roots(&self) -> (f64, f64, Option<f64>) {
        (self.alpha0, self.alpha1, self.alpha_inf)
    }

    pub fn eval(&self, y: f64) -> f64 {
        let c = &self.coeffs;
        ((c[3] * y + c[2]) * y + c[1]) * y + c[0]
    }

    pub fn d1(&self, y: f64) -> f64 {
        let c = &self.coeffs;
        (3.0 * c[3] * y + 2.0 * c[2]) * y + c[1]
    }

    pub fn d2(&self, y: f64) -> f64 {
        6.0 * self.coeffs[3] * y + 2.0 * self.coeffs[2]
    }

    /// `∫^y ds/A(s) = Σ_r log|y − α_r| / A'(α_r)` up to a constant.
    pub fn inverse_antiderivative(&self, y: f64) -> f64 {
        let roots = [Some(self.alpha0), Some(self.alpha1), self.alpha_inf];
        roots.iter().flatten().map(|&r| libm::log((y - r).abs()) / self.d1(r)).sum()
    }

    /// `A'(α)` from the factored form, exactly.
    fn derivative_at_root_exact(&self, r: usize) -> Result<BigRational> {
        let mut roots = vec![q(self.alpha0)?, q(self.alpha1)?];
        if let Some(c) = self.alpha_inf {
            roots.push(q(c)?);
        }
        let mut d = q(self.lead)?;
        for (k, x) in roots.iter().enumerate() {
            if k != r {
                d *= &roots[r] - x;
            }
        }
        Ok(d)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CubeAnsatz {
    m: usize,
    b: Vec<f64>,
    polys: Vec<CubePolynomial>,
}

impl CubeAnsatz {
    pub fn new(b: Vec<f64>, polys: Vec<CubePolynomial>) -> Result<Self> {
        let m = polys.len();
        if b.len() != m + 1 || m == 0 {
            return Err(Error::InvalidInput(format!("b has {} entries for {m} polynomials", b.len())));
        }
        if b[0] == 0.0 || b.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("b_0 must be a nonzero finite number".into()));
        }
        let a = Self { m, b, polys };
        // b_0 + Σ b_i ξ_i is affine, so its minimum on the box is at a corner.
        for corner in 0..(1usize << m) {
            let xi: Vec<f64> = (0..m).map(|i| if corner >> i & 1 == 0 { a.polys[i].alpha0 } else { a.polys[i].alpha1 }).collect();
            if !(a.denominator(&xi) > 0.0) {
                return Err(Error::CharacteristicHyperplane);
            }
        }
        Ok(a)
    }

    /// `b = (1, 0, …, 0)` and `A_i = 2ξ(1 − ξ)`: the unit cube.
    pub fn unit_cube(m: usize) -> Self {
        let mut b = vec![0.0; m + 1];
        b[0] = 1.0;
        let polys = (0..m).map(|_| CubePolynomial::from_roots(-2.0, 0.0, 1.0, None).expect("round interval")).collect();
        Self::new(b, polys).expect("unit cube")
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn polys(&self) -> &[CubePolynomial] {
        &self.polys
    }

    /// `b_0 + Σ b_i ξ_i = 1/μ_0`.
    pub fn denominator(&self, xi: &[f64]) -> f64 {
        self.b[0] + xi.iter().zip(&self.b[1..]).map(|(x, b)| x * b).sum::<f64>()
    }

    /// `μ_0` as an affine function of μ.
    pub fn mu0_function(&self) -> AffineFunction {
        AffineFunction::new(1.0 / self.b[0], self.b[1..].iter().map(|x| -x / self.b[0]).collect())
    }

    pub fn mu0(&self, mu: &[f64]) -> f64 {
        self.mu0_function().eval(mu)
    }

    pub fn xi_from_mu(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let mu0 = self.mu0(mu);
        if !(mu0 > 0.0) {
            return Err(Error::CharacteristicHyperplane);
        }
        Ok(mu.iter().map(|x| x / mu0).collect())
    }

    pub fn mu_from_xi(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let d = self.denominator(xi);
        if !(d > 0.0) {
            return Err(Error::CharacteristicHyperplane);
        }
        Ok(xi.iter().map(|x| x / d).collect())
    }

    /// Exact labels `L_{ir} = 2(μ_i − α_{ir} μ_0)/A_i'(α_{ir})` for
    /// `r ∈ {0, 1, ∞}`, with `L_{i∞} = 2μ_0/a_i` in degree 2. The floats are
    /// read as exact binary rationals.
    pub fn all_labels_exact(&self) -> Result<Vec<[AffineFunction<BigRational>; 3]>> {
        let m = self.m;
        let b: Vec<BigRational> = self.b.iter().map(|x| q(*x)).collect::<Result<_>>()?;
        // μ_0 = (1 − Σ b_j μ_j)/b_0.
        let mu0 = AffineFunction::new(BigRational::one() / &b[0], b[1..].iter().map(|x| -x / &b[0]).collect());
        let two = BigRational::from_integer(2.into());
        let mut out = Vec::with_capacity(m);
        for (i, p) in self.polys.iter().enumerate() {
            let mui = AffineFunction::<BigRational>::coordinate(i, m);
            let label = |alpha: f64, r: usize| -> Result<AffineFunction<BigRational>> {
                let d = p.derivative_at_root_exact(r)?;
                Ok(mui.add(&mu0.scale(&-q(alpha)?)).scale(&(&two / d)))
            };
            let l0 = label(p.alpha0, 0)?;
            let l1 = label(p.alpha1, 1)?;
            let linf = match p.alpha_inf {
                Some(c) => label(c, 2)?,
                None => mu0.scale(&(&two / q(p.lead)?)),
            };
            let total = l0.add(&l1).add(&linf);
            if !(total.a0.is_zero() && total.a.iter().all(Zero::is_zero)) {
                return Err(Error::DegenerateRoots("labels of a factor do not sum to zero".into()));
            }
            out.push([l0, l1, linf]);
        }
        Ok(out)
    }

    /// The grouped polytope cut out by `L_{i0}, L_{i1}`.
    pub fn labels_from_cube(&self) -> Result<LabelledPolytope> {
        let labels: Vec<AffineFunction<BigRational>> = self.all_labels_exact()?.into_iter().flat_map(|[a, b, _]| [a, b]).collect();
        LabelledPolytope::from_exact(labels)?.with_grouping(Grouping::consecutive(&vec![2; self.m]))
    }

    fn check_box(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.m {
            return Err(Error::InvalidInput("ξ has the wrong dimension".into()));
        }
        for (x, p) in xi.iter().zip(&self.polys) {
            if !(p.alpha0 < *x && *x < p.alpha1) {
                return Err(Error::BoundaryProximity);
            }
        }
        if !(self.denominator(xi) > 0.0) {
            return Err(Error::CharacteristicHyperplane);
        }
        Ok(())
    }

    /// `(μ_0 diag(1/A_i), μ_0 diag(A_i))`: the `dξ` and `θ` blocks.
    pub fn metric_at_xi(&self, xi: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.check_box(xi)?;
        let mu0 = 1.0 / self.denominator(xi);
        let a: Vec<f64> = xi.iter().zip(&self.polys).map(|(x, p)| p.eval(*x)).collect();
        if a.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::BoundaryProximity);
        }
        let dxi = DMatrix::from_fn(self.m, self.m, |i, j| if i == j { mu0 / a[i] } else { 0.0 });
        let theta = DMatrix::from_fn(self.m, self.m, |i, j| if i == j { mu0 * a[i] } else { 0.0 });
        Ok((dxi, theta))
    }

    /// The torus block `Θᵀ diag(μ_0 A_i) Θ` in the `dt` basis, which is the
    /// inverse Hessian of the symplectic potential.
    pub fn torus_metric(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        let (_, theta_block) = self.metric_at_xi(xi)?;
        let mu = self.mu_from_xi(xi)?;
        let t = AngularFrame::new(self.b.clone()).coefficients(&mu);
        Ok(t.transpose() * theta_block * t)
    }

    /// `μ_0^{m+2} ∏ A_i(ξ_i)`.
    pub fn ricci_potential(&self, xi: &[f64]) -> Result<f64> {
        self.check_box(xi)?;
        let mu0 = 1.0 / self.denominator(xi);
        Ok(libm::pow(mu0, (self.m + 2) as f64) * xi.iter().zip(&self.polys).map(|(x, p)| p.eval(*x)).product::<f64>())
    }

    /// `−Σ A_i''/μ_0 + Σ 2(m+1) b_i A_i' − Σ (m+1)(m+2) μ_0 b_i² A_i`.
    pub fn scalar_closed_form(&self, xi: &[f64]) -> Result<f64> {
        self.check_box(xi)?;
        let mu0 = 1.0 / self.denominator(xi);
        let m = self.m as f64;
        let mut s = 0.0;
        for (i, (x, p)) in xi.iter().zip(&self.polys).enumerate() {
            let b = self.b[i + 1];
            s += -p.d2(*x) / mu0 + 2.0 * (m + 1.0) * b * p.d1(*x) - (m + 1.0) * (m + 2.0) * mu0 * b * b * p.eval(*x);
        }
        Ok(s)
    }

    /// `s_{μ_0, m+2} = −μ_0 Σ A_i''(ξ_i)`.
    pub fn wp_scalar_closed_form(&self, xi: &[f64]) -> Result<f64> {
        self.check_box(xi)?;
        let mu0 = 1.0 / self.denominator(xi);
        Ok(-mu0 * xi.iter().zip(&self.polys).map(|(x, p)| p.d2(*x)).sum::<f64>())
    }

    /// The same quantity as an affine function of μ: `A_i''` is affine in
    /// `ξ_i` and `ξ_i μ_0 = μ_i`.
    pub fn wp_scalar_affine(&self) -> AffineFunction {
        let mu0 = self.mu0_function();
        let mut f = AffineFunction::constant(0.0, self.m);
        for (i, p) in self.polys.iter().enumerate() {
            let c = p.coefficients();
            // A'' = 2c_2 + 6c_3 ξ, so −μ_0 A'' = −2c_2 μ_0 − 6c_3 μ_i.
            f = f.add(&mu0.scale(&(-2.0 * c[2])));
            f.a[i] -= 6.0 * c[3];
        }
        f
    }

    /// `Σ_i ∫^{ξ_i} ds/A_i(s)`, a Kähler potential up to a constant.
    pub fn kahler_potential(&self, xi: &[f64]) -> Result<f64> {
        self.check_box(xi)?;
        Ok(xi.iter().zip(&self.polys).map(|(x, p)| p.inverse_antiderivative(*x)).sum())
    }

    /// Jacobian `∂μ_i/∂ξ_j = μ_0 δ_ij − μ_i μ_0 b_j`.
    pub fn jacobian(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        let mu = self.mu_from_xi(xi)?;
        let mu0 = 1.0 / self.denominator(xi);
        Ok(DMatrix::from_fn(self.m, self.m, |i, j| if i == j { mu0 } else { 0.0 } - mu[i] * mu0 * self.b[j + 1]))
    }
}

/// `θ_i = dt_i − b_i Σ_j μ_j dt_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularFrame {
    b: Vec<f64>,
}

impl AngularFrame {
    pub fn new(b: Vec<f64>) -> Self {
        Self { b }
    }

    /// `Θ_ij = δ_ij − b_i μ_j`, the `dt_j` coefficient of `θ_i`.
    pub fn coefficients(&self, mu: &[f64]) -> DMatrix<f64> {
        let m = mu.len();
        DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 } - self.b[i + 1] * mu[j])
    }

    /// `dθ_i` as the matrix of `dμ_k ∧ dt_j` coefficients, `∂Θ_ij/∂μ_k`.
    pub fn exterior_derivative(&self, i: usize, m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, m, |k, j| if j == k { -self.b[i + 1] } else { 0.0 })
    }
}

/// Random projective cube for tests and sweeps: roots in `[-1, 2]`, cubic or
/// quadratic at random, `b_0 ∈ [½, 2]` and small `b_i`.
pub fn random_ansatz<R: Rng>(rng: &mut R, m: usize) -> CubeAnsatz {
    loop {
        let mut polys = Vec::with_capacity(m);
        for _ in 0..m {
            let a0 = rng.random_range(-1.0..0.5);
            let a1 = a0 + rng.random_range(0.3..1.5);
            let cubic = rng.random_bool(0.7);
            let p = if cubic {
                let far = if rng.random_bool(0.5) { a1 + rng.random_range(0.3..3.0) } else { a0 - rng.random_range(0.3..3.0) };
                // Sign so that A > 0 between the finite roots.
                let mid = 0.5 * (a0 + a1);
                let lead = rng.random_range(0.5..3.0) * if (mid - far) > 0.0 { -1.0 } else { 1.0 };
                CubePolynomial::from_roots(lead, a0, a1, Some(far))
            } else {
                CubePolynomial::from_roots(-rng.random_range(0.5..3.0), a0, a1, None)
            };
            if let Ok(p) = p {
                polys.push(p);
            }
        }
        if polys.len() != m {
            continue;
        }
        let mut b = vec![rng.random_range(0.5..2.0)];
        for _ in 0..m {
            b.push(rng.random_range(-0.3..0.3));
        }
        if let Ok(a) = CubeAnsatz::new(b, polys) {
            // Keep μ_0 away from zero on the box.
            let ok = (0..(1usize << m)).all(|c| {
                let xi: Vec<f64> = (0..m).map(|i| if c >> i & 1 == 0 { a.polys[i].alpha0 } else { a.polys[i].alpha1 }).collect();
                a.denominator(&xi) > 0.2
            });
            if ok {
                return a;
            }
        }
    }
}
