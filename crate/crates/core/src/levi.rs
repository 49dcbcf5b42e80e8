//! Levi pairs on a product of spheres `N = ∏ S^{2m_i+1}`.
//!
//! Facets index the coordinates of the ambient torus, so `ℝ^S` carries the
//! standard basis `e_s`. Labels give `L : ℝ^S → h`, `u = dL` its linear
//! part, `g = ker u` and `λ` the constant terms restricted to `g`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;

use crate::affine::AffineFunction;
use crate::error::{Error, Result};
use crate::polytope::{matches_product_of_simplices, Grouping, LabelledPolytope};
use crate::sampling;
use crate::scalar::{nullspace, rank, Mat, Scalar};

/// Momentum coordinates `σ_s = ½|z_s|²` on `N`, summing to 1 over each
/// factor.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaPoint {
    sigma: Vec<f64>,
}

impl SigmaPoint {
    /// Clamps negative entries to 0 and renormalizes each factor.
    pub fn new(mut sigma: Vec<f64>, grouping: &Grouping) -> Result<Self> {
        if sigma.len() != grouping.n_facets() {
            return Err(Error::InvalidInput(format!("expected {} coordinates, got {}", grouping.n_facets(), sigma.len())));
        }
        for g in grouping.groups() {
            let mut total = 0.0;
            for &s in g {
                if !sigma[s].is_finite() {
                    return Err(Error::InvalidInput("non-finite coordinate".into()));
                }
                sigma[s] = sigma[s].max(0.0);
                total += sigma[s];
            }
            if total <= 0.0 {
                return Err(Error::InvalidInput("a factor has zero total".into()));
            }
            for &s in g {
                sigma[s] /= total;
            }
        }
        Ok(Self { sigma })
    }

    /// The point with `σ_{i r_i} = 1` for the chosen index in each factor.
    pub fn vertex(grouping: &Grouping, chosen: &[usize]) -> Result<Self> {
        let mut sigma = alloc::vec![0.0; grouping.n_facets()];
        for (g, &r) in grouping.groups().iter().zip(chosen) {
            sigma[g[r]] = 1.0;
        }
        Self::new(sigma, grouping)
    }

    pub fn values(&self) -> &[f64] {
        &self.sigma
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.sigma.iter().map(|x| x * x).sum())
    }
}

#[derive(Clone, Debug)]
pub struct LeviSetup {
    pub m: usize,
    pub ell: usize,
    pub d: usize,
    pub labels: Vec<AffineFunction>,
    pub grouping: Grouping,
    /// `(m+1)×d`, columns are the labels with the constant term first.
    pub l_mat: DMatrix<f64>,
    /// `m×d`, the normals `u_s`.
    pub u_mat: DMatrix<f64>,
    /// `d×ℓ`, a basis of `g = ker u`.
    pub g_basis: DMatrix<f64>,
    pub lambda: DVector<f64>,
    /// `d×ℓ`, the factor indicators spanning `g_o`.
    pub ref_basis: DMatrix<f64>,
    pub lambda_o: DVector<f64>,
    /// `i(s)`.
    pub factor_of: Vec<usize>,
    /// Exact kernel basis and `λ` when the labels are rational.
    pub exact_g: Option<(Vec<Vec<BigRational>>, Vec<BigRational>)>,
}

fn kernel_with_lambda<T: Scalar>(labels: &[AffineFunction<T>], m: usize) -> Result<(Vec<Vec<T>>, Vec<T>)> {
    let u: Mat<T> = (0..m).map(|j| labels.iter().map(|l| l.a[j].clone()).collect()).collect();
    if rank(&u) < m {
        return Err(Error::RankDeficient);
    }
    let ker = nullspace(&u, labels.len());
    let lambda = ker.iter().map(|g| g.iter().zip(labels).fold(T::zero(), |acc, (x, l)| acc + x.clone() * l.a0.clone())).collect();
    Ok((ker, lambda))
}

impl LeviSetup {
    /// Setup for raw labels, which need not cut out a polytope.
    pub fn from_labels(labels: &[AffineFunction], grouping: &Grouping) -> Result<Self> {
        Self::build(labels, None, grouping)
    }

    fn build(labels: &[AffineFunction], exact: Option<&[AffineFunction<BigRational>]>, grouping: &Grouping) -> Result<Self> {
        let d = labels.len();
        let m = labels.first().map_or(0, AffineFunction::dim);
        grouping.check_partition(d)?;
        let ell = grouping.len();
        if d != m + ell {
            return Err(Error::GroupingMismatch(format!("{d} facets with {ell} factors in dimension {m}")));
        }
        let (g_cols, lambda, exact_g) = match exact {
            Some(ex) => {
                let (ker, lam) = kernel_with_lambda(ex, m)?;
                let g: Vec<Vec<f64>> = ker.iter().map(|v| v.iter().map(Scalar::to_f64).collect()).collect();
                let l: Vec<f64> = lam.iter().map(Scalar::to_f64).collect();
                (g, l, Some((ker, lam)))
            }
            None => {
                let (ker, lam) = kernel_with_lambda(labels, m)?;
                (ker, lam, None)
            }
        };
        if g_cols.len() != ell {
            return Err(Error::RankDeficient);
        }
        let l_mat = DMatrix::from_fn(m + 1, d, |r, s| if r == 0 { labels[s].a0 } else { labels[s].a[r - 1] });
        let u_mat = l_mat.rows(1, m).into_owned();
        let g_basis = DMatrix::from_fn(d, ell, |s, k| g_cols[k][s]);
        let factor_of = grouping.factor_of();
        let ref_basis = DMatrix::from_fn(d, ell, |s, i| if factor_of[s] == i { 1.0 } else { 0.0 });
        Ok(Self {
            m,
            ell,
            d,
            labels: labels.to_vec(),
            grouping: grouping.clone(),
            l_mat,
            u_mat,
            g_basis,
            lambda: DVector::from_vec(lambda),
            ref_basis,
            lambda_o: DVector::from_element(ell, 1.0),
            factor_of,
            exact_g,
        })
    }
}

/// The diagram for a grouped polytope; exact kernel when labels are rational.
pub fn setup_from_polytope(p: &LabelledPolytope, grouping: &Grouping) -> Result<LeviSetup> {
    LeviSetup::build(p.facets(), p.exact_facets(), grouping)
}

/// `det A_z`: rows `j < ℓ` hold `σ_s δ_{i(s)j}`, the remaining rows the
/// normals.
pub fn transversality_det(sigma: &SigmaPoint, setup: &LeviSetup) -> f64 {
    let d = setup.d;
    let ell = setup.ell;
    let s = sigma.values();
    let a = DMatrix::from_fn(d, d, |r, c| {
        if r < ell {
            if setup.factor_of[c] == r {
                s[c]
            } else {
                0.0
            }
        } else {
            setup.u_mat[(r - ell, c)]
        }
    });
    a.determinant()
}

/// χ in the `g_o` coordinates: `(gᵀ · 2diag(σ) · ι_o) χ = λ`.
pub fn characteristic(sigma: &SigmaPoint, setup: &LeviSetup) -> Result<DVector<f64>> {
    let s = sigma.values();
    let h = DMatrix::from_fn(setup.d, setup.ell, |r, c| 2.0 * s[r] * setup.ref_basis[(r, c)]);
    let a = setup.g_basis.transpose() * h;
    let sv = a.clone().svd(false, false).singular_values;
    let (lo, hi) = (sv.min(), sv.max());
    if !(lo > 1e-13 * hi) {
        return Err(Error::SingularSystem);
    }
    a.lu().solve(&setup.lambda).ok_or(Error::SingularSystem)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Moment {
    pub mu: Vec<f64>,
    /// Largest `|L_s(μ) - 2χ_{i(s)}σ_s|`.
    pub residual: f64,
}

/// Horizontal momentum: the least-squares solution of
/// `L_s(μ) = 2χ_{i(s)}σ_s`, certified consistent.
pub fn moment(sigma: &SigmaPoint, setup: &LeviSetup) -> Result<Moment> {
    let chi = characteristic(sigma, setup)?;
    moment_with_chi(sigma, setup, &chi)
}

pub fn moment_with_chi(sigma: &SigmaPoint, setup: &LeviSetup, chi: &DVector<f64>) -> Result<Moment> {
    let s = sigma.values();
    let a = setup.u_mat.transpose();
    let rhs = DVector::from_fn(setup.d, |k, _| 2.0 * chi[setup.factor_of[k]] * s[k] - setup.labels[k].a0);
    let svd = a.clone().svd(true, true);
    let mu = svd.solve(&rhs, 1e-14).map_err(|_| Error::SingularSystem)?;
    let residual = (&a * &mu - &rhs).amax();
    let scale = setup.l_mat.amax().max(1.0) * (1.0 + chi.amax());
    if !(residual <= 1e-10 * sigma.norm().max(1.0) * scale) {
        return Err(Error::Inconsistent(residual));
    }
    Ok(Moment { mu: mu.iter().copied().collect(), residual })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport {
    pub combinatorial: bool,
    pub stochastic: bool,
    pub samples: usize,
    /// Smallest χ component seen; `-∞` if the system was singular somewhere.
    pub min_chi: f64,
}

/// Combinatorial verdict (face lattice matches the product of simplices)
/// against a sampled verdict (χ > 0 at `n` Dirichlet points). The two must
/// agree.
pub fn is_positive_pair(setup: &LeviSetup, p: &LabelledPolytope, grouping: &Grouping, n: usize, seed: u64) -> Result<PositivityReport> {
    let combinatorial = matches_product_of_simplices(p, grouping)?;
    let mut rng = sampling::rng(seed);
    let mut min_chi = f64::INFINITY;
    for _ in 0..n {
        let sigma = SigmaPoint::new(sampling::dirichlet_sigma(&mut rng, grouping), grouping)?;
        match characteristic(&sigma, setup) {
            Ok(chi) => min_chi = min_chi.min(chi.min()),
            Err(Error::SingularSystem) => {
                min_chi = f64::NEG_INFINITY;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let stochastic = min_chi > 0.0;
    if combinatorial != stochastic {
        return Err(Error::SelfCheckFailure(format!(
            "combinatorial verdict {combinatorial} disagrees with sampled verdict {stochastic} (min χ = {min_chi:e})"
        )));
    }
    Ok(PositivityReport { combinatorial, stochastic, samples: n, min_chi })
}
