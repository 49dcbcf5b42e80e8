//! Symplectic potentials `G = Σ c_k L_k log|L_k|` and the metric they define.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::affine::{sum, AffineFunction};
use crate::error::{Error, Result};
use crate::polytope::{matches_product_of_simplices, Grouping, LabelledPolytope};

/// Relative boundary margin: points with some `|L_k| ≤ BD_REL·diam` are
/// refused.
pub const BD_REL: f64 = 1e-7;
/// Largest accepted condition number of `Hess G`.
pub const MAX_COND: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub label: AffineFunction,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct SymplecticPotential {
    terms: Vec<Term>,
    domain: LabelledPolytope,
    diameter: f64,
    margin: f64,
}

impl SymplecticPotential {
    pub fn new(terms: Vec<Term>, domain: LabelledPolytope) -> Self {
        let diameter = domain.diameter();
        let margin = BD_REL * diameter.max(f64::MIN_POSITIVE);
        Self { terms, domain, diameter, margin }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn domain(&self) -> &LabelledPolytope {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// The exclusion margin `δ_bd`.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Label values at μ, refusing points too close to a zero of any term.
    pub fn check_interior(&self, mu: &[f64]) -> Result<Vec<f64>> {
        if mu.len() != self.dim() {
            return Err(Error::InvalidInput(format!("point has {} coordinates, expected {}", mu.len(), self.dim())));
        }
        if self.domain.min_label(mu) <= 0.0 {
            return Err(Error::BoundaryProximity);
        }
        let vals: Vec<f64> = self.terms.iter().map(|t| t.label.eval(mu)).collect();
        if vals.iter().any(|v| !(v.abs() > self.margin)) {
            return Err(Error::BoundaryProximity);
        }
        Ok(vals)
    }

    pub fn eval(&self, mu: &[f64]) -> Result<f64> {
        let vals = self.check_interior(mu)?;
        Ok(self.terms.iter().zip(&vals).map(|(t, l)| t.weight * l * libm::log(l.abs())).sum())
    }

    /// `Σ c_k (1 + log|L_k|) a_k`.
    pub fn grad(&self, mu: &[f64]) -> Result<DVector<f64>> {
        let vals = self.check_interior(mu)?;
        let mut g = DVector::zeros(self.dim());
        for (t, l) in self.terms.iter().zip(&vals) {
            let f = t.weight * (1.0 + libm::log(l.abs()));
            for (j, a) in t.label.a.iter().enumerate() {
                g[j] += f * a;
            }
        }
        Ok(g)
    }

    /// `Σ c_k a_k a_kᵀ / L_k`.
    pub fn hess(&self, mu: &[f64]) -> Result<DMatrix<f64>> {
        let vals = self.check_interior(mu)?;
        Ok(self.hess_from_values(&vals))
    }

    fn hess_from_values(&self, vals: &[f64]) -> DMatrix<f64> {
        let m = self.dim();
        let mut h = DMatrix::zeros(m, m);
        for (t, l) in self.terms.iter().zip(vals) {
            let f = t.weight / l;
            let a = &t.label.a;
            for i in 0..m {
                for j in 0..m {
                    h[(i, j)] += f * a[i] * a[j];
                }
            }
        }
        h
    }

    /// `H = (Hess G)^{-1}`.
    pub fn metric_h(&self, mu: &[f64]) -> Result<DMatrix<f64>> {
        let hess = self.hess(mu)?;
        invert_spd(hess)
    }

    /// Kähler potential by Legendre transform based at `basepoint`.
    pub fn kahler(&self, basepoint: Basepoint) -> Result<KahlerPotential> {
        let at = match basepoint {
            Basepoint::Barycenter => {
                let b = self.domain.vertex_barycenter();
                self.check_interior(&b)?;
                self.terms.iter().map(|t| t.label.eval(&b)).collect()
            }
            Basepoint::Affine(p) => {
                self.check_interior(&p)?;
                self.terms.iter().map(|t| t.label.eval(&p)).collect()
            }
            Basepoint::Homogeneous { eps, mu } => {
                if mu.len() != self.dim() {
                    return Err(Error::InvalidInput("basepoint dimension".into()));
                }
                self.terms.iter().map(|t| eps * t.label.a0 + t.label.a.iter().zip(&mu).map(|(a, x)| a * x).sum::<f64>()).collect()
            }
        };
        Ok(KahlerPotential { potential: self.clone(), at })
    }
}

/// Inverse of a symmetric positive definite matrix, refusing bad conditioning.
pub fn invert_spd(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    if !(lo > 0.0) {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let cond = hi / lo;
    if cond > MAX_COND {
        return Err(Error::IllConditioned(cond));
    }
    let inv = m.cholesky().ok_or(Error::IllConditioned(cond))?.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Basepoint in `h*`: an affine point of 𝒜, or a general functional
/// `(ε, μ)` acting by `L ↦ ε a0 + ⟨a, μ⟩`.
#[derive(Clone, Debug, PartialEq)]
pub enum Basepoint {
    Barycenter,
    Affine(Vec<f64>),
    Homogeneous { eps: f64, mu: Vec<f64> },
}

/// `μ ↦ Σ c_k (L_k(μ) − L_k(p)) − Σ c_k L_k(p) log|L_k(μ)|`, which is
/// `⟨μ − p, ∇G⟩ − G`. The affine part cancels when every factor has
/// `Σ_r L_r = 0`.
#[derive(Clone, Debug)]
pub struct KahlerPotential {
    potential: SymplecticPotential,
    at: Vec<f64>,
}

impl KahlerPotential {
    /// `L_k(p)` for every term.
    pub fn basepoint_values(&self) -> &[f64] {
        &self.at
    }

    pub fn eval(&self, mu: &[f64]) -> Result<f64> {
        let vals = self.potential.check_interior(mu)?;
        Ok(self.potential.terms.iter().zip(&vals).zip(&self.at).map(|((t, l), lp)| t.weight * ((l - lp) - lp * libm::log(l.abs()))).sum())
    }

    /// `|H(μ) − (⟨μ − p, ∇G⟩ − G)|` for an affine basepoint `p`.
    pub fn legendre_residual(&self, mu: &[f64], p: &[f64]) -> Result<f64> {
        let g = self.potential.eval(mu)?;
        let dg = self.potential.grad(mu)?;
        let pair: f64 = mu.iter().zip(p).zip(dg.iter()).map(|((x, y), d)| (x - y) * d).sum();
        Ok((self.eval(mu)? - (pair - g)).abs())
    }
}

/// `L_{i∞} = −Σ_{r∈I_i} L_{ir}` for each factor.
pub fn infinity_labels(p: &LabelledPolytope, grouping: &Grouping) -> Vec<AffineFunction> {
    grouping
        .groups()
        .iter()
        .map(|g| {
            let ls: Vec<AffineFunction> = g.iter().map(|&s| p.facets()[s].clone()).collect();
            sum(&ls, p.dim()).neg()
        })
        .collect()
}

/// Levi–Kähler potential: weight ½ on every `L_{ir}` and on every `L_{i∞}`.
pub fn levi_kahler_potential(p: &LabelledPolytope, grouping: &Grouping) -> Result<SymplecticPotential> {
    if !matches_product_of_simplices(p, grouping)? {
        return Err(Error::NotPositivePair);
    }
    let inf = infinity_labels(p, grouping);
    let mut terms = Vec::with_capacity(p.n_facets() + grouping.len());
    for (g, linf) in grouping.groups().iter().zip(inf) {
        for &s in g {
            terms.push(Term { label: p.facets()[s].clone(), weight: 0.5 });
        }
        terms.push(Term { label: linf, weight: 0.5 });
    }
    Ok(SymplecticPotential::new(terms, p.clone()))
}

/// Guillemin potential `½ Σ_s L_s log L_s`.
pub fn guillemin_potential(p: &LabelledPolytope) -> SymplecticPotential {
    let terms = p.facets().iter().map(|l| Term { label: l.clone(), weight: 0.5 }).collect();
    SymplecticPotential::new(terms, p.clone())
}

/// Kähler potential of the Levi–Kähler metric.
pub fn kahler_potential(p: &LabelledPolytope, grouping: &Grouping, basepoint: Basepoint) -> Result<KahlerPotential> {
    levi_kahler_potential(p, grouping)?.kahler(basepoint)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FacetBoundaryReport {
    pub facet: usize,
    /// Extrapolated `|H u_s|` on the facet, relative to `|u_s|·‖H‖`.
    pub residual_vanishing: f64,
    /// Extrapolated `|uᵀHu / L_s − 2|`, the normal derivative defect.
    pub residual_derivative: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryReport {
    pub facets: Vec<FacetBoundaryReport>,
    /// Interior points at which `Hess G` failed Cholesky.
    pub non_convex_points: usize,
    pub interior_points: usize,
    pub pass: bool,
}

/// Tolerance for the extrapolated boundary residuals.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Numerical check of the boundary conditions on every facet.
///
/// Points approach the barycenter `b` of the facet's vertices along the
/// segment from the vertex barycenter, at relative distances `t, 2t, 3t`
/// with `t = 1e-3`; both residuals are extrapolated to the facet with
/// `3v(t) − 3v(2t) + v(3t)`.
pub fn abreu_boundary_check(g: &SymplecticPotential, p: &LabelledPolytope) -> BoundaryReport {
    let lat = match p.face_lattice() {
        Ok(l) => l,
        Err(_) => return BoundaryReport { facets: Vec::new(), non_convex_points: 0, interior_points: 0, pass: false },
    };
    let q = p.vertex_barycenter();
    let m = p.dim();
    let t = 1e-3;
    let mut facets = Vec::with_capacity(p.n_facets());
    for (s, ls) in p.facets().iter().enumerate() {
        let on: Vec<&Vec<f64>> = lat.vertices.iter().filter(|v| v.facets.contains(s)).map(|v| &v.point).collect();
        let b: Vec<f64> = (0..m).map(|j| on.iter().map(|v| v[j]).sum::<f64>() / on.len() as f64).collect();
        let u = DVector::from_column_slice(&ls.a);
        let at = |k: f64| -> Option<(DVector<f64>, f64)> {
            let x: Vec<f64> = (0..m).map(|j| b[j] + k * t * (q[j] - b[j])).collect();
            let h = g.metric_h(&x).ok()?;
            let hu = &h * &u;
            let r = u.dot(&hu) / ls.eval(&x);
            Some((hu, r))
        };
        let rep = match (at(1.0), at(2.0), at(3.0), g.metric_h(&q)) {
            (Some((v1, r1)), Some((v2, r2)), Some((v3, r3)), Ok(hq)) => {
                let v0 = v1 * 3.0 - v2 * 3.0 + v3;
                let scale = u.norm() * hq.norm();
                let residual_vanishing = v0.norm() / scale;
                let residual_derivative = (3.0 * r1 - 3.0 * r2 + r3 - 2.0).abs();
                FacetBoundaryReport {
                    facet: s,
                    residual_vanishing,
                    residual_derivative,
                    pass: residual_vanishing < BOUNDARY_TOL && residual_derivative < BOUNDARY_TOL,
                }
            }
            _ => FacetBoundaryReport { facet: s, residual_vanishing: f64::INFINITY, residual_derivative: f64::INFINITY, pass: false },
        };
        facets.push(rep);
    }
    // Convexity on a lattice of convex combinations of the vertices with
    // the barycenter.
    let verts: Vec<Vec<f64>> = lat.vertices.iter().map(|v| v.point.clone()).collect();
    let mut interior_points = 0;
    let mut non_convex_points = 0;
    for v in &verts {
        for k in 1..10 {
            let w = k as f64 / 10.0;
            let x: Vec<f64> = (0..m).map(|j| w * v[j] + (1.0 - w) * q[j]).collect();
            interior_points += 1;
            let ok = g.hess(&x).ok().and_then(|h| h.cholesky()).is_some();
            if !ok {
                non_convex_points += 1;
            }
        }
    }
    let pass = facets.iter().all(|f| f.pass) && non_convex_points == 0;
    BoundaryReport { facets, non_convex_points, interior_points, pass }
}

/// Evaluation points `(1−w)q + w v` for the vertex barycenter `q`, used by
/// grid sweeps that must stay interior.
pub fn radial_grid(p: &LabelledPolytope, steps: usize) -> Vec<Vec<f64>> {
    let q = p.vertex_barycenter();
    let mut out = vec![q.clone()];
    for v in p.vertices() {
        for k in 1..steps {
            let w = k as f64 / steps as f64;
            out.push(q.iter().zip(&v).map(|(a, b)| (1.0 - w) * a + w * b).collect());
        }
    }
    out
}
