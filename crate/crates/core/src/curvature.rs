//! Scalar curvature in momentum coordinates, its `(w, p)` modification,
//! affine fits and the Futaki invariant.
//!
//! Derivatives of `H = (Hess G)^{-1}` are central differences of the closed
//! form with Richardson extrapolation over `h` and `h/2`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::affine::AffineFunction;
use crate::error::{Error, Result};
use crate::polytope::{FacetSet, LabelledPolytope};
use crate::potential::SymplecticPotential;

/// Finite-difference step as a fraction of the diameter of Δ.
pub const FD_GLOBAL: f64 = 2e-3;
/// Cap on the step as a fraction of the distance to the nearest zero of a
/// term, so the stencil keeps a margin of ten steps.
pub const FD_LOCAL: f64 = 0.1;

/// Distance from μ to the nearest zero hyperplane of a nonconstant term.
pub fn term_distance(g: &SymplecticPotential, mu: &[f64]) -> f64 {
    g.terms()
        .iter()
        .filter_map(|t| {
            let n = t.label.normal_norm();
            (n > 0.0).then(|| t.label.eval(mu).abs() / n)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `h_fd` at μ. `H` extends smoothly across the facets, so the step is set
/// by the size of Δ and only capped near the boundary.
pub fn fd_step(g: &SymplecticPotential, mu: &[f64]) -> f64 {
    (FD_GLOBAL * g.diameter()).min(FD_LOCAL * term_distance(g, mu))
}

fn shifted(mu: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut x = mu.to_vec();
    for &(i, t) in moves {
        x[i] += t;
    }
    x
}

/// `Σ_ij ∂_i∂_j H_ij` and `(Σ_i ∂_i H_ij)_j` at step h.
fn stencil(g: &SymplecticPotential, mu: &[f64], h: f64, mixed: bool) -> Result<(f64, DVector<f64>)> {
    let m = mu.len();
    let h0 = g.metric_h(mu)?;
    let mut d2 = 0.0;
    let mut d1 = DVector::zeros(m);
    for i in 0..m {
        let hp = g.metric_h(&shifted(mu, &[(i, h)]))?;
        let hm = g.metric_h(&shifted(mu, &[(i, -h)]))?;
        d2 += (hp[(i, i)] - 2.0 * h0[(i, i)] + hm[(i, i)]) / (h * h);
        for j in 0..m {
            d1[j] += (hp[(i, j)] - hm[(i, j)]) / (2.0 * h);
        }
    }
    if mixed {
        for i in 0..m {
            for j in i + 1..m {
                let pp = g.metric_h(&shifted(mu, &[(i, h), (j, h)]))?[(i, j)];
                let pm = g.metric_h(&shifted(mu, &[(i, h), (j, -h)]))?[(i, j)];
                let mp = g.metric_h(&shifted(mu, &[(i, -h), (j, h)]))?[(i, j)];
                let mm = g.metric_h(&shifted(mu, &[(i, -h), (j, -h)]))?[(i, j)];
                d2 += 2.0 * (pp - pm - mp + mm) / (4.0 * h * h);
            }
        }
    }
    Ok((d2, d1))
}

/// Richardson-extrapolated `(Σ ∂_i∂_j H_ij, Σ_i ∂_i H_ij)`.
fn derivatives(g: &SymplecticPotential, mu: &[f64], mixed: bool) -> Result<(f64, DVector<f64>)> {
    derivatives_with_step(g, mu, fd_step(g, mu), mixed)
}

fn derivatives_with_step(g: &SymplecticPotential, mu: &[f64], h: f64, mixed: bool) -> Result<(f64, DVector<f64>)> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::BoundaryProximity);
    }
    g.check_interior(mu)?;
    let (a2, a1) = stencil(g, mu, h, mixed)?;
    let (b2, b1) = stencil(g, mu, h / 2.0, mixed)?;
    Ok(((4.0 * b2 - a2) / 3.0, (b1 * 4.0 - a1) / 3.0))
}

/// `s = −Σ_ij ∂²H_ij/∂μ_i∂μ_j`.
pub fn abreu_scalar(g: &SymplecticPotential, mu: &[f64]) -> Result<f64> {
    Ok(-derivatives(g, mu, true)?.0)
}

/// [`abreu_scalar`] from the third and fourth derivatives of `G`, no
/// differencing. With `M_ts = a_tᵀ H a_s`, `c_t = w_t/L_t²`, `d_t = w_t/L_t³`:
/// `s = 2Σ_t d_t M_tt² − Σ_ts c_t c_s (M_tt M_ts M_ss + M_ts³)`.
pub fn abreu_scalar_exact(g: &SymplecticPotential, mu: &[f64]) -> Result<f64> {
    let vals = g.check_interior(mu)?;
    let h = g.metric_h(mu)?;
    let terms = g.terms();
    let u: Vec<DVector<f64>> = terms.iter().map(|t| &h * DVector::from_column_slice(&t.label.a)).collect();
    let n = terms.len();
    let mut mm = DMatrix::zeros(n, n);
    for t in 0..n {
        for r in 0..n {
            mm[(t, r)] = terms[t].label.a.iter().zip(u[r].iter()).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    let c: Vec<f64> = terms.iter().zip(&vals).map(|(t, l)| t.weight / (l * l)).collect();
    let mut s = 0.0;
    for t in 0..n {
        s += 2.0 * c[t] / vals[t] * mm[(t, t)] * mm[(t, t)];
        for r in 0..n {
            let x = mm[(t, r)];
            s -= c[t] * c[r] * (mm[(t, t)] * x * mm[(r, r)] + x * x * x);
        }
    }
    Ok(s)
}

/// [`abreu_scalar`] with an explicit base step `h` (extrapolated from `h`
/// and `h/2`).
pub fn abreu_scalar_with_step(g: &SymplecticPotential, mu: &[f64], h: f64) -> Result<f64> {
    if 10.0 * h > (1.0 + 1e-9) * term_distance(g, mu) {
        return Err(Error::BoundaryProximity);
    }
    Ok(-derivatives_with_step(g, mu, h, true)?.0)
}

/// `Δw = −Σ_ij ∂H_ij/∂μ_i · a_j` for the affine function with linear part `a`.
pub fn laplacian_affine(g: &SymplecticPotential, mu: &[f64], a: &[f64]) -> Result<f64> {
    let (_, d1) = derivatives(g, mu, false)?;
    Ok(-d1.iter().zip(a).map(|(x, y)| x * y).sum::<f64>())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureSample {
    pub mu: Vec<f64>,
    pub s: f64,
    pub s_wp: f64,
    pub w_value: f64,
    pub p: f64,
}

/// `s_{w,p} = w²s − 2(p−1) wΔw − p(p−1)⟨a, H a⟩` together with `s`.
pub fn curvature_sample(g: &SymplecticPotential, mu: &[f64], w: &AffineFunction, p: f64) -> Result<CurvatureSample> {
    let wv = w.eval(mu);
    if !(wv > 0.0) {
        return Err(Error::NonpositiveWeight);
    }
    let (d2, d1) = derivatives(g, mu, true)?;
    let s = -d2;
    let lap = -d1.iter().zip(&w.a).map(|(x, y)| x * y).sum::<f64>();
    let h = g.metric_h(mu)?;
    let a = DVector::from_column_slice(&w.a);
    let norm = a.dot(&(&h * &a));
    let s_wp = wv * wv * s - 2.0 * (p - 1.0) * wv * lap - p * (p - 1.0) * norm;
    Ok(CurvatureSample { mu: mu.to_vec(), s, s_wp, w_value: wv, p })
}

pub fn wp_scalar(g: &SymplecticPotential, mu: &[f64], w: &AffineFunction, p: f64) -> Result<f64> {
    curvature_sample(g, mu, w, p).map(|c| c.s_wp)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineFit {
    pub function: AffineFunction,
    /// Largest residual divided by `max(range of f, max |f|)`.
    pub max_residual: f64,
}

/// Least-squares affine fit of `(μ, f)` samples.
pub fn affine_fit(points: &[(Vec<f64>, f64)]) -> Result<AffineFit> {
    let m = points.first().map_or(0, |p| p.0.len());
    if points.len() < m + 2 {
        return Err(Error::DegenerateSampleSet);
    }
    let a = DMatrix::from_fn(points.len(), m + 1, |r, c| if c == 0 { 1.0 } else { points[r].0[c - 1] });
    let b = DVector::from_fn(points.len(), |r, _| points[r].1);
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    if !(sv.min() > 1e-10 * sv.max()) {
        return Err(Error::DegenerateSampleSet);
    }
    let x = svd.solve(&b, 0.0).map_err(|_| Error::DegenerateSampleSet)?;
    let res = (&a * &x - &b).amax();
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.1), h.max(p.1)));
    let big = points.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let scale = (hi - lo).max(big);
    let max_residual = if scale > 0.0 { res / scale } else { res };
    Ok(AffineFit { function: AffineFunction::new(x[0], x.iter().skip(1).copied().collect()), max_residual })
}

/// Quadrature nodes with weights summing to the volume of Δ.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn simplex_volume(v: &[Vec<f64>]) -> f64 {
    let m = v.len() - 1;
    let d = DMatrix::from_fn(m, m, |r, c| v[c + 1][r] - v[0][r]);
    d.determinant().abs() / factorial(m)
}

/// Full flags `F_0 ⊂ F_1 ⊂ … ⊂ F_m` of the face lattice, as barycenters.
fn flag_simplices(p: &LabelledPolytope) -> Result<Vec<Vec<Vec<f64>>>> {
    let lat = p.face_lattice()?;
    let m = p.dim();
    let bary = |f: &FacetSet| -> Vec<f64> {
        let vs: Vec<&Vec<f64>> = lat.vertices.iter().filter(|v| f.is_subset(&v.facets)).map(|v| &v.point).collect();
        (0..m).map(|j| vs.iter().map(|v| v[j]).sum::<f64>() / vs.len() as f64).collect()
    };
    let by_dim: Vec<Vec<FacetSet>> = (0..=m as i32).map(|d| lat.faces.iter().filter(|f| f.dim == d).map(|f| f.facets).collect()).collect();
    let mut chains: Vec<Vec<FacetSet>> = by_dim[0].iter().map(|f| vec![*f]).collect();
    for d in 1..=m {
        let mut next = Vec::new();
        for c in &chains {
            let last = c.last().expect("nonempty chain");
            for f in &by_dim[d] {
                if f.is_subset(last) {
                    let mut e = c.clone();
                    e.push(*f);
                    next.push(e);
                }
            }
        }
        chains = next;
    }
    Ok(chains.iter().map(|c| c.iter().map(&bary).collect()).collect())
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, m - 1);
            out.push(q);
        }
    }
    out
}

/// Midpoint rule on a refinement of the barycentric flag subdivision: each
/// flag simplex is cut into `k^m` Kuhn simplices with `k` chosen so the total
/// is at least `n_quad`. Nodes are pulled towards the vertex barycenter by
/// the relative margin `shrink`.
pub fn quadrature_rule(p: &LabelledPolytope, n_quad: usize, shrink: f64) -> Result<QuadratureRule> {
    let m = p.dim();
    let simplices = flag_simplices(p)?;
    if simplices.is_empty() {
        return Err(Error::QuadratureFailure("no flags".into()));
    }
    let per = (n_quad as f64 / simplices.len() as f64).max(1.0);
    let mut k = libm::floor(libm::pow(per, 1.0 / m as f64)) as usize;
    while k.pow(m as u32) * simplices.len() < n_quad {
        k += 1;
    }
    let k = k.max(1);
    let q = p.vertex_barycenter();
    // Kuhn pieces of {1 ≥ y_1 ≥ … ≥ y_m ≥ 0} as centroids in y-coordinates.
    let mut centroids: Vec<Vec<f64>> = Vec::new();
    let perms = permutations(m);
    let mut cell = vec![0usize; m];
    let total = k.pow(m as u32);
    for idx in 0..total {
        let mut r = idx;
        for c in cell.iter_mut() {
            *c = r % k;
            r /= k;
        }
        if cell.windows(2).any(|w| w[0] < w[1]) {
            continue;
        }
        for pi in &perms {
            let pos: Vec<usize> = (0..m).map(|i| pi.iter().position(|&x| x == i).expect("permutation")).collect();
            if (0..m.saturating_sub(1)).any(|i| cell[i] == cell[i + 1] && pos[i] > pos[i + 1]) {
                continue;
            }
            let mut z = vec![0.0; m];
            for (j, &axis) in pi.iter().enumerate() {
                z[axis] = (m - j) as f64 / (m + 1) as f64;
            }
            centroids.push((0..m).map(|i| (cell[i] as f64 + z[i]) / k as f64).collect());
        }
    }
    if centroids.len() != total {
        return Err(Error::QuadratureFailure(format!("expected {total} Kuhn simplices, found {}", centroids.len())));
    }
    let mut nodes = Vec::with_capacity(simplices.len() * total);
    let mut weights = Vec::with_capacity(simplices.len() * total);
    for v in &simplices {
        let w = simplex_volume(v) / total as f64;
        for y in &centroids {
            let mut x = v[0].clone();
            for j in 0..m {
                for (t, xi) in x.iter_mut().enumerate() {
                    *xi += y[j] * (v[j + 1][t] - v[j][t]);
                }
            }
            for (xi, qi) in x.iter_mut().zip(&q) {
                *xi = qi + (1.0 - shrink) * (*xi - qi);
            }
            nodes.push(x);
            weights.push(w);
        }
    }
    Ok(QuadratureRule { nodes, weights })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FutakiReport {
    /// `∫ s̊ h w^{-(p+1)} dμ` without the `(2π)^m` factor.
    pub value: f64,
    /// `∫ |s̊ h| w^{-(p+1)} dμ`, a natural scale for `value`.
    pub scale: f64,
    /// Weighted mean subtracted from `s_{w,p}`.
    pub mean: f64,
    pub nodes: usize,
}

/// Futaki invariant from precomputed `s_{w,p}` at the nodes of `rule`.
pub fn futaki_from_values(rule: &QuadratureRule, s_wp: &[f64], w: &AffineFunction, p: f64, h: &AffineFunction) -> Result<FutakiReport> {
    if s_wp.len() != rule.len() {
        return Err(Error::QuadratureFailure("value count differs from node count".into()));
    }
    let mut wt = Vec::with_capacity(rule.len());
    for (x, q) in rule.nodes.iter().zip(&rule.weights) {
        let wv = w.eval(x);
        if !(wv > 0.0) {
            return Err(Error::NonpositiveWeight);
        }
        wt.push(q * libm::pow(wv, -(p + 1.0)));
    }
    let mass: f64 = wt.iter().sum();
    let mean = s_wp.iter().zip(&wt).map(|(s, t)| s * t).sum::<f64>() / mass;
    let mut value = 0.0;
    let mut scale = 0.0;
    for ((x, s), t) in rule.nodes.iter().zip(s_wp).zip(&wt) {
        let f = (s - mean) * h.eval(x) * t;
        value += f;
        scale += f.abs();
    }
    if !(value.is_finite() && scale.is_finite()) {
        return Err(Error::QuadratureFailure("non-finite integral".into()));
    }
    Ok(FutakiReport { value, scale, mean, nodes: rule.len() })
}

/// Generalized Futaki invariant of `h` for the weight `w` and conformal
/// dimension `p`, by midpoint quadrature.
pub fn futaki(
    p_: &LabelledPolytope,
    g: &SymplecticPotential,
    w: &AffineFunction,
    p: f64,
    h: &AffineFunction,
    n_quad: usize,
) -> Result<FutakiReport> {
    let rule = quadrature_rule(p_, n_quad, crate::potential::BD_REL)?;
    let mut vals = Vec::with_capacity(rule.len());
    for x in &rule.nodes {
        vals.push(wp_scalar(g, x, w, p).map_err(|e| Error::QuadratureFailure(format!("{e}")))?);
    }
    futaki_from_values(&rule, &vals, w, p, h)
}
