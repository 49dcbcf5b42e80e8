//! Monte Carlo checks on the sphere side: sampled `σ`, containment and
//! coverage of the moment image, and the sign of the horizontal Levi form.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::levi::{characteristic, moment, transversality_det, LeviSetup, SigmaPoint};
use crate::polytope::{Grouping, LabelledPolytope};
use crate::sampling;

/// Labels may dip this far below zero at a moment image.
pub const CONTAINMENT_TOL: f64 = 1e-9;
/// Required `vol(hull of images) / vol(Δ)`.
pub const COVERAGE_MIN: f64 = 0.99;
/// `σ_s` below this is treated as a boundary stratum.
pub const SIGMA_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub sigma_points: Vec<SigmaPoint>,
    pub seed: u64,
    pub grouping: Grouping,
}

/// `n` independent points, each factor Dirichlet(1, …, 1).
pub fn sample(grouping: &Grouping, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let mut rng = sampling::rng(seed);
    let sigma_points = (0..n).map(|_| SigmaPoint::new(sampling::dirichlet_sigma(&mut rng, grouping), grouping)).collect::<Result<_>>()?;
    Ok(SampleBatch { sigma_points, seed, grouping: grouping.clone() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentImageReport {
    pub samples: usize,
    /// Smallest label value over all images.
    pub min_label: f64,
    pub hull_volume: f64,
    pub polytope_volume: f64,
    pub coverage: f64,
}

pub fn moment_images(p: &LabelledPolytope, grouping: &Grouping, batch: &SampleBatch) -> Result<Vec<Vec<f64>>> {
    let setup = LeviSetup::from_labels(p.facets(), grouping)?;
    batch.sigma_points.iter().map(|s| moment(s, &setup).map(|m| m.mu)).collect()
}

pub fn moment_image_test(p: &LabelledPolytope, grouping: &Grouping, batch: &SampleBatch) -> Result<MomentImageReport> {
    moment_image_test_with(p, grouping, batch, COVERAGE_MIN)
}

/// Containment (every label `≥ −1e-9` at every image) then coverage
/// (`vol hull(images) ≥ coverage_min · vol Δ`).
pub fn moment_image_test_with(
    p: &LabelledPolytope,
    grouping: &Grouping,
    batch: &SampleBatch,
    coverage_min: f64,
) -> Result<MomentImageReport> {
    let images = moment_images(p, grouping, batch)?;
    image_report(p, &images, coverage_min)
}

/// The containment and coverage checks on precomputed images.
pub fn image_report(p: &LabelledPolytope, images: &[Vec<f64>], coverage_min: f64) -> Result<MomentImageReport> {
    let min_label = images.iter().map(|mu| p.min_label(mu)).fold(f64::INFINITY, f64::min);
    if !(min_label >= -CONTAINMENT_TOL) {
        return Err(Error::ContainmentFailure(min_label));
    }
    let polytope_volume = hull_volume(&p.vertices(), p.dim())?;
    let hull = hull_volume(images, p.dim())?;
    let coverage = hull / polytope_volume;
    if !(coverage >= coverage_min) {
        return Err(Error::CoverageFailure(coverage));
    }
    Ok(MomentImageReport { samples: images.len(), min_label, hull_volume: hull, polytope_volume, coverage })
}

/// Volume of the convex hull of `points` in `ℝ^dim`, `dim ≤ 3`.
pub fn hull_volume(points: &[Vec<f64>], dim: usize) -> Result<f64> {
    match dim {
        1 => {
            let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            Ok((hi - lo).max(0.0))
        }
        2 => Ok(hull_area(points)),
        3 => hull_volume_3d(points),
        _ => Err(Error::InvalidInput(format!("hull volume only for dimension ≤ 3, got {dim}"))),
    }
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone chain, then the shoelace formula.
fn hull_area(points: &[Vec<f64>]) -> f64 {
    let mut pts: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    if pts.len() < 3 {
        return 0.0;
    }
    let mut hull: Vec<&[f64]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        for k in 0..pts.len() {
            let p = if pass == 0 { pts[k] } else { pts[pts.len() - 1 - k] };
            while hull.len() >= start + 2 && cross2(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let n = hull.len();
    0.5 * (0..n).map(|i| hull[i][0] * hull[(i + 1) % n][1] - hull[(i + 1) % n][0] * hull[i][1]).sum::<f64>().abs()
}

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Clone, Copy)]
struct Face {
    v: [usize; 3],
    n: V3,
    off: f64,
}

fn face(pts: &[V3], a: usize, b: usize, c: usize) -> Face {
    let n = cross(sub(pts[b], pts[a]), sub(pts[c], pts[a]));
    Face { v: [a, b, c], n, off: dot(n, pts[a]) }
}

/// Incremental (beneath-beyond) hull. Points are inserted farthest from the
/// centroid first so that most later points fall inside early.
fn hull_volume_3d(points: &[Vec<f64>]) -> Result<f64> {
    let pts: Vec<V3> = points.iter().map(|p| [p[0], p[1], p[2]]).collect();
    let n = pts.len();
    if n < 4 {
        return Ok(0.0);
    }
    let mut centre = [0.0; 3];
    for p in &pts {
        for k in 0..3 {
            centre[k] += p[k] / n as f64;
        }
    }
    let scale = libm::sqrt(pts.iter().map(|p| dot(sub(*p, centre), sub(*p, centre))).fold(0.0, f64::max));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let eps = 1e-12 * scale;

    // Initial tetrahedron.
    let i0 = (0..n)
        .max_by(|&a, &b| dot(sub(pts[a], centre), sub(pts[a], centre)).total_cmp(&dot(sub(pts[b], centre), sub(pts[b], centre))))
        .unwrap();
    let i1 = (0..n)
        .max_by(|&a, &b| dot(sub(pts[a], pts[i0]), sub(pts[a], pts[i0])).total_cmp(&dot(sub(pts[b], pts[i0]), sub(pts[b], pts[i0]))))
        .unwrap();
    let line = sub(pts[i1], pts[i0]);
    let off_line = |k: usize| {
        let c = cross(line, sub(pts[k], pts[i0]));
        dot(c, c)
    };
    let i2 = (0..n).max_by(|&a, &b| off_line(a).total_cmp(&off_line(b))).unwrap();
    let nrm = cross(line, sub(pts[i2], pts[i0]));
    let off_plane = |k: usize| dot(nrm, sub(pts[k], pts[i0])).abs();
    let i3 = (0..n).max_by(|&a, &b| off_plane(a).total_cmp(&off_plane(b))).unwrap();
    if libm::sqrt(off_line(i2)) <= eps * scale || off_plane(i3) <= eps * libm::sqrt(dot(nrm, nrm)) {
        return Ok(0.0);
    }
    let inner = {
        let mut c = [0.0; 3];
        for &i in &[i0, i1, i2, i3] {
            for k in 0..3 {
                c[k] += pts[i][k] / 4.0;
            }
        }
        c
    };
    let mut faces: Vec<Face> = Vec::new();
    for [a, b, c] in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        let f = face(&pts, a, b, c);
        faces.push(if dot(f.n, inner) > f.off { face(&pts, a, c, b) } else { f });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dot(sub(pts[b], centre), sub(pts[b], centre)).total_cmp(&dot(sub(pts[a], centre), sub(pts[a], centre))));
    for &p in &order {
        let x = pts[p];
        let visible: Vec<bool> = faces.iter().map(|f| dot(f.n, x) - f.off > eps * libm::sqrt(dot(f.n, f.n))).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for k in 0..3 {
                edges.insert((f.v[k], f.v[(k + 1) % 3]));
            }
        }
        let mut kept: Vec<Face> = faces.iter().zip(&visible).filter(|(_, &v)| !v).map(|(f, _)| *f).collect();
        for &(a, b) in &edges {
            if !edges.contains(&(b, a)) {
                kept.push(face(&pts, a, b, p));
            }
        }
        faces = kept;
    }
    let vol: f64 = faces.iter().map(|f| dot(sub(pts[f.v[0]], inner), cross(sub(pts[f.v[1]], inner), sub(pts[f.v[2]], inner)))).sum();
    Ok(vol / 6.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalReport {
    pub chi: Vec<f64>,
    /// Eigenvalues of the form restricted to D, ascending.
    pub eigenvalues: Vec<f64>,
    pub positive: usize,
    pub negative: usize,
    pub positive_definite: bool,
}

/// `Σ_s 2χ_{i(s)}(v_{σ,s}²/(2σ_s) + 2σ_s v_{θ,s}²)` on
/// `D = {Σ_{r∈I_i} v_{σ,ir} = 0, Σ_{r∈I_i} σ_{ir} v_{θ,ir} = 0}`.
/// Factor `i` contributes a `2m_i`-dimensional block of sign `χ_i`, which is
/// checked against the eigenvalue count.
pub fn horizontal_positivity(sigma: &SigmaPoint, setup: &LeviSetup) -> Result<HorizontalReport> {
    let s = sigma.values();
    let d = setup.d;
    if s.iter().any(|&x| !(x > SIGMA_FLOOR)) {
        return Err(Error::SingularRestriction);
    }
    let det = transversality_det(sigma, setup);
    if !(det.abs() > 1e-13) {
        return Err(Error::SingularRestriction);
    }
    let chi = characteristic(sigma, setup).map_err(|e| match e {
        Error::SingularSystem => Error::SingularRestriction,
        e => e,
    })?;
    let q = DMatrix::from_fn(2 * d, 2 * d, |r, c| {
        if r != c {
            return 0.0;
        }
        let k = r % d;
        let w = 2.0 * chi[setup.factor_of[k]];
        if r < d {
            w / (2.0 * s[k])
        } else {
            w * 2.0 * s[k]
        }
    });
    let groups = setup.grouping.groups();
    let ell = groups.len();
    let cons = DMatrix::from_fn(2 * ell, 2 * d, |r, c| {
        let (i, theta) = (r % ell, r >= ell);
        match (theta, c >= d) {
            (false, false) if setup.factor_of[c] == i => 1.0,
            (true, true) if setup.factor_of[c - d] == i => s[c - d],
            _ => 0.0,
        }
    });
    let basis = orthonormal_kernel(&cons, 2 * (d - ell))?;
    let restricted = basis.transpose() * q * &basis;
    let mut eig: Vec<f64> = restricted.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    let tol = 1e-12 * eig.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let positive = eig.iter().filter(|&&x| x > tol).count();
    let negative = eig.iter().filter(|&&x| x < -tol).count();
    let expected_negative: usize = groups.iter().enumerate().filter(|(i, _)| chi[*i] < 0.0).map(|(_, g)| 2 * (g.len() - 1)).sum();
    if negative != expected_negative || positive + negative != eig.len() {
        return Err(Error::SelfCheckFailure(format!("{negative} negative directions, χ predicts {expected_negative}")));
    }
    Ok(HorizontalReport { chi: chi.iter().copied().collect(), eigenvalues: eig, positive, negative, positive_definite: negative == 0 })
}

/// Orthonormal basis of `ker a`, which must have dimension `dim`.
fn orthonormal_kernel(a: &DMatrix<f64>, dim: usize) -> Result<DMatrix<f64>> {
    let eig = (a.transpose() * a).symmetric_eigen();
    let top = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let idx: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k].abs() <= 1e-12 * top).collect();
    if idx.len() != dim {
        return Err(Error::SingularRestriction);
    }
    Ok(DMatrix::from_fn(a.ncols(), dim, |r, c| eig.eigenvectors[(r, idx[c])]))
}
