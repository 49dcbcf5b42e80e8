//! Seeded sampling on products of momentum simplices.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::polytope::Grouping;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point of the standard simplex with `k` coordinates
/// (Dirichlet(1,…,1) via normalized exponentials).
pub fn dirichlet<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..k)
        .map(|_| {
            // (0, 1]: avoids log(0).
            let u: f64 = 1.0 - rng.random::<f64>();
            -libm::log(u)
        })
        .collect();
    let s: f64 = x.iter().sum();
    for v in x.iter_mut() {
        *v /= s;
    }
    x
}

/// One Dirichlet draw per factor, laid out over the facet indices.
pub fn dirichlet_sigma<R: Rng>(rng: &mut R, grouping: &Grouping) -> Vec<f64> {
    let mut sigma = vec![0.0; grouping.n_facets()];
    for g in grouping.groups() {
        let x = dirichlet(rng, g.len());
        for (&s, v) in g.iter().zip(x) {
            sigma[s] = v;
        }
    }
    sigma
}

/// Uniform point in the convex hull of `vertices` weighted by a Dirichlet
/// draw (not uniform in volume, but interior with probability one).
pub fn convex_combination<R: Rng>(rng: &mut R, vertices: &[Vec<f64>]) -> Vec<f64> {
    let w = dirichlet(rng, vertices.len());
    let m = vertices[0].len();
    (0..m).map(|j| vertices.iter().zip(&w).map(|(v, t)| v[j] * t).sum()).collect()
}
