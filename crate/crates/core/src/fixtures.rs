//! Small labelled polytopes used by tests, examples and the command line.
//!
//! Facets of a grouped fixture are listed factor by factor, so the grouping
//! is always [`Grouping::consecutive`].

use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;

use crate::affine::AffineFunction;
use crate::polytope::{Grouping, LabelledPolytope};
use crate::scalar::rational;

/// Exact label from `(numerator, denominator)` pairs, constant term first.
pub fn qlabel(coeffs: &[(i64, i64)]) -> AffineFunction<BigRational> {
    AffineFunction::new(rational(coeffs[0].0, coeffs[0].1), coeffs[1..].iter().map(|&(p, q)| rational(p, q)).collect())
}

/// Exact label with integer coefficients, constant term first.
pub fn zlabel(coeffs: &[i64]) -> AffineFunction<BigRational> {
    AffineFunction::from_ints(coeffs[0], &coeffs[1..])
}

fn build(labels: Vec<AffineFunction<BigRational>>, sizes: &[usize]) -> LabelledPolytope {
    LabelledPolytope::from_exact(labels)
        .and_then(|p| p.with_grouping(Grouping::consecutive(sizes)))
        .expect("fixture is a valid grouped polytope")
}

/// `[0,1]` with labels `μ, 1-μ`.
pub fn interval() -> LabelledPolytope {
    build(vec![zlabel(&[0, 1]), zlabel(&[1, -1])], &[2])
}

/// Product of unit intervals, labels `μ_i, 1-μ_i`.
pub fn unit_cube(m: usize) -> LabelledPolytope {
    let mut labels = Vec::new();
    for i in 0..m {
        let mut e = vec![0i64; m];
        e[i] = 1;
        labels.push(AffineFunction::from_ints(0, &e));
        e[i] = -1;
        labels.push(AffineFunction::from_ints(1, &e));
    }
    build(labels, &vec![2; m])
}

pub fn square() -> LabelledPolytope {
    unit_cube(2)
}

/// Standard simplex `μ_1, …, μ_m, 1 - Σμ_i`.
pub fn simplex(m: usize) -> LabelledPolytope {
    build(simplex_labels(m, 0, m), &[m + 1])
}

/// Labels of a standard simplex on coordinates `offset..offset+k` of ℝ^m.
fn simplex_labels(k: usize, offset: usize, m: usize) -> Vec<AffineFunction<BigRational>> {
    let mut labels = Vec::new();
    for i in 0..k {
        let mut e = vec![0i64; m];
        e[offset + i] = 1;
        labels.push(AffineFunction::from_ints(0, &e));
    }
    let mut e = vec![0i64; m];
    for x in e.iter_mut().skip(offset).take(k) {
        *x = -1;
    }
    labels.push(AffineFunction::from_ints(1, &e));
    labels
}

/// Product of standard simplices of the given dimensions.
pub fn simplex_product(dims: &[usize]) -> LabelledPolytope {
    let m: usize = dims.iter().sum();
    let mut labels = Vec::new();
    let mut offset = 0;
    for &k in dims {
        labels.extend(simplex_labels(k, offset, m));
        offset += k;
    }
    let sizes: Vec<usize> = dims.iter().map(|k| k + 1).collect();
    build(labels, &sizes)
}

/// Trapezoid with vertices (0,0), (1,0), (1,1), (0,2); factors
/// `{μ1, 1-μ1}` and `{μ2, 2-μ1-μ2}`.
pub fn trapezoid() -> LabelledPolytope {
    build(vec![zlabel(&[0, 1, 0]), zlabel(&[1, -1, 0]), zlabel(&[0, 0, 1]), zlabel(&[2, -1, -1])], &[2, 2])
}

/// Quadrilateral with no parallel sides, vertices (0,0), (2,0),
/// (18/11, 12/11), (0, 3/2).
pub fn generic_quadrilateral() -> LabelledPolytope {
    build(
        vec![
            qlabel(&[(0, 1), (1, 1), (0, 1)]),
            qlabel(&[(2, 1), (-1, 1), (-1, 3)]),
            qlabel(&[(0, 1), (0, 1), (1, 1)]),
            qlabel(&[(3, 2), (-1, 4), (-1, 1)]),
        ],
        &[2, 2],
    )
}

/// Another quadrilateral without parallel sides, vertices (0,0), (1,0),
/// (3/4, 1), (0, 4/3) after scaling.
pub fn kite_quadrilateral() -> LabelledPolytope {
    build(
        vec![
            qlabel(&[(0, 1), (1, 1), (0, 1)]),
            qlabel(&[(1, 1), (-1, 1), (-1, 4)]),
            qlabel(&[(0, 1), (0, 1), (1, 1)]),
            qlabel(&[(4, 3), (-4, 9), (-1, 1)]),
        ],
        &[2, 2],
    )
}

/// Perturbed unit 3-cube whose opposite facet pairs do not share a
/// hyperplane.
pub fn skew_cuboid() -> LabelledPolytope {
    build(
        vec![
            zlabel(&[0, 1, 0, 0]),
            qlabel(&[(1, 1), (-1, 1), (-1, 5), (0, 1)]),
            zlabel(&[0, 0, 1, 0]),
            qlabel(&[(1, 1), (0, 1), (-1, 1), (-1, 5)]),
            zlabel(&[0, 0, 0, 1]),
            qlabel(&[(1, 1), (-1, 5), (0, 1), (-1, 1)]),
        ],
        &[2, 2, 2],
    )
}

/// Standard 2-simplex times the unit interval.
pub fn simplex_interval() -> LabelledPolytope {
    simplex_product(&[2, 1])
}

/// Unit square cut by `3/2 - μ1 - μ2 ≥ 0`, ungrouped.
pub fn pentagon() -> LabelledPolytope {
    LabelledPolytope::from_exact(vec![
        zlabel(&[0, 1, 0]),
        zlabel(&[1, -1, 0]),
        zlabel(&[0, 0, 1]),
        zlabel(&[1, 0, -1]),
        qlabel(&[(3, 2), (-1, 1), (-1, 1)]),
    ])
    .expect("pentagon")
}

/// Pyramid over the unit square with apex (1/2, 1/2, 1), ungrouped.
pub fn square_pyramid() -> LabelledPolytope {
    LabelledPolytope::from_exact(vec![
        zlabel(&[0, 0, 0, 1]),
        zlabel(&[0, 2, 0, -1]),
        zlabel(&[0, 0, 2, -1]),
        zlabel(&[2, -2, 0, -1]),
        zlabel(&[2, 0, -2, -1]),
    ])
    .expect("pyramid")
}
