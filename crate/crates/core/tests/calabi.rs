use lkq_core::calabi::{
    base_interval, compose_check, csc_certify, det_ratio, hat_polytope, hfkg_fibration, hfkg_fibre, BaseFactor, FibrationData, HfkgData,
};
use lkq_core::fixtures;
use lkq_core::polytope::matches_product_of_simplices;
use lkq_core::potential::levi_kahler_potential;
use lkq_core::sampling;
use lkq_core::scalar::rational;
use lkq_core::Error;
use num_rational::BigRational;
use proptest::prelude::*;

fn q(p: i64, d: i64) -> BigRational {
    rational(p, d)
}

/// Interval fibre, interval base, weight `2 − x`: the trapezoid fixture.
fn trapezoid_fibration() -> FibrationData {
    let base = BaseFactor { polytope: fixtures::interval(), p: vec![q(-1, 1)], c: q(2, 1) };
    FibrationData::new(fixtures::interval(), vec![base]).unwrap()
}

fn same_labels(a: &lkq_core::LabelledPolytope, b: &lkq_core::LabelledPolytope) -> bool {
    let (ea, eb) = (a.exact_facets().unwrap(), b.exact_facets().unwrap());
    ea.len() == eb.len() && ea.iter().all(|l| eb.contains(l))
}

#[test]
fn trivial_fibration_is_the_product() {
    let base = BaseFactor { polytope: fixtures::simplex(2), p: vec![q(0, 1)], c: q(1, 1) };
    let d = FibrationData::new(fixtures::interval(), vec![base]).unwrap();
    let hat = hat_polytope(&d).unwrap();
    let prod = fixtures::simplex_product(&[1, 2]);
    assert!(same_labels(&hat, &prod));
    assert_eq!(hat.grouping().unwrap().groups(), prod.grouping().unwrap().groups());
    let r = compose_check(&d, 100, 1).unwrap();
    assert!(r.spread < 1e-9, "{r:?}");
}

#[test]
fn trapezoid_hat_polytope() {
    let d = trapezoid_fibration();
    let hat = hat_polytope(&d).unwrap();
    assert!(same_labels(&hat, &fixtures::trapezoid()));
    let r = compose_check(&d, 100, 7).unwrap();
    assert!(r.spread < 1e-9, "{r:?}");
    assert!(r.offset.abs() < 1e-9);
}

#[test]
fn lift_and_split_invert() {
    let d = trapezoid_fibration();
    let p = d.lift(&[0.3], &[vec![0.6]]);
    assert!((p[1] - 0.6 * 1.7).abs() < 1e-15);
    let (x, ys) = d.split(&p);
    assert_eq!(x, vec![0.3]);
    assert!((ys[0][0] - 0.6).abs() < 1e-15);
}

#[test]
fn nonpositive_weight_rejected() {
    let base = BaseFactor { polytope: fixtures::interval(), p: vec![q(-1, 1)], c: q(1, 1) };
    assert!(matches!(FibrationData::new(fixtures::interval(), vec![base]), Err(Error::PositivityFailure(_))));
    let base = BaseFactor { polytope: fixtures::interval(), p: vec![q(1, 1), q(0, 1)], c: q(1, 1) };
    assert!(matches!(FibrationData::new(fixtures::interval(), vec![base]), Err(Error::InvalidInput(_))));
}

#[test]
fn simplex_bundles_are_products_of_simplices() {
    // Fibre Δ¹ × Δ¹, bases Δ² and Δ¹ with different weights.
    let b1 = BaseFactor { polytope: fixtures::simplex(2), p: vec![q(1, 2), q(-1, 3)], c: q(2, 1) };
    let b2 = BaseFactor { polytope: fixtures::interval(), p: vec![q(-1, 4), q(1, 1)], c: q(3, 2) };
    let d = FibrationData::new(fixtures::square(), vec![b1, b2]).unwrap();
    let hat = hat_polytope(&d).unwrap();
    assert_eq!(hat.dim(), 5);
    assert_eq!(hat.grouping().unwrap().factor_dims(), vec![1, 1, 2, 1]);
    assert!(matches_product_of_simplices(&hat, hat.grouping().unwrap()).unwrap());
    let r = compose_check(&d, 100, 3).unwrap();
    assert!(r.spread < 1e-9, "{r:?}");
}

#[test]
fn det_ratio_is_bounded() {
    let b1 = BaseFactor { polytope: fixtures::simplex(2), p: vec![q(1, 2)], c: q(2, 1) };
    let d = FibrationData::new(fixtures::interval(), vec![b1]).unwrap();
    let hat = hat_polytope(&d).unwrap();
    let g = levi_kahler_potential(&hat, hat.grouping().unwrap()).unwrap();
    let verts = hat.vertices();
    let mut rng = sampling::rng(11);
    for _ in 0..200 {
        let p = sampling::convex_combination(&mut rng, &verts);
        let r = det_ratio(&d, &g, &p).unwrap();
        assert!((1e-3..=1e3).contains(&r), "{r}");
    }
}

#[test]
fn hfkg_family_data() {
    let d = HfkgData::family(2).unwrap();
    assert_eq!((d.beta.clone(), d.eta.clone(), d.c.clone()), (q(1, 2), q(-2, 1), q(2, 13)));
    assert_eq!(-d.f_second_at_eta(), q(4, 1));
    for n in [3, 4] {
        assert_eq!(-HfkgData::family(n).unwrap().f_second_at_eta(), q(4, 1));
    }
    assert!(HfkgData::new(q(1, 1), q(-2, 1), q(1, 1)).is_err());
    assert!(HfkgData::new(q(0, 1), q(-1, 1), q(1, 1)).is_err());
    assert!(HfkgData::new(q(0, 1), q(-2, 1), q(0, 1)).is_err());
    // F vanishes at the four roots.
    for r in [q(-1, 1), q(1, 1), d.beta.clone(), d.eta.clone()] {
        assert_eq!(d.f(&r), q(0, 1));
    }
}

#[test]
fn hfkg_fibre_is_the_box_image() {
    let d = HfkgData::family(2).unwrap();
    let fib = hfkg_fibre(&d).unwrap();
    let mut vs = fib.vertices();
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let b = 0.5;
    let mut want: Vec<Vec<f64>> = [(-1.0, b), (-1.0, 1.0), (b, 1.0)].iter().map(|&(x, y)| HfkgData::sigma(x, y).to_vec()).collect();
    want.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (v, w) in vs.iter().zip(&want) {
        assert!((v[0] - w[0]).abs() < 1e-12 && (v[1] - w[1]).abs() < 1e-12, "{v:?} {w:?}");
    }
}

#[test]
fn csc_family_certifies() {
    for n in [2, 3, 4] {
        let d = HfkgData::family(n).unwrap();
        let r = csc_certify(&d, &q(4, 1), 10).unwrap();
        assert_eq!(r.points, 1000);
        assert!(r.relative_spread < 1e-5, "n = {n}: {r:?}");
        assert!(r.scalar_mean > 0.0);
        // The constant comes out as 12c = 24/(3n² + 1).
        assert!((r.scalar_mean - 24.0 / (3 * n * n + 1) as f64).abs() < 1e-9, "{}", r.scalar_mean);
    }
}

#[test]
fn csc_fibration_composes() {
    let d = HfkgData::family(2).unwrap();
    let fib = hfkg_fibration(&d, &q(4, 1)).unwrap();
    let r = compose_check(&fib, 100, 5).unwrap();
    assert!(r.spread < 1e-9, "{r:?}");
    assert_eq!(hat_polytope(&fib).unwrap().dim(), 3);
}

#[test]
fn perturbed_c_fails_condition() {
    let d = HfkgData::family(2).unwrap();
    let bad = HfkgData::new(d.beta.clone(), d.eta.clone(), d.c + q(1, 100)).unwrap();
    assert!(matches!(csc_certify(&bad, &q(4, 1), 10), Err(Error::ConditionFailure(_))));
}

#[test]
fn base_interval_length() {
    let p = base_interval(&q(2, 1)).unwrap();
    let v = p.vertices();
    assert!(v.iter().any(|x| (x[0] - 2.0).abs() < 1e-15));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn interval_bundles_compose(p in -40i64..40, c in 41i64..120, seed in 0u64..1000) {
        let base = BaseFactor { polytope: fixtures::interval(), p: vec![q(p, 40)], c: q(c, 40) };
        let d = FibrationData::new(fixtures::interval(), vec![base]).unwrap();
        let r = compose_check(&d, 50, seed).unwrap();
        prop_assert!(r.spread < 1e-9);
    }
}
