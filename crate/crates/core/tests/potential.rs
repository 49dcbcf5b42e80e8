use lkq_core::fixtures;
use lkq_core::potential::{
    abreu_boundary_check, guillemin_potential, infinity_labels, kahler_potential, levi_kahler_potential, Basepoint, SymplecticPotential,
    Term,
};
use lkq_core::sampling;
use lkq_core::{AffineFunction, Error, LabelledPolytope};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn lk(p: &LabelledPolytope) -> SymplecticPotential {
    levi_kahler_potential(p, p.grouping().unwrap()).unwrap()
}

#[test]
fn interval_value_at_midpoint() {
    let g = lk(&fixtures::interval());
    let want = -0.5 * 2f64.ln();
    assert!((g.eval(&[0.5]).unwrap() - want).abs() < 1e-15);
    assert!((g.eval(&[0.5]).unwrap() + 0.34657359027997264).abs() < 1e-15);
}

#[test]
fn simplex_products_have_guillemin_hessian() {
    for dims in [vec![1], vec![2], vec![2, 1], vec![1, 1, 1]] {
        let p = fixtures::simplex_product(&dims);
        let a = lk(&p);
        let b = guillemin_potential(&p);
        let mut rng = sampling::rng(5);
        for _ in 0..20 {
            let mu = sampling::convex_combination(&mut rng, &p.vertices());
            let d = a.hess(&mu).unwrap() - b.hess(&mu).unwrap();
            assert!(d.amax() < 1e-12);
        }
        for l in infinity_labels(&p, p.grouping().unwrap()) {
            assert!(l.a.iter().all(|x| *x == 0.0) && l.a0 == -1.0);
        }
    }
}

#[test]
fn trapezoid_infinity_labels() {
    let p = fixtures::trapezoid();
    let inf = infinity_labels(&p, p.grouping().unwrap());
    assert_eq!(inf[0], AffineFunction::new(-1.0, vec![0.0, 0.0]));
    assert_eq!(inf[1], AffineFunction::new(-2.0, vec![1.0, 0.0]));
}

#[test]
fn quadrilateral_potentials_differ() {
    let p = fixtures::trapezoid();
    let a = lk(&p);
    let b = guillemin_potential(&p);
    let d = a.hess(&[0.4, 0.6]).unwrap() - b.hess(&[0.4, 0.6]).unwrap();
    // Only the L_{2∞} = μ1 − 2 term differs: ½ e1 e1ᵀ / (μ1 − 2).
    assert!((d[(0, 0)] - 0.5 / (0.4 - 2.0)).abs() < 1e-14);
    assert!(d[(0, 1)].abs() + d[(1, 1)].abs() < 1e-14);
}

#[test]
fn round_hessians_and_metrics() {
    let i = lk(&fixtures::interval());
    assert!((i.hess(&[0.5]).unwrap()[(0, 0)] - 2.0).abs() < 1e-14);
    for mu in [0.1, 0.37, 0.9] {
        assert!((i.metric_h(&[mu]).unwrap()[(0, 0)] - 2.0 * mu * (1.0 - mu)).abs() < 1e-14);
    }
    let s = lk(&fixtures::square());
    assert!((s.hess(&[0.5, 0.5]).unwrap() - DMatrix::from_diagonal_element(2, 2, 2.0)).amax() < 1e-14);
    assert!((s.metric_h(&[0.5, 0.5]).unwrap() - DMatrix::from_diagonal_element(2, 2, 0.5)).amax() < 1e-14);
}

/// Central differences of `eval` for the Hessian and of nothing else.
fn fd_hessian(g: &SymplecticPotential, mu: &[f64], h: f64) -> DMatrix<f64> {
    let m = mu.len();
    let f = |d: &[(usize, f64)]| {
        let mut x = mu.to_vec();
        for &(i, t) in d {
            x[i] += t;
        }
        g.eval(&x).unwrap()
    };
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            (f(&[(i, h)]) - 2.0 * f(&[]) + f(&[(i, -h)])) / (h * h)
        } else {
            (f(&[(i, h), (j, h)]) - f(&[(i, h), (j, -h)]) - f(&[(i, -h), (j, h)]) + f(&[(i, -h), (j, -h)])) / (4.0 * h * h)
        }
    })
}

fn fd_grad(g: &SymplecticPotential, mu: &[f64], h: f64) -> Vec<f64> {
    (0..mu.len())
        .map(|i| {
            let mut a = mu.to_vec();
            let mut b = mu.to_vec();
            a[i] += h;
            b[i] -= h;
            (g.eval(&a).unwrap() - g.eval(&b).unwrap()) / (2.0 * h)
        })
        .collect()
}

#[test]
fn closed_forms_match_finite_differences() {
    for p in [
        fixtures::square(),
        fixtures::trapezoid(),
        fixtures::generic_quadrilateral(),
        fixtures::simplex_interval(),
        fixtures::skew_cuboid(),
    ] {
        for g in [lk(&p), guillemin_potential(&p)] {
            let mut rng = sampling::rng(17);
            for _ in 0..50 {
                let mu = sampling::convex_combination(&mut rng, &p.vertices());
                let minl = p.min_label(&mu);
                let h = 1e-3 * minl;
                let hess = g.hess(&mu).unwrap();
                let fd = fd_hessian(&g, &mu, h);
                assert!((&hess - &fd).amax() / hess.amax() < 1e-5, "{}", (&hess - &fd).amax() / hess.amax());
                assert!(((&hess - hess.transpose()).amax()) == 0.0);
                let gr = g.grad(&mu).unwrap();
                let fg = fd_grad(&g, &mu, h);
                for (a, b) in gr.iter().zip(&fg) {
                    assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()));
                }
            }
        }
    }
}

#[test]
fn spherical_pair_matches_reduced_metric() {
    // Σ_s dL_s²/2L_s − (Σ_s dL_s)²/(2 Σ_s L_s) over the simplex labels.
    let p = fixtures::simplex(3);
    let g = lk(&p);
    let mut rng = sampling::rng(2);
    for _ in 0..20 {
        let mu = sampling::convex_combination(&mut rng, &p.vertices());
        let mut form = DMatrix::zeros(3, 3);
        let mut tot = vec![0.0; 3];
        let mut ltot = 0.0;
        for l in p.facets() {
            let v = l.eval(&mu);
            ltot += v;
            for i in 0..3 {
                tot[i] += l.a[i];
                for j in 0..3 {
                    form[(i, j)] += l.a[i] * l.a[j] / (2.0 * v);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                form[(i, j)] -= tot[i] * tot[j] / (2.0 * ltot);
            }
        }
        let want = form.try_inverse().unwrap();
        assert!((g.metric_h(&mu).unwrap() - want).amax() < 1e-12);
    }
}

#[test]
fn boundary_points_are_refused() {
    let g = lk(&fixtures::square());
    assert_eq!(g.eval(&[0.0, 0.5]).unwrap_err(), Error::BoundaryProximity);
    assert_eq!(g.hess(&[1e-9, 0.5]).unwrap_err(), Error::BoundaryProximity);
    assert_eq!(g.grad(&[1.5, 0.5]).unwrap_err(), Error::BoundaryProximity);
    assert!(g.eval(&[1e-6, 0.5]).is_ok());
}

#[test]
fn non_positive_pair_is_refused() {
    let p = fixtures::square();
    let err = levi_kahler_potential(&p, &lkq_core::Grouping::new(vec![vec![0, 2], vec![1, 3]])).unwrap_err();
    assert_eq!(err, Error::NotPositivePair);
}

#[test]
fn interval_kahler_potential() {
    let p = fixtures::interval();
    let k = kahler_potential(&p, p.grouping().unwrap(), Basepoint::Affine(vec![0.5])).unwrap();
    for mu in [0.1f64, 0.5, 0.77] {
        let want = -0.25 * (mu * (1.0 - mu)).ln();
        assert!((k.eval(&[mu]).unwrap() - want).abs() < 1e-14);
    }
    let b = kahler_potential(&p, p.grouping().unwrap(), Basepoint::Barycenter).unwrap();
    assert_eq!(b.basepoint_values(), k.basepoint_values());
}

#[test]
fn legendre_identity() {
    for p in [fixtures::trapezoid(), fixtures::generic_quadrilateral(), fixtures::simplex_interval()] {
        let gr = p.grouping().unwrap();
        let mut rng = sampling::rng(23);
        let base = sampling::convex_combination(&mut rng, &p.vertices());
        let k = kahler_potential(&p, gr, Basepoint::Affine(base.clone())).unwrap();
        for _ in 0..10 {
            let mu = sampling::convex_combination(&mut rng, &p.vertices());
            assert!(k.legendre_residual(&mu, &base).unwrap() < 1e-9);
        }
        // Guillemin labels need not sum to zero; the affine part keeps the identity.
        let g = guillemin_potential(&p).kahler(Basepoint::Affine(base.clone())).unwrap();
        let mu = sampling::convex_combination(&mut rng, &p.vertices());
        assert!(g.legendre_residual(&mu, &base).unwrap() < 1e-9);
    }
}

#[test]
fn homogeneous_basepoint_with_unit_eps_is_affine() {
    let p = fixtures::trapezoid();
    let gr = p.grouping().unwrap();
    let a = kahler_potential(&p, gr, Basepoint::Affine(vec![0.3, 0.4])).unwrap();
    let b = kahler_potential(&p, gr, Basepoint::Homogeneous { eps: 1.0, mu: vec![0.3, 0.4] }).unwrap();
    assert!((a.eval(&[0.6, 0.2]).unwrap() - b.eval(&[0.6, 0.2]).unwrap()).abs() < 1e-15);
}

#[test]
fn guillemin_simplex_satisfies_boundary_conditions() {
    let p = fixtures::simplex(2);
    let r = abreu_boundary_check(&guillemin_potential(&p), &p);
    assert!(r.pass, "{r:?}");
    assert!(r.facets.iter().all(|f| f.residual_vanishing < 1e-6 && f.residual_derivative < 1e-6));
}

#[test]
fn lk_cuboids_satisfy_boundary_conditions() {
    for p in [fixtures::trapezoid(), fixtures::generic_quadrilateral(), fixtures::kite_quadrilateral(), fixtures::skew_cuboid()] {
        let r = abreu_boundary_check(&lk(&p), &p);
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn wrong_weight_fails_on_its_facet() {
    let p = fixtures::square();
    let mut terms: Vec<Term> = p.facets().iter().map(|l| Term { label: l.clone(), weight: 0.5 }).collect();
    terms[2].weight = 1.0 / 3.0;
    let r = abreu_boundary_check(&SymplecticPotential::new(terms, p.clone()), &p);
    assert!(!r.pass);
    for f in &r.facets {
        assert_eq!(f.pass, f.facet != 2, "{f:?}");
    }
    // uᵀHu/L → 1/c = 3 on the broken facet.
    assert!((r.facets[2].residual_derivative - 1.0).abs() < 1e-6);
}

#[test]
fn rectangle_hessian_is_block_diagonal() {
    let p = LabelledPolytope::from_exact(vec![
        fixtures::zlabel(&[0, 1, 0]),
        fixtures::zlabel(&[3, -1, 0]),
        fixtures::zlabel(&[0, 0, 1]),
        fixtures::qlabel(&[(1, 2), (0, 1), (-1, 1)]),
    ])
    .unwrap()
    .with_grouping(lkq_core::Grouping::consecutive(&[2, 2]))
    .unwrap();
    let g = lk(&p);
    let h = g.hess(&[1.1, 0.2]).unwrap();
    assert_eq!(h[(0, 1)], 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lk_hessian_is_positive_definite(seed in 0u64..10_000, which in 0usize..5) {
        let p = [fixtures::trapezoid(), fixtures::generic_quadrilateral(), fixtures::kite_quadrilateral(), fixtures::skew_cuboid(), fixtures::simplex_interval()][which].clone();
        let g = lk(&p);
        let mut rng = sampling::rng(seed);
        for _ in 0..32 {
            let mu = sampling::convex_combination(&mut rng, &p.vertices());
            let e = g.hess(&mu).unwrap().symmetric_eigen().eigenvalues;
            prop_assert!(e.min() > 0.0);
        }
    }
}
