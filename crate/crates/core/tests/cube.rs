use lkq_core::cube::{random_ansatz, AngularFrame, CubeAnsatz, CubePolynomial};
use lkq_core::curvature::{abreu_scalar, wp_scalar};
use lkq_core::potential::{kahler_potential, levi_kahler_potential, Basepoint};
use lkq_core::{sampling, AffineFunction, Error};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn interior_xi<R: Rng>(rng: &mut R, a: &CubeAnsatz, shrink: f64) -> Vec<f64> {
    a.polys()
        .iter()
        .map(|p| {
            let (a0, a1, _) = p.roots();
            let t: f64 = rng.random_range(shrink..1.0 - shrink);
            a0 + t * (a1 - a0)
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn polynomial_construction() {
    let p = CubePolynomial::from_roots(-2.0, 0.0, 1.0, None).unwrap();
    assert_eq!(p.coefficients(), [0.0, 2.0, -2.0, 0.0]);
    assert_eq!(p.eval(0.5), 0.5);
    assert_eq!(p.d2(0.3), -4.0);
    let c = CubePolynomial::from_roots(1.0, -1.0, 1.0, Some(3.0)).unwrap();
    assert!(c.eval(0.0) > 0.0);
    assert_eq!(c.degree(), 3);
    // Coefficients that disagree with the roots.
    assert!(matches!(CubePolynomial::new([0.0, 2.0, -2.0, 0.0], 0.0, 1.5, None), Err(Error::DegenerateRoots(_))));
    assert!(matches!(CubePolynomial::from_roots(1.0, 0.0, 1e-12, None), Err(Error::DegenerateRoots(_))));
    assert!(matches!(CubePolynomial::from_roots(1.0, 0.0, 1.0, Some(0.5)), Err(Error::DegenerateRoots(_))));
    assert!(matches!(CubePolynomial::from_roots(2.0, 0.0, 1.0, None), Err(Error::PositivityFailure(_))));
}

#[test]
fn coordinate_examples() {
    let u = CubeAnsatz::unit_cube(3);
    assert_eq!(u.xi_from_mu(&[0.2, 0.5, 0.9]).unwrap(), vec![0.2, 0.5, 0.9]);
    let wide = CubePolynomial::from_roots(-2.0, 0.0, 2.0, None).unwrap();
    let unit = CubePolynomial::from_roots(-2.0, 0.0, 1.0, None).unwrap();
    let a = CubeAnsatz::new(vec![1.0, 1.0, 0.0], vec![wide, unit]).unwrap();
    assert_eq!(a.mu_from_xi(&[1.0, 0.5]).unwrap(), vec![0.5, 0.25]);
    assert_eq!(a.mu0(&[0.5, 0.25]), 0.5);
    assert_eq!(a.xi_from_mu(&[2.0, 0.0]).unwrap_err(), Error::CharacteristicHyperplane);
}

#[test]
fn round_trip() {
    let mut rng = sampling::rng(3);
    for m in 1..=3 {
        let a = random_ansatz(&mut rng, m);
        for _ in 0..1000 {
            let xi = interior_xi(&mut rng, &a, 0.0);
            let back = a.xi_from_mu(&a.mu_from_xi(&xi).unwrap()).unwrap();
            assert!(xi.iter().zip(&back).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }
}

#[test]
fn unit_cube_data() {
    for m in 1..=3 {
        let a = CubeAnsatz::unit_cube(m);
        let p = a.labels_from_cube().unwrap();
        for (k, l) in p.facets().iter().enumerate() {
            let i = k / 2;
            let want = if k % 2 == 0 {
                AffineFunction::coordinate(i, m)
            } else {
                AffineFunction::coordinate(i, m).neg().add(&AffineFunction::constant(1.0, m))
            };
            assert_eq!(*l, want);
        }
        let half = vec![0.5; m];
        let (dxi, theta) = a.metric_at_xi(&half).unwrap();
        assert_eq!(theta, DMatrix::from_diagonal_element(m, m, 0.5));
        assert_eq!(dxi, DMatrix::from_diagonal_element(m, m, 2.0));
        assert_eq!(a.scalar_closed_form(&[0.3; 3][..m]).unwrap(), 4.0 * m as f64);
        let x = [0.2, 0.7, 0.4];
        let rp = a.ricci_potential(&x[..m]).unwrap();
        assert!((rp - x[..m].iter().map(|t| 2.0 * t * (1.0 - t)).product::<f64>()).abs() < 1e-15);
    }
}

#[test]
fn box_corners_map_to_vertices() {
    let mut rng = sampling::rng(11);
    for m in 1..=3 {
        let a = random_ansatz(&mut rng, m);
        let p = a.labels_from_cube().unwrap();
        let verts = p.vertices();
        assert_eq!(verts.len(), 1 << m);
        for c in 0..(1usize << m) {
            let xi: Vec<f64> = a.polys().iter().enumerate().map(|(i, q)| if c >> i & 1 == 0 { q.roots().0 } else { q.roots().1 }).collect();
            let mu = a.mu_from_xi(&xi).unwrap();
            assert!(verts.iter().any(|v| v.iter().zip(&mu).all(|(x, y)| (x - y).abs() < 1e-10)), "{mu:?}");
        }
    }
}

#[test]
fn blocks_are_positive_on_a_grid() {
    let mut rng = sampling::rng(12);
    let a = random_ansatz(&mut rng, 2);
    for i in 1..10 {
        for j in 1..10 {
            let xi: Vec<f64> = a
                .polys()
                .iter()
                .zip([i, j])
                .map(|(p, k)| {
                    let (a0, a1, _) = p.roots();
                    a0 + (a1 - a0) * k as f64 / 10.0
                })
                .collect();
            let (d, t) = a.metric_at_xi(&xi).unwrap();
            assert!(d.diagonal().min() > 0.0 && t.diagonal().min() > 0.0);
            assert!(a.ricci_potential(&xi).unwrap() > 0.0);
        }
    }
    let corner: Vec<f64> = a.polys().iter().map(|p| p.roots().0).collect();
    assert_eq!(a.metric_at_xi(&corner).unwrap_err(), Error::BoundaryProximity);
}

/// `H` of the LK potential equals `Θᵀ diag(μ_0 A_i) Θ`, and the
/// `dξ`-block is the pullback of `Hess G` through `∂μ/∂ξ`.
#[test]
fn lk_potential_reproduces_metric_blocks() {
    let mut rng = sampling::rng(21);
    for m in 1..=3 {
        for _ in 0..3 {
            let a = random_ansatz(&mut rng, m);
            assert!(a.b()[0] != 1.0);
            let p = a.labels_from_cube().unwrap();
            let g = levi_kahler_potential(&p, p.grouping().unwrap()).unwrap();
            for _ in 0..20 {
                let xi = interior_xi(&mut rng, &a, 0.02);
                let mu = a.mu_from_xi(&xi).unwrap();
                let h = g.metric_h(&mu).unwrap();
                let want = a.torus_metric(&xi).unwrap();
                assert!((&h - &want).amax() / want.amax() < 1e-8);
                let j = a.jacobian(&xi).unwrap();
                let pulled = j.transpose() * g.hess(&mu).unwrap() * &j;
                let (dxi, _) = a.metric_at_xi(&xi).unwrap();
                assert!((&pulled - &dxi).amax() / dxi.amax() < 1e-8);
                // det H = b_0² μ_0^{m+2} ∏ A_i since det Θ = b_0 μ_0.
                let rp = a.ricci_potential(&xi).unwrap();
                assert!(rel(h.determinant() / (a.b()[0] * a.b()[0]), rp) < 1e-8 * rp.max(1.0));
            }
        }
    }
}

#[test]
fn scalar_curvature_matches_abreu() {
    let mut rng = sampling::rng(31);
    for m in 1..=3 {
        for _ in 0..3 {
            let a = random_ansatz(&mut rng, m);
            let p = a.labels_from_cube().unwrap();
            let g = levi_kahler_potential(&p, p.grouping().unwrap()).unwrap();
            let w = a.mu0_function();
            let wp_affine = a.wp_scalar_affine();
            for _ in 0..100 {
                let xi = interior_xi(&mut rng, &a, 0.01);
                let mu = a.mu_from_xi(&xi).unwrap();
                let want = a.scalar_closed_form(&xi).unwrap();
                let s = abreu_scalar(&g, &mu).unwrap();
                assert!(rel(s, want) < 1e-6, "m={m}: {s} vs {want}");
                let wpw = a.wp_scalar_closed_form(&xi).unwrap();
                let swp = wp_scalar(&g, &mu, &w, (m + 2) as f64).unwrap();
                assert!(rel(swp, wpw) < 1e-6, "m={m}: {swp} vs {wpw}");
                assert!(rel(wp_affine.eval(&mu), wpw) < 1e-12);
            }
        }
    }
}

#[test]
fn kahler_potential_differs_by_a_constant() {
    let mut rng = sampling::rng(41);
    for m in 1..=3 {
        let a = random_ansatz(&mut rng, m);
        let p = a.labels_from_cube().unwrap();
        let eps = -a.b()[1..].iter().sum::<f64>();
        let k = kahler_potential(&p, p.grouping().unwrap(), Basepoint::Homogeneous { eps, mu: vec![-1.0; m] }).unwrap();
        let diffs: Vec<f64> = (0..10)
            .map(|_| {
                let xi = interior_xi(&mut rng, &a, 0.01);
                let mu = a.mu_from_xi(&xi).unwrap();
                a.kahler_potential(&xi).unwrap() - k.eval(&mu).unwrap()
            })
            .collect();
        let spread = diffs.iter().cloned().fold(f64::MIN, f64::max) - diffs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-9, "m={m}: {diffs:?}");
    }
}

#[test]
fn decoupled_cube_is_csc_only_for_quadratics() {
    let quad = CubeAnsatz::new(
        vec![1.0, 0.0, 0.0],
        vec![CubePolynomial::from_roots(-3.0, -0.5, 1.0, None).unwrap(), CubePolynomial::from_roots(-1.0, 0.0, 2.0, None).unwrap()],
    )
    .unwrap();
    let cubic = CubeAnsatz::new(
        vec![1.0, 0.0, 0.0],
        vec![CubePolynomial::from_roots(1.0, -0.5, 1.0, Some(2.0)).unwrap(), CubePolynomial::from_roots(-1.0, 0.0, 2.0, None).unwrap()],
    )
    .unwrap();
    let mut rng = sampling::rng(5);
    let spread = |a: &CubeAnsatz, rng: &mut sampling::SeededRng| {
        let vals: Vec<f64> = (0..50).map(|_| a.scalar_closed_form(&interior_xi(rng, a, 0.01)).unwrap()).collect();
        vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min)
    };
    assert!(spread(&quad, &mut rng) < 1e-12);
    assert!(spread(&cubic, &mut rng) > 1e-2);
    // Cross-check the constant against Abreu.
    let p = quad.labels_from_cube().unwrap();
    let g = levi_kahler_potential(&p, p.grouping().unwrap()).unwrap();
    assert!(rel(abreu_scalar(&g, &quad.mu_from_xi(&[0.2, 1.3]).unwrap()).unwrap(), 6.0 + 2.0) < 1e-7);
}

#[test]
fn angular_frame_derivative() {
    let b = [1.5, 0.3, -0.7];
    let f = AngularFrame::new(b.to_vec());
    let mu = [0.2, 0.4];
    let h = 1e-6;
    for i in 0..2 {
        let d = f.exterior_derivative(i, 2);
        for k in 0..2 {
            let mut plus = mu;
            plus[k] += h;
            let fd = (f.coefficients(&plus) - f.coefficients(&mu)) / h;
            for j in 0..2 {
                assert!((fd[(i, j)] - d[(k, j)]).abs() < 1e-9);
            }
        }
        // Only the diagonal dμ_j ∧ dt_j survives, with coefficient −b_i: −b_i ω.
        assert_eq!(d, DMatrix::from_diagonal_element(2, 2, -b[i + 1]));
    }
}

#[test]
fn labels_are_exact_and_balanced() {
    let mut rng = sampling::rng(55);
    let a = random_ansatz(&mut rng, 2);
    let labels = a.all_labels_exact().unwrap();
    for [l0, l1, li] in &labels {
        let s = l0.add(l1).add(li);
        assert!(s.is_zero_function());
    }
    let p = a.labels_from_cube().unwrap();
    assert!(p.exact_facets().is_some());
    assert_eq!(p.grouping().unwrap().factor_dims(), vec![1, 1]);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn wp_closed_form_is_affine(seed in 0u64..10_000, m in 1usize..4) {
        let mut rng = sampling::rng(seed);
        let a = random_ansatz(&mut rng, m);
        let f = a.wp_scalar_affine();
        for _ in 0..20 {
            let xi = interior_xi(&mut rng, &a, 0.0);
            let mu = a.mu_from_xi(&xi).unwrap();
            prop_assert!((f.eval(&mu) - a.wp_scalar_closed_form(&xi).unwrap()).abs() < 1e-10 * f.eval(&mu).abs().max(1.0));
        }
    }

    #[test]
    fn random_ansatz_satisfies_invariants(seed in 0u64..10_000, m in 1usize..4) {
        let mut rng = sampling::rng(seed);
        let a = random_ansatz(&mut rng, m);
        let xi = interior_xi(&mut rng, &a, 0.0);
        prop_assert!(a.denominator(&xi) > 0.0);
        for p in a.polys() {
            let (a0, a1, inf) = p.roots();
            prop_assert!(a1 - a0 > 1e-9);
            if let Some(c) = inf {
                prop_assert!(!(a0..=a1).contains(&c));
            }
        }
    }
}
