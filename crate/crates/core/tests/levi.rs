use lkq_core::fixtures::{self, qlabel, zlabel};
use lkq_core::levi::{characteristic, is_positive_pair, moment, setup_from_polytope, transversality_det, LeviSetup, SigmaPoint};
use lkq_core::sampling;
use lkq_core::scalar::{rational, Scalar};
use lkq_core::{AffineFunction, Error, Grouping, LabelledPolytope};
use nalgebra::{DMatrix, Matrix2, Vector2};
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

fn sigma(v: &[f64], g: &Grouping) -> SigmaPoint {
    SigmaPoint::new(v.to_vec(), g).unwrap()
}

#[test]
fn square_setup_is_the_canonical_pair() {
    let p = fixtures::square();
    let s = setup_from_polytope(&p, p.grouping().unwrap()).unwrap();
    let (g, lambda) = s.exact_g.clone().unwrap();
    let q = |x: i64| BigRational::from_i64(x);
    assert_eq!(g, vec![vec![q(1), q(1), q(0), q(0)], vec![q(0), q(0), q(1), q(1)]]);
    assert_eq!(lambda, vec![q(1), q(1)]);
    assert_eq!(s.g_basis, s.ref_basis);
}

#[test]
fn simplex_setup() {
    let p = fixtures::simplex(2);
    let s = setup_from_polytope(&p, p.grouping().unwrap()).unwrap();
    let (g, lambda) = s.exact_g.unwrap();
    assert_eq!(g, vec![vec![BigRational::from_i64(1); 3]]);
    assert_eq!(lambda, vec![BigRational::from_i64(1)]);
}

#[test]
fn trapezoid_kernel_is_exact() {
    // u = [[1,-1,0,-1],[0,0,1,-1]]: free columns 1 and 3 give (1,1,0,0) and
    // (1,0,1,1); λ pairs them with the constants (0,1,0,2).
    let p = fixtures::trapezoid();
    let s = setup_from_polytope(&p, p.grouping().unwrap()).unwrap();
    let (g, lambda) = s.exact_g.clone().unwrap();
    let ex = p.exact_facets().unwrap();
    for v in &g {
        for j in 0..2 {
            let dot = v.iter().zip(ex).fold(BigRational::zero(), |acc, (x, l)| acc + x * &l.a[j]);
            assert!(dot.is_zero());
        }
    }
    let q = |x: i64| BigRational::from_i64(x);
    assert_eq!(g, vec![vec![q(1), q(1), q(0), q(0)], vec![q(1), q(0), q(1), q(1)]]);
    assert_eq!(lambda, vec![q(1), q(2)]);
    assert!((&s.u_mat * &s.g_basis).amax() == 0.0);
}

#[test]
fn rank_deficient_labels() {
    let labels = vec![
        AffineFunction::new(0.0, vec![1.0, 0.0]),
        AffineFunction::new(1.0, vec![-1.0, 0.0]),
        AffineFunction::new(2.0, vec![-2.0, 0.0]),
    ];
    let err = LeviSetup::from_labels(&labels, &Grouping::consecutive(&[3])).unwrap_err();
    assert_eq!(err, Error::RankDeficient);
}

#[test]
fn canonical_square_moment() {
    let p = fixtures::square();
    let g = p.grouping().unwrap().clone();
    let s = setup_from_polytope(&p, &g).unwrap();
    let m = moment(&sigma(&[0.3, 0.7, 0.6, 0.4], &g), &s).unwrap();
    assert!((m.mu[0] - 0.3).abs() < 1e-15 && (m.mu[1] - 0.6).abs() < 1e-15);
    assert!(m.residual < 1e-15);
}

#[test]
fn canonical_moment_on_simplex_products_reads_off_sigma() {
    let mut rng = sampling::rng(7);
    for dims in [vec![2, 1], vec![1, 1, 1], vec![3], vec![2, 2]] {
        let p = fixtures::simplex_product(&dims);
        let g = p.grouping().unwrap().clone();
        let s = setup_from_polytope(&p, &g).unwrap();
        for _ in 0..50 {
            let sg = SigmaPoint::new(sampling::dirichlet_sigma(&mut rng, &g), &g).unwrap();
            let mu = moment(&sg, &s).unwrap().mu;
            // μ coordinates are the σ of the coordinate labels μ_j ≥ 0.
            let mut k = 0;
            for grp in g.groups() {
                for &f in &grp[..grp.len() - 1] {
                    assert!((mu[k] - sg.values()[f]).abs() < 1e-13);
                    k += 1;
                }
            }
        }
    }
}

#[test]
fn vertex_sigma_hits_polytope_vertex() {
    let p = fixtures::trapezoid();
    let g = p.grouping().unwrap().clone();
    let s = setup_from_polytope(&p, &g).unwrap();
    for r1 in 0..2 {
        for r2 in 0..2 {
            let sg = SigmaPoint::vertex(&g, &[r1, r2]).unwrap();
            let mu = moment(&sg, &s).unwrap().mu;
            // Active facets are the ones with σ = 0: the partners of r1, r2.
            let active = [1 - r1, 2 + (1 - r2)];
            let l1 = &p.facets()[active[0]];
            let l2 = &p.facets()[active[1]];
            let a = Matrix2::new(l1.a[0], l1.a[1], l2.a[0], l2.a[1]);
            let want = a.lu().solve(&Vector2::new(-l1.a0, -l2.a0)).unwrap();
            assert!((mu[0] - want[0]).abs() < 1e-12 && (mu[1] - want[1]).abs() < 1e-12);
        }
    }
}

#[test]
fn transversality_at_vertex_is_normal_minor() {
    let p = fixtures::generic_quadrilateral();
    let g = p.grouping().unwrap().clone();
    let s = setup_from_polytope(&p, &g).unwrap();
    for r1 in 0..2 {
        for r2 in 0..2 {
            let sg = SigmaPoint::vertex(&g, &[r1, r2]).unwrap();
            let det = transversality_det(&sg, &s);
            let f1 = &p.facets()[1 - r1];
            let f2 = &p.facets()[2 + (1 - r2)];
            let minor = f1.a[0] * f2.a[1] - f1.a[1] * f2.a[0];
            assert!((det.abs() - minor.abs()).abs() < 1e-12, "{det} vs {minor}");
        }
    }
    let sg = sigma(&[0.4, 0.6, 0.5, 0.5], &g);
    assert!(transversality_det(&sg, &s).abs() > 1e-3);
}

fn flipped_square() -> (Vec<AffineFunction>, Grouping) {
    let labels = vec![
        AffineFunction::new(0.0, vec![-1.0, 0.0]),
        AffineFunction::new(1.0, vec![-1.0, 0.0]),
        AffineFunction::new(0.0, vec![0.0, 1.0]),
        AffineFunction::new(1.0, vec![0.0, -1.0]),
    ];
    (labels, Grouping::consecutive(&[2, 2]))
}

#[test]
fn flipped_normal_changes_transversality_sign() {
    let (labels, g) = flipped_square();
    let s = LeviSetup::from_labels(&labels, &g).unwrap();
    let mut rng = sampling::rng(3);
    let (mut pos, mut neg) = (0, 0);
    for _ in 0..10_000 {
        let sg = SigmaPoint::new(sampling::dirichlet_sigma(&mut rng, &g), &g).unwrap();
        let d = transversality_det(&sg, &s);
        if d > 0.0 {
            pos += 1;
        } else if d < 0.0 {
            neg += 1;
        }
    }
    assert!(pos > 0 && neg > 0);
}

#[test]
fn canonical_characteristic_is_half() {
    let p = fixtures::simplex_interval();
    let g = p.grouping().unwrap().clone();
    let s = setup_from_polytope(&p, &g).unwrap();
    let chi = characteristic(&sigma(&[0.2, 0.3, 0.5, 0.9, 0.1], &g), &s).unwrap();
    assert!(chi.iter().all(|c| (c - 0.5).abs() < 1e-15));
}

#[test]
fn scaling_labels_scales_chi() {
    let p = fixtures::square();
    let g = p.grouping().unwrap().clone();
    let t = 3.5;
    let scaled: Vec<AffineFunction> = p.facets().iter().map(|l| l.scale(&t)).collect();
    let s0 = setup_from_polytope(&p, &g).unwrap();
    let s1 = LeviSetup::from_labels(&scaled, &g).unwrap();
    let sg = sigma(&[0.25, 0.75, 0.1, 0.9], &g);
    let c0 = characteristic(&sg, &s0).unwrap();
    let c1 = characteristic(&sg, &s1).unwrap();
    assert!((c1 - c0 * t).amax() < 1e-14);
}

/// Labels of the quadrilateral with basis `w_i = e_i + Σ_j C_ji e_j0` and `λ = (c1, c2)`.
fn quad_labels(cm: [[f64; 2]; 2], c: [f64; 2]) -> Vec<AffineFunction> {
    let mut out = Vec::new();
    for j in 0..2 {
        let mut l0 = vec![0.0; 2];
        l0[j] = 1.0;
        let linf = AffineFunction::new(-c[j], vec![cm[0][j], cm[1][j]]);
        let l0 = AffineFunction::new(0.0, l0);
        let l1 = l0.add(&linf).neg();
        out.push(l0);
        out.push(l1);
    }
    out
}

#[test]
fn quad_characteristic_matches_inverse_of_p() {
    let cm = [[0.3, -0.2], [0.25, 0.1]];
    let c = [1.0, 1.5];
    let labels = quad_labels(cm, c);
    let g = Grouping::consecutive(&[2, 2]);
    let s = LeviSetup::from_labels(&labels, &g).unwrap();
    let mut rng = sampling::rng(11);
    for _ in 0..200 {
        let sg = SigmaPoint::new(sampling::dirichlet_sigma(&mut rng, &g), &g).unwrap();
        let sv = sg.values();
        let (s1, s2) = (sv[0], sv[2]);
        let p = DMatrix::from_row_slice(2, 2, &[1.0 + s1 * cm[0][0], s1 * cm[0][1], s2 * cm[1][0], 1.0 + s2 * cm[1][1]]);
        let q = p.try_inverse().unwrap();
        let chi = characteristic(&sg, &s).unwrap();
        for i in 0..2 {
            let want = 0.5 * (c[0] * q[(0, i)] + c[1] * q[(1, i)]);
            assert!((chi[i] - want).abs() < 1e-12, "{} vs {}", chi[i], want);
        }
    }
}

#[test]
fn positivity_verdicts() {
    let p = fixtures::square();
    let g = p.grouping().unwrap().clone();
    let s = setup_from_polytope(&p, &g).unwrap();
    let r = is_positive_pair(&s, &p, &g, 1000, 0).unwrap();
    assert!(r.combinatorial && r.stochastic);

    let t = fixtures::trapezoid();
    let st = setup_from_polytope(&t, t.grouping().unwrap()).unwrap();
    let r = is_positive_pair(&st, &t, t.grouping().unwrap(), 1000, 0).unwrap();
    assert!(r.combinatorial && r.stochastic);

    let (labels, g) = flipped_square();
    let raw = LabelledPolytope::unchecked(labels.clone());
    let s = LeviSetup::from_labels(&labels, &g).unwrap();
    let r = is_positive_pair(&s, &raw, &g, 1000, 0).unwrap();
    assert!(!r.combinatorial && !r.stochastic);
}

#[test]
fn misgrouped_square_is_not_positive() {
    let p = fixtures::square();
    let g = Grouping::new(vec![vec![0, 2], vec![1, 3]]);
    let s = setup_from_polytope(&p, &g).unwrap();
    let r = is_positive_pair(&s, &p, &g, 1000, 1).unwrap();
    assert!(!r.combinatorial && !r.stochastic);
}

#[test]
fn sigma_point_renormalizes() {
    let g = Grouping::consecutive(&[2, 3]);
    let s = SigmaPoint::new(vec![2.0, 2.0, -1.0, 1.0, 3.0], &g).unwrap();
    assert_eq!(s.values(), &[0.5, 0.5, 0.0, 0.25, 0.75]);
    assert!(SigmaPoint::new(vec![0.0, 0.0, 1.0, 1.0, 1.0], &g).is_err());
}

#[test]
fn exact_and_float_setups_agree() {
    let labels = vec![
        qlabel(&[(0, 1), (1, 1), (0, 1)]),
        qlabel(&[(2, 1), (-1, 1), (-1, 3)]),
        zlabel(&[0, 0, 1]),
        qlabel(&[(3, 2), (-1, 4), (-1, 1)]),
    ];
    let p = LabelledPolytope::from_exact(labels).unwrap();
    let g = Grouping::consecutive(&[2, 2]);
    let se = setup_from_polytope(&p, &g).unwrap();
    let sf = LeviSetup::from_labels(p.facets(), &g).unwrap();
    let sg = sigma(&[0.3, 0.7, 0.2, 0.8], &g);
    let a = moment(&sg, &se).unwrap().mu;
    let b = moment(&sg, &sf).unwrap().mu;
    assert!((a[0] - b[0]).abs() < 1e-13 && (a[1] - b[1]).abs() < 1e-13);
    assert_eq!(rational(1, 2) * BigRational::from_i64(2), BigRational::from_i64(1));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn moment_stays_in_polytope(seed in 0u64..1000, which in 0usize..4) {
        let p = [fixtures::trapezoid(), fixtures::generic_quadrilateral(), fixtures::skew_cuboid(), fixtures::kite_quadrilateral()][which].clone();
        let g = p.grouping().unwrap().clone();
        let s = setup_from_polytope(&p, &g).unwrap();
        let mut rng = sampling::rng(seed);
        for _ in 0..20 {
            let sg = SigmaPoint::new(sampling::dirichlet_sigma(&mut rng, &g), &g).unwrap();
            let mu = moment(&sg, &s).unwrap().mu;
            prop_assert!(p.min_label(&mu) >= -1e-9);
        }
    }

    #[test]
    fn transversality_sign_is_constant_for_positive_pairs(seed in 0u64..1000) {
        let p = fixtures::generic_quadrilateral();
        let g = p.grouping().unwrap().clone();
        let s = setup_from_polytope(&p, &g).unwrap();
        let mut rng = sampling::rng(seed);
        let reference = transversality_det(&SigmaPoint::new(vec![0.5; 4], &g).unwrap(), &s).signum();
        for _ in 0..100 {
            let sg = SigmaPoint::new(sampling::dirichlet_sigma(&mut rng, &g), &g).unwrap();
            prop_assert_eq!(transversality_det(&sg, &s).signum(), reference);
        }
    }

    #[test]
    fn chi_is_homogeneous_in_lambda(t in 0.1f64..10.0, seed in 0u64..100) {
        let p = fixtures::generic_quadrilateral();
        let g = p.grouping().unwrap().clone();
        let s = setup_from_polytope(&p, &g).unwrap();
        let mut scaled = s.clone();
        scaled.lambda *= t;
        let mut rng = sampling::rng(seed);
        let sg = SigmaPoint::new(sampling::dirichlet_sigma(&mut rng, &g), &g).unwrap();
        let a = characteristic(&sg, &s).unwrap();
        let b = characteristic(&sg, &scaled).unwrap();
        prop_assert!((b - a * t).amax() < 1e-12 * t.max(1.0));
    }
}
