use projtract::affine::*;
use projtract::jets::{eval_jet, ChartBox, Field, MetricJet};
use projtract::linalg::{max_abs, max_abs_diff};
use projtract::models::*;
use proptest::prelude::*;

fn hopf_box(m: usize) -> ChartBox {
    let n = 2 * m + 1;
    let mut lo = vec![-0.8; n];
    let mut hi = vec![0.8; n];
    lo[n - 1] = -3.0;
    hi[n - 1] = 3.0;
    ChartBox::new(lo, hi)
}

fn invariants<G: Field>(g: &G, x: &[f64]) -> AffineInvariants {
    projective_invariants(&ConnectionJet::from_field(g, x, 2, None).unwrap()).unwrap()
}

#[test]
fn euclidean_metric_has_vanishing_christoffels() {
    let mj = MetricJet::eval(&MetricModel::Euclidean(4), &[0.1, 0.2, 0.3, 0.4], None).unwrap();
    let c = levi_civita(&mj).unwrap();
    assert_eq!(max_abs(&c.gamma), 0.0);
}

#[test]
fn stereographic_sphere_is_metric_and_has_constant_curvature() {
    let g = MetricModel::StereoSphere(3);
    for p in ChartBox::cube(3, 1.5).sample(50, 3) {
        let x = &p.coords;
        let mj = MetricJet::eval(&g, x, None).unwrap();
        let c = levi_civita(&mj).unwrap();
        assert!(metricity_residual(&mj, &c).unwrap() < 1e-10);
        // R_abcd = g_ac g_bd − g_ad g_bc, lowering the third slot
        let inv = curvature(&c).unwrap();
        let n = 3;
        let gg = |a: usize, b: usize| mj.g[a * n + b];
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for d in 0..n {
                        let low: f64 = (0..n).map(|e| gg(cc, e) * inv.r(a, b, e, d)).sum();
                        let want = gg(a, cc) * gg(b, d) - gg(a, d) * gg(b, cc);
                        assert!((low - want).abs() < 1e-9 * (1.0 + want.abs()));
                    }
                }
            }
        }
    }
}

#[test]
fn round_s5_is_einstein_with_schouten_equal_to_metric() {
    let g = MetricModel::HopfSphere(2);
    for p in hopf_box(2).sample(5, 4) {
        let x = &p.coords;
        let inv = invariants(&LeviCivita(g.clone()), x);
        let gv = g.eval(x);
        let four: Vec<f64> = gv.iter().map(|v| 4.0 * v).collect();
        assert!(max_abs_diff(&inv.ric, &four) < 1e-9);
        assert!(max_abs_diff(&inv.p, &gv) < 1e-9);
        assert!(max_abs(&inv.w) < 1e-9);
        assert!(max_abs(&inv.c) < 1e-8);
    }
}

#[test]
fn flat_connection_has_trivial_invariants() {
    let inv = invariants(&FlatConnection(4), &[0.3, -0.2, 0.1, 0.0]);
    assert_eq!(max_abs(&inv.p), 0.0);
    assert_eq!(max_abs(&inv.w), 0.0);
    assert_eq!(max_abs(&inv.c), 0.0);
}

#[test]
fn structural_identities_hold_for_special_and_general_connections() {
    let lc = ConnectionModel::LeviCivita(MetricModel::Perturbed3);
    // a projective change makes Ric non-symmetric, so β ≠ 0
    let general = lc.clone().changed(OneFormModel::random(3, 0.5, 9));
    for p in ChartBox::cube(3, 1.0).sample(20, 5) {
        let x = &p.coords;
        for (conn, special) in [(&lc, true), (&general, false)] {
            let inv = invariants(conn, x);
            let r = identity_residuals(&inv);
            assert!(r.bianchi < 1e-10 && r.decomposition < 1e-10 && r.weyl_trace < 1e-10 && r.beta < 1e-12, "{r:?}");
            assert!(r.differential_bianchi < 1e-8, "{r:?}");
            assert!(max_abs(&inv.w) > 1e-3);
            let n = 3;
            let asym = (0..n * n).map(|k| (inv.ric[k] - inv.ric[(k % n) * n + k / n]).abs()).fold(0.0, f64::max);
            if special {
                assert!(asym < 1e-10);
                let np: Vec<f64> = inv.p.iter().map(|v| 2.0 * v).collect();
                assert!(max_abs_diff(&inv.ric, &np) < 1e-10);
            } else {
                assert!(asym > 1e-3);
            }
        }
    }
}

#[test]
fn weyl_tensor_is_projectively_invariant() {
    let base = ConnectionModel::LeviCivita(MetricModel::Perturbed3);
    let x = [0.2, -0.4, 0.3];
    let w0 = invariants(&base, &x).w;
    for seed in 0..10 {
        let ch = base.clone().changed(OneFormModel::random(3, 0.6, seed));
        let w1 = invariants(&ch, &x).w;
        assert!(max_abs_diff(&w0, &w1) < 1e-9 * (1.0 + max_abs(&w0)));
    }
    // projective flatness survives a change
    let flat = ConnectionModel::Flat(3).changed(OneFormModel::random(3, 0.6, 77));
    assert!(max_abs(&invariants(&flat, &x).w) < 1e-12);
}

#[test]
fn zero_change_is_the_identity_and_jet_route_matches_field_route() {
    let base = ConnectionModel::LeviCivita(MetricModel::Perturbed3);
    let x = [0.1, 0.5, -0.2];
    let c = ConnectionJet::from_field(&base, &x, 2, None).unwrap();
    let zero = eval_jet(&OneFormModel::Zero(3), &x, 2, None).unwrap();
    let same = projective_change(&c, &zero);
    assert_eq!(same.gamma, c.gamma);
    let u = OneFormModel::random(3, 0.5, 3);
    let uj = eval_jet(&u, &x, 2, None).unwrap();
    let a = projective_change(&c, &uj);
    let b = ConnectionJet::from_field(&ProjectivelyChanged { base: base.clone(), upsilon: u }, &x, 2, None).unwrap();
    assert!(max_abs_diff(&a.gamma, &b.gamma) < 1e-13);
    assert!(max_abs_diff(&a.dgamma, &b.dgamma) < 1e-12);
    assert!(max_abs_diff(&a.d2gamma, &b.d2gamma) < 1e-11);
}

#[test]
fn density_connection_transforms_with_weight() {
    let base = ConnectionModel::LeviCivita(MetricModel::Perturbed3);
    let sigma = ScalarModel::random_positive(3, 4);
    for p in ChartBox::cube(3, 1.0).sample(10, 6) {
        let x = &p.coords;
        let c = ConnectionJet::from_field(&base, x, 1, None).unwrap();
        let u = eval_jet(&OneFormModel::random(3, 0.5, 8), x, 1, None).unwrap();
        let ch = projective_change(&c, &u);
        let sj = eval_jet(&sigma, x, 1, None).unwrap();
        for w in [-3.0, 1.0, 2.5] {
            let a = density_derivative(&c, &sj, w);
            let b = density_derivative(&ch, &sj, w);
            for i in 0..3 {
                assert!((b[i] - a[i] - w * u.value[i] * sj.value[0]).abs() < 1e-10);
            }
        }
    }
    // flat connection and a constant density
    let c = ConnectionJet::from_field(&FlatConnection(3), &[0.0; 3], 1, None).unwrap();
    let sj = eval_jet(&ScalarModel::Const(3, 2.0), &[0.0; 3], 1, None).unwrap();
    assert_eq!(density_derivative(&c, &sj, 1.5), vec![0.0; 3]);
}

#[test]
fn lie_derivative_of_connection_vanishes_for_symmetries() {
    let x = [0.3, -0.1, 0.7];
    let flat = ConnectionJet::from_field(&FlatConnection(3), &x, 1, None).unwrap();
    let zero = TensorJet::constant(3, vec![Idx::Up], 0.0, vec![0.0; 3]);
    assert_eq!(max_abs(&lie_derivative_connection(&flat, &zero).unwrap()), 0.0);
    let lin = VectorModel::Linear { n: 3, a: vec![0.5, -1.0, 0.2, 0.3, 0.0, 1.1, -0.7, 0.4, 0.9], v: vec![1.0, 2.0, 3.0] };
    let xi = TensorJet::of_field(&lin, &x, vec![Idx::Up], 2).unwrap();
    assert!(max_abs(&lie_derivative_connection(&flat, &xi).unwrap()) < 1e-14);

    let g = MetricModel::HopfSphere(1);
    let k = VectorModel::Coordinate { n: 3, i: 2, c: 1.0 };
    for p in hopf_box(1).sample(10, 2) {
        let c = ConnectionJet::from_field(&LeviCivita(g.clone()), &p.coords, 1, None).unwrap();
        let kj = TensorJet::of_field(&k, &p.coords, vec![Idx::Up], 2).unwrap();
        assert!(max_abs(&lie_derivative_connection(&c, &kj).unwrap()) < 1e-9);
    }
    // a non-Killing field is not an affine symmetry of the sphere
    let c = ConnectionJet::from_field(&LeviCivita(g), &x, 1, None).unwrap();
    let xi = TensorJet::of_field(&VectorModel::Coordinate { n: 3, i: 0, c: 1.0 }, &x, vec![Idx::Up], 2).unwrap();
    assert!(max_abs(&lie_derivative_connection(&c, &xi).unwrap()) > 1e-2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn weyl_invariance_for_random_changes(seed in 0u64..10_000, x in proptest::collection::vec(-1.0f64..1.0, 3)) {
        let base = ConnectionModel::LeviCivita(MetricModel::Perturbed3);
        let w0 = invariants(&base, &x).w;
        let w1 = invariants(&base.clone().changed(OneFormModel::random(3, 0.5, seed)), &x).w;
        prop_assert!(max_abs_diff(&w0, &w1) < 1e-9 * (1.0 + max_abs(&w0)));
    }

    #[test]
    fn curvature_is_antisymmetric(x in proptest::collection::vec(-1.0f64..1.0, 3)) {
        let inv = invariants(&ConnectionModel::LeviCivita(MetricModel::Perturbed3), &x);
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        prop_assert!((inv.r(a, b, c, d) + inv.r(b, a, c, d)).abs() < 1e-13);
                    }
                }
            }
        }
    }
}
