use num_complex::Complex64;
use projtract::hermitian::*;
use projtract::jets::{ChartBox, Field};
use projtract::linalg::{identity, matmul, max_abs_diff, transpose};
use projtract::models::{ConnectionModel, MetricModel, VectorModel};
use projtract::tractor::{holonomy_sample, TractorSplitting};
use projtract::GeomError;

fn hopf_box(n: usize) -> ChartBox {
    let mut lo = vec![-0.8; n];
    let mut hi = vec![0.8; n];
    lo[n - 1] = -3.0;
    hi[n - 1] = 3.0;
    ChartBox::new(lo, hi)
}

fn sphere(m: usize) -> SasakiCandidate<MetricModel, VectorModel> {
    let n = 2 * m + 1;
    SasakiCandidate { metric: MetricModel::HopfSphere(m), k: VectorModel::Coordinate { n, i: n - 1, c: 1.0 }, domain: hopf_box(n) }
}

#[test]
fn round_spheres_satisfy_both_sasaki_criteria() {
    for m in [1, 2] {
        let cand = sphere(m);
        let pts = cand.domain.sample(30, 4);
        let reports = verify_sasaki(&cand, &pts, 1e-8).unwrap();
        for r in &reports {
            assert!(r.pass && r.max <= 1e-8, "{} {}", r.check, r.max);
        }
        let ein = einstein_residual(&cand.metric, &cand.domain, &pts, 1e-9).unwrap();
        assert!(ein.pass, "{}", ein.max);
        // pointwise values at the box center: unit Killing, P(k,k) = 1
        let at = cand.at(&cand.domain.center()).unwrap();
        assert!((at.norm - 1.0).abs() < 1e-12 && at.schouten.abs() < 1e-10);
    }
}

#[test]
fn a_scaled_reeb_field_fails_the_unit_condition() {
    let mut cand = sphere(1);
    cand.k = VectorModel::Coordinate { n: 3, i: 2, c: 2.0 };
    let at = cand.at(&[0.1, 0.2, 0.3]).unwrap();
    assert!((at.unit - 3.0).abs() < 1e-12);
    assert!(!at.curvature_criterion(1e-8) && !at.projective_criterion(1e-8));
}

#[test]
fn non_sasaki_metrics_are_rejected() {
    let flat = SasakiCandidate { metric: MetricModel::Euclidean(5), k: VectorModel::Coordinate { n: 5, i: 4, c: 1.0 }, domain: ChartBox::cube(5, 1.0) };
    let pts = flat.domain.sample(10, 1);
    assert!(matches!(assemble_hermitian(&flat, &pts, 1e-8), Err(GeomError::NotSasakiEinstein(_))));
    let pert = SasakiCandidate { metric: MetricModel::Perturbed3, k: VectorModel::Coordinate { n: 3, i: 2, c: 1.0 }, domain: ChartBox::cube(3, 1.0) };
    let pts = pert.domain.sample(10, 1);
    assert!(matches!(assemble_hermitian(&pert, &pts, 1e-8), Err(GeomError::NotSasakiEinstein(_))));
}

#[test]
fn assembled_s5_data_is_parallel_and_hermitian() {
    let cand = sphere(2);
    let pts = cand.domain.sample(20, 6);
    let data = assemble_hermitian(&cand, &pts, 1e-8).unwrap();
    let s = TractorSplitting::new(ConnectionModel::LeviCivita(MetricModel::HopfSphere(2)), cand.domain.clone());
    let reports = verify_parallel_hermitian(&s, &data.h, &data.omega, &data.j, &pts, 1e-5, 1e-7, 1e-10).unwrap();
    for r in &reports {
        assert!(r.pass, "{} {}", r.check, r.max);
    }
    for p in &pts {
        let h = data.h.eval(&p.coords);
        assert_eq!(signature(&h, 6), (6, 0));
        let res = algebraic_residuals(&h, &data.omega.eval(&p.coords), &data.j.eval(&p.coords), 6);
        assert!(res.iter().all(|v| *v < 1e-10), "{res:?}");
    }
}

#[test]
fn holonomy_preserves_the_hermitian_structure() {
    let cand = sphere(2);
    let pts = cand.domain.sample(5, 2);
    let data = assemble_hermitian(&cand, &pts, 1e-8).unwrap();
    let s = TractorSplitting::new(ConnectionModel::LeviCivita(MetricModel::HopfSphere(2)), cand.domain.clone());
    for (path, u) in holonomy_sample(&s, 3, 5, 512).unwrap() {
        let (x, _) = path.at(0.0);
        let ut = transpose(&u, 6);
        for form in [data.h.eval(&x), data.omega.eval(&x)] {
            assert!(max_abs_diff(&matmul(&ut, &matmul(&form, &u, 6), 6), &form) < 1e-6);
        }
    }
}

#[test]
fn complex_volume_form_is_unimodular_on_the_unitary_frame() {
    let cand = sphere(2);
    let data = assemble_hermitian(&cand, &cand.domain.sample(5, 3), 1e-8).unwrap();
    let e = &data.eps_c;
    assert!((e.eval(&e.frame.clone()) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    assert!((e.det_c(&identity(6)) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    // J itself acts as multiplication by i on each complex line: det_ℂ J = i³
    assert!((e.det_c(&data.j.eval(&data.base_point)) - Complex64::new(0.0, -1.0)).norm() < 1e-10);
}

#[test]
fn einstein_constant_needs_odd_dimension() {
    let pts = ChartBox::cube(4, 1.0).sample(2, 0);
    assert!(einstein_residual(&MetricModel::Euclidean(4), &ChartBox::cube(4, 1.0), &pts, 1e-8).is_err());
}
