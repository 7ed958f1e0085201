use projtract::jets::*;
use projtract::linalg::{identity, matmul, max_abs_diff};
use projtract::models::MetricModel;
use projtract::GeomError;
use proptest::prelude::*;

struct Constant(Vec<f64>, usize);

impl Field for Constant {
    fn dim_in(&self) -> usize {
        self.1
    }
    fn dim_out(&self) -> usize {
        self.0.len()
    }
    fn eval<S: Scalar>(&self, _x: &[S]) -> Vec<S> {
        self.0.iter().map(|&c| S::cst(c)).collect()
    }
}

struct Product;

impl Field for Product {
    fn dim_in(&self) -> usize {
        2
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![x[0] * x[1]]
    }
}

struct Linear(Vec<f64>);

impl Field for Linear {
    fn dim_in(&self) -> usize {
        self.0.len()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![x.iter().zip(&self.0).fold(S::zero(), |s, (xi, a)| s + *xi * *a)]
    }
}

struct Sine;

impl Field for Sine {
    fn dim_in(&self) -> usize {
        2
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![x[0].sin()]
    }
}

/// A smooth field with all mixed partials nonzero.
struct Mixed;

impl Field for Mixed {
    fn dim_in(&self) -> usize {
        3
    }
    fn dim_out(&self) -> usize {
        2
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![(x[0] * x[1] + x[2]).sin() * x[1].exp(), (x[0] * x[0] + x[1] * x[2] + 2.0).ln() * x[2]]
    }
}

#[test]
fn constant_field_has_zero_gradient() {
    let j = eval_jet(&Constant(vec![2.5, -1.0], 3), &[0.3, 0.1, -0.7], 1, None).unwrap();
    assert_eq!(j.value, vec![2.5, -1.0]);
    assert!(j.d1.iter().all(|&v| v == 0.0));
}

#[test]
fn product_has_unit_mixed_partial() {
    let j = eval_jet(&Product, &[0.4, -1.3], 2, None).unwrap();
    assert_eq!(j.d2(0, 1, 0), 1.0);
    assert_eq!(j.d2(1, 0, 0), 1.0);
    assert_eq!(j.d2(0, 0, 0), 0.0);
    assert_eq!(j.d1(0, 0), -1.3);
}

#[test]
fn stereographic_third_derivatives_match_differences() {
    // central differences of the AD second-derivative block
    let g = MetricModel::StereoSphere(3);
    let x = [0.3, -0.2, 0.5];
    let h = 1e-4;
    let j = eval_jet(&g, &x, 3, None).unwrap();
    for k in 0..3 {
        let mut xp = x;
        let mut xm = x;
        xp[k] += h;
        xm[k] -= h;
        let p = eval_jet(&g, &xp, 2, None).unwrap();
        let m = eval_jet(&g, &xm, 2, None).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                for o in 0..9 {
                    let fd = (p.d2(a, b, o) - m.d2(a, b, o)) / (2.0 * h);
                    let ad = j.d3(a, b, k, o);
                    assert!((fd - ad).abs() <= 1e-5 * (1.0 + ad.abs()), "{fd} {ad}");
                }
            }
        }
    }
}

#[test]
fn differences_are_exact_for_linear_fields() {
    let a = vec![1.5, -2.0, 0.25];
    let fd = fd_derivative(&Linear(a.clone()), &[0.1, 0.2, 0.3], 1e-5, None).unwrap();
    assert!(max_abs_diff(&fd, &a) < 1e-10);
}

#[test]
fn difference_of_sine_is_cosine() {
    for x0 in [-1.2, 0.0, 0.7, 2.9] {
        let fd = fd_derivative(&Sine, &[x0, 0.5], 1e-5, None).unwrap();
        assert!((fd[0] - f64::cos(x0)).abs() < 1e-9);
        assert!(fd[1].abs() < 1e-12);
    }
}

#[test]
fn registry_metrics_agree_with_differences() {
    let step = 1e-5;
    for (g, dom) in [
        (MetricModel::StereoSphere(3), ChartBox::cube(3, 1.0)),
        (MetricModel::HopfSphere(1), ChartBox::new(vec![-0.8, -0.8, -3.0], vec![0.8, 0.8, 3.0])),
        (MetricModel::Perturbed3, ChartBox::cube(3, 1.0)),
    ] {
        for p in dom.sample(100, 17) {
            let j = eval_jet(&g, &p.coords, 1, None).unwrap();
            let fd = fd_derivative(&g, &p.coords, step, Some(&dom)).unwrap();
            let scale = 1.0 + j.value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max_abs_diff(&j.d1, &fd) <= 10.0 * step * step * scale);
        }
    }
}

#[test]
fn inverse_metric_examples() {
    let id = MetricJet { n: 3, g: identity(3), dg: vec![0.0; 27], d2g: vec![0.0; 81], d3g: vec![0.0; 243] };
    assert_eq!(inverse_metric(&id).unwrap().gi, identity(3));
    let d = MetricJet { n: 2, g: vec![2.0, 0.0, 0.0, -1.0], dg: vec![0.0; 8], d2g: vec![0.0; 16], d3g: vec![0.0; 32] };
    assert_eq!(inverse_metric(&d).unwrap().gi, vec![0.5, 0.0, 0.0, -1.0]);
    let sing = MetricJet { n: 2, g: vec![1.0, 1.0, 1.0, 1.0], dg: vec![0.0; 8], d2g: vec![0.0; 16], d3g: vec![0.0; 32] };
    assert_eq!(inverse_metric(&sing).unwrap_err(), GeomError::SingularMetric);
}

#[test]
fn inverse_of_round_s3_metric() {
    let g = MetricModel::HopfSphere(1);
    let dom = ChartBox::new(vec![-0.8, -0.8, -3.0], vec![0.8, 0.8, 3.0]);
    for p in dom.sample(50, 3) {
        let mj = MetricJet::eval(&g, &p.coords, None).unwrap();
        let inv = inverse_metric(&mj).unwrap();
        assert!(max_abs_diff(&matmul(&mj.g, &inv.gi, 3), &identity(3)) <= 1e-12);
        // derivative of the inverse against differences of the inverse
        let h = 1e-5;
        for e in 0..3 {
            let mut xp = p.coords.clone();
            let mut xm = p.coords.clone();
            xp[e] += h;
            xm[e] -= h;
            let ip = inverse_metric(&MetricJet::eval(&g, &xp, None).unwrap()).unwrap().gi;
            let im = inverse_metric(&MetricJet::eval(&g, &xm, None).unwrap()).unwrap().gi;
            for k in 0..9 {
                assert!(((ip[k] - im[k]) / (2.0 * h) - inv.dgi[e * 9 + k]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn domain_and_order_errors() {
    let dom = ChartBox::cube(2, 1.0);
    assert!(matches!(eval_jet(&Product, &[1.5, 0.0], 1, Some(&dom)), Err(GeomError::OutOfDomain(_))));
    assert_eq!(eval_jet(&Product, &[0.0, 0.0], 4, None).unwrap_err(), GeomError::OrderUnsupported(4));
    // a difference stencil leaving the box near the boundary
    assert!(matches!(fd_derivative(&Product, &[1.0 - 1e-7, 0.0], 1e-5, Some(&dom)), Err(GeomError::OutOfDomain(_))));
}

proptest! {
    #[test]
    fn derivative_blocks_are_symmetric(x in proptest::collection::vec(-0.8f64..0.8, 3)) {
        let j = eval_jet(&Mixed, &x, 3, None).unwrap();
        for o in 0..2 {
            for a in 0..3 {
                for b in 0..3 {
                    prop_assert!((j.d2(a, b, o) - j.d2(b, a, o)).abs() <= 1e-13);
                    for c in 0..3 {
                        let v = j.d3(a, b, c, o);
                        for w in [j.d3(b, a, c, o), j.d3(a, c, b, o), j.d3(c, b, a, o)] {
                            prop_assert!((v - w).abs() <= 1e-13 * (1.0 + v.abs()));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn evaluation_is_deterministic(x in proptest::collection::vec(-0.8f64..0.8, 3)) {
        let a = eval_jet(&Mixed, &x, 3, None).unwrap();
        let b = eval_jet(&Mixed, &x, 3, None).unwrap();
        prop_assert_eq!(a.d3, b.d3);
    }
}
