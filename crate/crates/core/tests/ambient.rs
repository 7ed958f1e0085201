use num_complex::Complex64;
use projtract::ambient::*;
use projtract::jets::{eval_jet, fd_derivative, ChartBox, Field, Point};
use projtract::GeomError;
use proptest::prelude::*;

fn ball_points(m: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    // points of the cube scaled into the unit ball
    let half = 0.9 / (2.0 * m as f64).sqrt();
    ChartBox::cube(2 * m, half).sample(count, seed).into_iter().map(|p| p.coords).collect()
}

fn ambient_points(m: usize, count: usize, seed: u64) -> Vec<Point> {
    let mut lo = vec![-0.5; 2 * m + 2];
    let mut hi = vec![0.5; 2 * m + 2];
    (lo[0], hi[0], lo[1], hi[1]) = (0.5, 1.5, -0.5, 0.5);
    ChartBox::new(lo, hi).sample(count, seed)
}

#[test]
fn sphere_solves_the_monge_ampere_equation() {
    for m in [2, 3] {
        let u = CrPotential::Sphere { m, c: 1.0 };
        for z in ball_points(m, 100, 5) {
            assert!((monge_ampere_k(&u, &z).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn k_scales_with_the_determinant_degree() {
    for m in [1, 2, 3] {
        let z = &ball_points(m, 1, 9)[0];
        for c in [0.5, 2.0, -1.5] {
            let k = monge_ampere_k(&CrPotential::Sphere { m, c }, z).unwrap();
            assert!((k - c.powi(m as i32 + 1)).abs() < 1e-12, "{m} {c} {k}");
        }
    }
}

#[test]
fn perturbed_k_matches_schur_complement() {
    // K = (−1)^m det(u_ab̄) (u − u_b̄ (u_ab̄)⁻¹ u_a) with jets written out by hand for m = 1:
    // u = (1 − r)(1 + εr²), r = |z|²: u_z = z̄ u_r, u_zz̄ = u_r + r u_rr.
    let eps = 0.3;
    let u = CrPotential::Perturbed { m: 1, eps };
    for z in ball_points(1, 10, 2) {
        let r = z[0] * z[0] + z[1] * z[1];
        let uv = (1.0 - r) * (1.0 + eps * r * r);
        let ur = -(1.0 + eps * r * r) + (1.0 - r) * 2.0 * eps * r;
        let urr = -4.0 * eps * r + 2.0 * eps * (1.0 - r);
        let uzz = ur + r * urr;
        let expect = -(uzz * uv - r * ur * ur);
        assert!((monge_ampere_k(&u, &z).unwrap() - expect).abs() < 1e-12);
    }
}

#[test]
fn pluriharmonic_potential_has_degenerate_bordered_matrix() {
    let u = CrPotential::Pluriharmonic { m: 2 };
    assert!(monge_ampere_k(&u, &[0.1, 0.2, -0.1, 0.3]).unwrap().abs() < 1e-15);
}

#[test]
fn sphere_ambient_metric_matches_wirtinger_oracle() {
    let m = 2;
    let u = CrPotential::Sphere { m, c: 1.0 };
    let h = ambient_metric(&u, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let mut diag = vec![Complex64::new(0.0, 0.0); 9];
    (diag[0], diag[4], diag[8]) = (Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    assert!(h.h.iter().zip(&diag).all(|(a, b)| (a - b).norm() < 1e-13));
    // h = [[−u, z̄₀ z_b], [z₀ z̄_a, |z₀|² δ_ab]]
    for p in ambient_points(m, 20, 3) {
        let x = &p.coords;
        let z0 = Complex64::new(x[0], x[1]);
        let z: Vec<Complex64> = (0..m).map(|a| Complex64::new(x[2 + 2 * a], x[3 + 2 * a])).collect();
        let uv = 1.0 - z.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let h = ambient_metric(&u, x).unwrap();
        let n = m + 1;
        for a in 0..n {
            for b in 0..n {
                let e = match (a, b) {
                    (0, 0) => Complex64::new(-uv, 0.0),
                    (0, b) => z0.conj() * z[b - 1],
                    (a, 0) => z0 * z[a - 1].conj(),
                    (a, b) => Complex64::new(if a == b { z0.norm_sqr() } else { 0.0 }, 0.0),
                };
                assert!((h.h[a * n + b] - e).norm() < 1e-13);
            }
        }
        assert!(h.hermitian_residual() < 1e-13);
    }
}

#[test]
fn constant_potential_is_flagged_degenerate() {
    let h = ambient_metric(&CrPotential::Constant { m: 2, v: 1.0 }, &[1.0, 0.0, 0.2, 0.1, 0.0, 0.3]).unwrap();
    assert!((h.h[0].re + 1.0).abs() < 1e-14);
    assert!(h.h.iter().skip(1).all(|c| c.norm() < 1e-14));
    assert!(h.is_degenerate());
    assert_eq!(
        ambient_ricci(&ComplexHessian(AmbientPotential(CrPotential::Constant { m: 2, v: 1.0 })), &[1.0, 0.0, 0.2, 0.1, 0.0, 0.3])
            .unwrap_err(),
        GeomError::SingularAmbient
    );
}

#[test]
fn zero_fibre_coordinate_is_rejected() {
    let u = CrPotential::Sphere { m: 2, c: 1.0 };
    assert_eq!(ambient_metric(&u, &[0.0; 6]).unwrap_err(), GeomError::ZeroFiberCoordinate);
}

#[test]
fn sphere_ambient_is_ricci_flat() {
    for m in [2, 3] {
        let f = ComplexHessian(AmbientPotential(CrPotential::Sphere { m, c: 1.0 }));
        for p in ambient_points(m, 10, 4) {
            let r = ambient_ricci(&f, &p.coords).unwrap();
            assert!(r.iter().all(|c| c.norm() < 1e-6));
        }
    }
    let flat = ComplexHessian(DiagonalPotential(vec![-1.0, 1.0, 1.0]));
    let r = ambient_ricci(&flat, &[0.3, 0.1, -0.2, 0.5, 0.4, 0.0]).unwrap();
    assert!(r.iter().all(|c| c.norm() < 1e-12));
}

#[test]
fn ricci_equals_hessian_of_log_k() {
    let m = 2;
    let u = CrPotential::Perturbed { m, eps: 0.4 };
    let f = ComplexHessian(AmbientPotential(u.clone()));
    let n = m + 1;
    for p in ambient_points(m, 10, 6) {
        let x = &p.coords;
        let r = ambient_ricci(&f, x).unwrap();
        let lk = log_k_hessian(&u, &x[2..]).unwrap();
        let mut worst = 0.0f64;
        let mut size = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let e = if a == 0 || b == 0 { Complex64::new(0.0, 0.0) } else { lk[(a - 1) * m + b - 1] };
                worst = worst.max((r[a * n + b] - e).norm());
                size = size.max(r[a * n + b].norm());
            }
        }
        assert!(worst < 1e-6, "{worst}");
        assert!(size > 1e-2);
    }
}

#[test]
fn kahler_check_on_sphere_ambient_and_control() {
    for m in [2, 3] {
        let f = ComplexHessian(AmbientPotential(CrPotential::Sphere { m, c: 1.0 }));
        let reps = kahler_check(&f, &ambient_points(m, 30, 8), 1e-10, Some((2 * m, 2))).unwrap();
        assert!(reps.iter().all(|r| r.pass), "{reps:?}");
    }
    let bad = kahler_check(&NonClosedHermitian { n: 3, t: 0.5 }, &ambient_points(2, 5, 1), 1e-10, None).unwrap();
    let closed = bad.iter().find(|r| r.check == "ambient.closed").unwrap();
    assert!(!closed.pass && (closed.max - 0.25).abs() < 1e-12);
}

#[test]
fn wirtinger_jets_agree_with_central_differences() {
    // The central-difference truncation error is step²/6 times the next derivative,
    // so the degree-8 perturbed potential gets a correspondingly looser bound.
    let step = 1e-5;
    let sphere = ComplexHessian(AmbientPotential(CrPotential::Sphere { m: 2, c: 1.0 }));
    let perturbed = ComplexHessian(AmbientPotential(CrPotential::Perturbed { m: 2, eps: 0.4 }));
    for p in ambient_points(2, 5, 12) {
        for (f, tol) in [(&sphere, 10.0 * step * step), (&perturbed, 1e-8)] {
            let ad = eval_jet(f, &p.coords, 1, None).unwrap();
            let fd = fd_derivative(f, &p.coords, step, None).unwrap();
            let worst = ad.d1.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(worst < tol, "{worst}");
        }
    }
}

proptest! {
    #[test]
    fn k_is_homogeneous(c in 0.2f64..3.0, x in -0.3f64..0.3, y in -0.3f64..0.3) {
        let z = [x, y, 0.1, -0.2];
        let base = monge_ampere_k(&CrPotential::Perturbed { m: 2, eps: 0.5 }, &z).unwrap();
        let scaled = Scaled(c, CrPotential::Perturbed { m: 2, eps: 0.5 });
        let k = monge_ampere_k(&scaled, &z).unwrap();
        prop_assert!((k - c.powi(3) * base).abs() < 1e-11 * c.powi(3).max(1.0));
    }

    #[test]
    fn ambient_metric_is_hermitian(v in proptest::collection::vec(-0.5f64..0.5, 6)) {
        let mut x = v.clone();
        x[0] += 1.0;
        let h = ambient_metric(&CrPotential::Perturbed { m: 2, eps: 0.5 }, &x).unwrap();
        prop_assert!(h.hermitian_residual() < 1e-13);
    }
}

struct Scaled(f64, CrPotential);

impl Field for Scaled {
    fn dim_in(&self) -> usize {
        self.1.dim_in()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: projtract::jets::Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![self.1.eval(x)[0] * self.0]
    }
}
