use projtract::affine::{ConnectionJet, Idx, ProjectivelyChanged, TensorJet};
use projtract::contact::*;
use projtract::hermitian::{HermitianField, HermitianPart};
use projtract::jets::{eval_jet, ChartBox, Field, Scalar};
use projtract::linalg::{self, max_abs, max_abs_diff};
use projtract::models::*;
use projtract::tractor::TractorSplitting;
use projtract::GeomError;

/// `f^{-2}` for a positive scalar model, as a weight-2 scale.
struct InvSquare(ScalarModel);

impl Field for InvSquare {
    fn dim_in(&self) -> usize {
        self.0.dim()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let f = self.0.eval(x)[0];
        vec![S::one() / (f * f)]
    }
    fn weight(&self) -> f64 {
        2.0
    }
}

/// `θ = dz`, closed and therefore not contact.
struct Dz;

impl Field for Dz {
    fn dim_in(&self) -> usize {
        3
    }
    fn dim_out(&self) -> usize {
        3
    }
    fn eval<S: Scalar>(&self, _x: &[S]) -> Vec<S> {
        vec![S::zero(), S::zero(), S::one()]
    }
    fn weight(&self) -> f64 {
        2.0
    }
}

/// `Γ + 2k_(a φ^c_b)` for a constant `φ`.
struct PhiChanged {
    base: ConnectionModel,
    k: ContactModel,
    phi: Vec<f64>,
}

impl Field for PhiChanged {
    fn dim_in(&self) -> usize {
        self.base.dim()
    }
    fn dim_out(&self) -> usize {
        self.base.dim().pow(3)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let mut g = self.base.eval(x);
        let k = self.k.eval(x);
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let v = k[a] * self.phi[c * n + b] + k[b] * self.phi[c * n + a];
                    g[(c * n + a) * n + b] = g[(c * n + a) * n + b] + v;
                }
            }
        }
        g
    }
}

fn compatible(form: ContactModel, seed: u64) -> ConnectionModel {
    let n = form.dim();
    ConnectionModel::ContactCompatible(form, Some(TrigField::random(n, n * n * n, 0.3, seed)))
}

#[test]
fn reeb_field_of_standard_contact_form() {
    for p in ChartBox::cube(3, 1.5).sample(12, 1) {
        let x = &p.coords;
        let d = contact_data(&ContactModel::StandardR3, &UnitScale(3), x).unwrap();
        // independent square system: θ(t) = 1 and the x, y columns of ω_ab t^a = 0
        let mut a = vec![0.0; 9];
        a[..3].copy_from_slice(&d.theta);
        for r in 0..2 {
            for c in 0..3 {
                a[(1 + r) * 3 + c] = d.omega[c * 3 + r];
            }
        }
        let t = linalg::solve(&a, 3, &[1.0, 0.0, 0.0]).unwrap();
        assert!(max_abs_diff(&t, &[0.0, 0.0, 1.0]) < 1e-12);
        assert!(max_abs_diff(&d.reeb, &t) < 1e-10);
        let (th, tw, inv) = d.identity_residuals();
        assert!(th < 1e-12 && tw < 1e-12 && inv < 1e-12);
    }
}

#[test]
fn closed_form_is_not_contact() {
    let r = contact_data(&Dz, &UnitScale(3), &[0.1, 0.2, 0.3]);
    assert!(matches!(r, Err(GeomError::NotContact)));
}

#[test]
fn compatibility_misfit_matches_hand_value() {
    // flat ∇, k = dz − y dx at y = 0: ∇_(x k_y) = −½ while k_(x η_y) = 0
    let x = [0.3, 0.0, -0.2];
    let c = ConnectionJet::from_field(&ConnectionModel::Flat(3), &x, 1, None).unwrap();
    let k = eval_jet(&ContactModel::StandardR3, &x, 1, None).unwrap();
    let (res, eta) = compatibility_eta(&c, &k);
    assert!((res - 0.5).abs() < 1e-12);
    assert!(max_abs(&eta) < 1e-12);

    // the Heisenberg form is compatible with the flat connection
    let k = eval_jet(&ContactModel::Heisenberg(1), &x, 1, None).unwrap();
    assert!(compatibility_eta(&c, &k).0 < 1e-14);
}

#[test]
fn compatibility_is_projectively_invariant_and_eta_tracks_phi() {
    let form = ContactModel::Heisenberg(2);
    let base = compatible(form, 3);
    let changed = base.clone().changed(OneFormModel::random(5, 0.5, 4));
    let phi: Vec<f64> = TrigField::random(5, 25, 0.4, 5).c;
    let shifted = PhiChanged { base: base.clone(), k: form, phi: phi.clone() };
    for p in ChartBox::cube(5, 1.0).sample(6, 2) {
        let x = &p.coords;
        let k = eval_jet(&form, x, 1, None).unwrap();
        let (r0, e0) = compatibility_eta(&ConnectionJet::from_field(&base, x, 1, None).unwrap(), &k);
        let (r1, e1) = compatibility_eta(&ConnectionJet::from_field(&changed, x, 1, None).unwrap(), &k);
        let (r2, e2) = compatibility_eta(&ConnectionJet::from_field(&shifted, x, 1, None).unwrap(), &k);
        assert!(r0 < 1e-12 && r1 < 1e-12 && r2 < 1e-12);
        // weight-2 k: the symmetrised derivative is unchanged by Υ
        assert!(max_abs_diff(&e0, &e1) < 1e-12);
        // φ shifts η by −2ψ + 2(ψ + tr φ k)/(N+1) with ψ_b = φ^c_b k_c; the second
        // term comes from the change of the density connection γ
        let psi: Vec<f64> = (0..5).map(|b| (0..5).map(|c| phi[c * 5 + b] * k.value[c]).sum()).collect();
        let tr: f64 = (0..5).map(|c| phi[c * 5 + c]).sum();
        let want: Vec<f64> =
            (0..5).map(|b| e0[b] - 2.0 * psi[b] + 2.0 * (psi[b] + tr * k.value[b]) / 6.0).collect();
        assert!(max_abs_diff(&e2, &want) < 1e-11);
    }
}

fn s5() -> (MetricModel, VectorModel, ChartBox) {
    let dom = ChartBox::new(vec![-1.0, -1.0, -1.0, -1.0, -3.0], vec![1.0, 1.0, 1.0, 1.0, 3.0]);
    (MetricModel::HopfSphere(2), VectorModel::Coordinate { n: 5, i: 4, c: 1.0 }, dom)
}

#[test]
fn sasaki_scale_on_s5_is_distinguished_and_torsion_free() {
    let (m, kv, dom) = s5();
    let s = TractorSplitting::new(ConnectionModel::LeviCivita(m.clone()), dom.clone());
    let k = LoweredWeighted { metric: m.clone(), vector: kv.clone(), weight: 2.0 };
    let tau = ScaleDensity { metric: m.clone(), weight: 2.0 };
    for p in dom.sample(5, 7) {
        let x = &p.coords;
        let d = contact_data(&k, &tau, x).unwrap();
        // Reeb field is the Killing field itself
        assert!(max_abs_diff(&d.reeb, &kv.eval(x)) < 1e-10);
        let (th, tw, inv) = d.identity_residuals();
        assert!(th < 1e-10 && tw < 1e-10 && inv < 1e-10);

        let f = s.frame(x).unwrap();
        let kj = eval_jet(&k, x, 1, None).unwrap();
        let (res, eta) = compatibility_eta(&f.conn, &kj);
        assert!(res < 1e-10 && max_abs(&eta) < 1e-10);
        let t = contact_torsion(&f.conn, &d, 1e-8).unwrap();
        assert!(max_abs(&t.t) < 1e-8);

        let r = distinguished_connection_residual(&f, &d, None);
        assert!(r.a < 1e-8 && r.b < 1e-8 && r.c < 1e-8, "{r:?}");
        assert!(r.omega_trace < 1e-8 && r.weyl_trace < 1e-8, "{r:?}");
    }
}

#[test]
fn three_dimensional_torsion_vanishes() {
    let conn = compatible(ContactModel::StandardR3, 11);
    for p in ChartBox::cube(3, 1.0).sample(8, 3) {
        let x = &p.coords;
        let c = ConnectionJet::from_field(&conn, x, 1, None).unwrap();
        let d = contact_data(&ContactModel::StandardR3, &UnitScale(3), x).unwrap();
        let t = contact_torsion(&c, &d, 1e-10).unwrap();
        // ν̄ itself is not zero; only its trace-free part vanishes
        assert!(max_abs(&t.nu) > 1e-3);
        assert!(max_abs(&t.t) < 1e-12);
    }
}

#[test]
fn incompatible_connection_is_rejected() {
    let x = [0.3, 0.4, -0.2];
    let c = ConnectionJet::from_field(&ConnectionModel::Flat(3), &x, 1, None).unwrap();
    let d = contact_data(&ContactModel::StandardR3, &UnitScale(3), &x).unwrap();
    assert!(matches!(contact_torsion(&c, &d, 1e-8), Err(GeomError::IncompatibleConnection(_))));
}

#[test]
fn torsion_is_independent_of_scale_and_connection() {
    let form = ContactModel::Heisenberg(2);
    let base = compatible(form, 21);
    let changed = base.clone().changed(OneFormModel::random(5, 0.5, 22));
    let f = ScalarModel::random_positive(5, 23);
    for p in ChartBox::cube(5, 1.0).sample(6, 4) {
        let x = &p.coords;
        let c0 = ConnectionJet::from_field(&base, x, 1, None).unwrap();
        let c1 = ConnectionJet::from_field(&changed, x, 1, None).unwrap();
        let d0 = contact_data(&form, &UnitScale(5), x).unwrap();
        let d1 = contact_data(&form, &InvSquare(f.clone()), x).unwrap();
        let t0 = contact_torsion(&c0, &d0, 1e-10).unwrap();
        let t1 = contact_torsion(&c0, &d1, 1e-10).unwrap();
        let t2 = contact_torsion(&c1, &d1, 1e-10).unwrap();
        assert!(max_abs(&t0.t) > 1e-2);
        for (t, d) in [(&t0, &d0), (&t1, &d1), (&t2, &d1)] {
            let s = torsion_symmetry_residuals(t, d);
            assert!(s.iter().all(|v| *v < 1e-9), "{s:?}");
        }
        let h = linalg::null_space(&d0.theta, 1, 5, 1e-12);
        for u in &h {
            for v in &h {
                let a = t0.apply(u, v);
                assert!(max_abs_diff(&a, &t1.apply(u, v)) < 1e-8);
                assert!(max_abs_diff(&a, &t2.apply(u, v)) < 1e-8);
            }
        }
    }
}

fn torsion_jet(t: &HeisenbergTorsion, x: &[f64]) -> TensorJet {
    TensorJet::of_field(t, x, vec![Idx::Up, Idx::Up, Idx::Up], 2).unwrap()
}

#[test]
fn synthetic_torsion_has_the_algebraic_symmetries() {
    let t = HeisenbergTorsion::random(2, 0.7, 5);
    assert_eq!(t.rank(), 16);
    let x = [0.2, -0.3, 0.5, 0.1, -0.4];
    let d = contact_data(&ContactModel::Heisenberg(2), &UnitScale(5), &x).unwrap();
    let v = t.eval(&x);
    let l = d.l_lower();
    let n = 5;
    let at = |a: usize, b: usize, c: usize| v[(a * n + b) * n + c];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                assert!((at(a, b, c) + at(b, a, c)).abs() < 1e-12);
                assert!((at(a, b, c) + at(b, c, a) + at(c, a, b)).abs() < 1e-12);
            }
        }
    }
    for c in 0..n {
        let tr: f64 = (0..n * n).map(|ab| l[ab] * v[ab * n + c]).sum();
        assert!(tr.abs() < 1e-12);
        for b in 0..n {
            let ka: f64 = (0..n).map(|a| d.k[a] * at(a, b, c)).sum();
            assert!(ka.abs() < 1e-12);
        }
    }
    assert!(max_abs(&v) > 1e-2);
}

#[test]
fn extension_tensor_symmetries_and_scale_independence() {
    let form = ContactModel::Heisenberg(2);
    let t = HeisenbergTorsion::random(2, 0.7, 31);
    let dom = ChartBox::cube(5, 1.0);
    let s0 = TractorSplitting::new(ConnectionModel::ContactCompatible(form, None), dom.clone());
    let f = ScalarModel::random_positive(5, 32);
    let s1 = TractorSplitting::new(
        ProjectivelyChanged { base: ConnectionModel::ContactCompatible(form, None), upsilon: OneFormModel::LogGradient(f.clone(), 1.0) },
        dom.clone(),
    );
    for p in dom.sample(5, 6) {
        let x = &p.coords;
        let tj = torsion_jet(&t, x);
        let (f0, f1) = (s0.frame(x).unwrap(), s1.frame(x).unwrap());
        let d0 = contact_data(&form, &UnitScale(5), x).unwrap();
        let d1 = contact_data(&form, &InvSquare(f.clone()), x).unwrap();
        let e0 = extension_tensor(&f0, &d0, &tj).unwrap();
        let e1 = extension_tensor(&f1, &d1, &tj).unwrap();
        let sym = extension_symmetry_residuals(&d0, &e0, &tj.v);
        assert!(sym.iter().all(|v| *v < 1e-9), "{sym:?}");
        let sym = extension_symmetry_residuals(&d1, &e1, &tj.v);
        assert!(sym.iter().all(|v| *v < 1e-9), "{sym:?}");
        // the transverse part is genuinely nonzero, so agreement is not vacuous
        let off = max_abs_diff(&e0, &d0.project_lower(&e0, 3));
        assert!(off > 1e-3, "{off}");
        assert!(max_abs_diff(&e0, &e1) < 1e-7, "{}", max_abs_diff(&e0, &e1));

        // the flat connection with the unit scale satisfies (a) and (b)
        let r = distinguished_connection_residual(&f0, &d0, None);
        assert!(r.a < 1e-12 && r.b < 1e-12);
        let r = distinguished_connection_residual(&f1, &d1, None);
        assert!(r.a < 1e-10 && r.b < 1e-10);
    }
}

#[test]
fn zero_torsion_gives_zero_extension() {
    let form = ContactModel::Heisenberg(2);
    let s = TractorSplitting::new(compatible(form, 41), ChartBox::cube(5, 1.0));
    let x = [0.1, 0.2, -0.3, 0.4, 0.0];
    let d = contact_data(&form, &UnitScale(5), &x).unwrap();
    let zero = TensorJet::constant(5, vec![Idx::Up, Idx::Up, Idx::Up], -4.0, vec![0.0; 125]);
    assert_eq!(max_abs(&extension_tensor(&s.frame(&x).unwrap(), &d, &zero).unwrap()), 0.0);
}

#[test]
fn phi_change_breaks_condition_b() {
    let form = ContactModel::Heisenberg(1);
    let phi: Vec<f64> = TrigField::random(3, 9, 0.5, 51).c;
    let s = TractorSplitting::new(PhiChanged { base: ConnectionModel::ContactCompatible(form, None), k: form, phi }, ChartBox::cube(3, 1.0));
    let x = [0.2, 0.1, -0.3];
    let d = contact_data(&form, &UnitScale(3), &x).unwrap();
    let r = distinguished_connection_residual(&s.frame(&x).unwrap(), &d, None);
    assert!(r.b > 1e-2);
}

#[test]
fn flat_connection_with_varying_scale_breaks_condition_a() {
    let form = ContactModel::Heisenberg(1);
    let s = TractorSplitting::new(ConnectionModel::Flat(3), ChartBox::cube(3, 1.0));
    let x = [0.2, 0.1, -0.3];
    let d = contact_data(&form, &InvSquare(ScalarModel::random_positive(3, 61)), &x).unwrap();
    assert!(distinguished_connection_residual(&s.frame(&x).unwrap(), &d, None).a > 1e-2);
}

#[test]
fn symplectic_reduction_on_s5_and_flat_model() {
    let (m, kv, dom) = s5();
    let s = TractorSplitting::new(ConnectionModel::LeviCivita(m.clone()), dom.clone());
    let om = HermitianField { metric: m, k: kv, part: HermitianPart::TwoForm };
    let pts = dom.sample(4, 9);
    for c in symplectic_reduction_check(&s, &om, &pts, 1e-5, 1e-7, 1e-6).unwrap() {
        assert!(c.pass, "{c:?}");
    }

    let model = FlatModel { p: 4, q: 2 };
    let dom = ChartBox::cube(5, 0.5);
    let s = TractorSplitting::new(ConnectionModel::Flat(5), dom.clone());
    let pts = dom.sample(4, 10);
    let om = FlatModelBilinear { model, form: model.omega0().unwrap() };
    for c in symplectic_reduction_check(&s, &om, &pts, 1e-5, 1e-7, 1e-6).unwrap() {
        assert!(c.pass, "{c:?}");
    }

    // zero out one Darboux pair: parallel but degenerate
    let mut form = model.omega0().unwrap();
    for i in 0..6 {
        for j in 0..6 {
            if i < 2 || j < 2 {
                form[i * 6 + j] = 0.0;
            }
        }
    }
    let om = FlatModelBilinear { model, form };
    let reports = symplectic_reduction_check(&s, &om, &pts, 1e-5, 1e-7, 1e-6).unwrap();
    let get = |n: &str| reports.iter().find(|c| c.check == n).unwrap().pass;
    assert!(get("contact.omega_parallel"));
    assert!(!get("contact.omega_nondegenerate"));
    assert!(!get("contact.k_contact"));
}
