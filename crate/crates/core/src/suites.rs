//! Check suites: each runs one family of residuals over sampled points and
//! returns one report per named check.

use crate::affine::{
    algebraic_invariants, density_derivative, identity_residuals, levi_civita, metricity_residual,
    projective_change, projective_invariants, ConnectionJet, Idx, LeviCivita, ProjectivelyChanged, TensorJet,
};
use crate::ambient::{ambient_ricci, kahler_check, log_k_hessian, monge_ampere_k, AmbientPotential, ComplexHessian, CrPotential};
use crate::bgg::{
    adjoint_normality_residual, bgg_adjoint, bgg_killing, killing_normality_residual, symmetry_residual,
    CovariantOneForm, SplitAdjointField, SplitTwoFormField,
};
use crate::contact::{
    compatibility_eta, contact_data, contact_torsion, distinguished_connection_residual, extension_symmetry_residuals,
    extension_tensor, symplectic_reduction_check, torsion_symmetry_residuals, UnitScale,
};
use crate::error::{GeomError, Result};
use crate::hermitian::{
    assemble_hermitian, einstein_residual, parallel_residual, verify_parallel_hermitian, verify_sasaki, HermitianField,
    HermitianPart, SasakiCandidate,
};
use crate::jets::{ad_fd_residual, eval_jet, ChartBox, Field, MetricJet, Point, Scalar};
use crate::leafspace::{
    c_projective_residual, fefferman_connection_residual, induced_kahler, leaf_split, lie_derivative_residuals, LeafChart,
};
use crate::linalg;
use crate::models::{
    ConnectionModel, ContactModel, FlatModel, FlatModelBilinear, FlatModelEndo, FlatModelK, HeisenbergTorsion,
    LoweredWeighted, OneFormModel, ScalarModel, ScaleDensity, TrigField,
};
use crate::orbits::{bisect_boundary, classify_points, compactification_trace, tau_field, verify_orbits, ExpectedSignatures};
use crate::report::{CheckReport, Residual, Tolerances};
use crate::tractor::{
    curvature_from_form, holonomy_sample, oblique_paths, resplit_value, tractor_curvature, tractor_derivative,
    tractor_derivative_components, transport_matrix, volume_form_derivative, InBundle, Resplit, TractorKind, TractorSplitting,
};

/// Sampling and tolerance settings shared by all suites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteOptions {
    pub points: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub ode_steps: usize,
    pub tol: Tolerances,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { points: 200, seed: 42, fd_step: 1e-5, ode_steps: 512, tol: Tolerances::default() }
    }
}

/// Holonomy loops per scenario.
pub const HOLONOMY_LOOPS: usize = 4;

/// A check that could not be evaluated: reported as a failure carrying the error.
pub fn failed_check(name: &str, tol: f64, at: &[f64], err: &GeomError) -> CheckReport {
    let mut r = Residual::new(name, tol);
    r.push(f64::INFINITY, at);
    r.detail(format!("error: {err}"), 1.0);
    r.fail();
    r.finish()
}

fn residuals(names: &[&str], tol: &[f64]) -> Vec<Residual> {
    names.iter().zip(tol).map(|(n, t)| Residual::new(*n, *t)).collect()
}

fn finish(rs: Vec<Residual>) -> Vec<CheckReport> {
    rs.into_iter().map(Residual::finish).collect()
}

// ---------------------------------------------------------------------------
// affine and projective

/// Structural identities of the curvature of a connection field.
pub fn affine_suite<G: Field>(conn: &G, domain: &ChartBox, points: &[Point], tol: &Tolerances) -> Result<Vec<CheckReport>> {
    let mut rs = residuals(
        &["affine.bianchi", "affine.decomposition", "affine.weyl_trace_free", "affine.beta", "affine.differential_bianchi"],
        &[tol.alg, tol.alg, tol.alg, tol.alg, tol.d2],
    );
    for p in points {
        let x = &p.coords;
        let c = ConnectionJet::from_field(conn, x, 2, Some(domain))?;
        let r = identity_residuals(&projective_invariants(&c)?);
        for (res, v) in rs.iter_mut().zip([r.bianchi, r.decomposition, r.weyl_trace, r.beta, r.differential_bianchi]) {
            res.push(v, x);
        }
    }
    Ok(finish(rs))
}

/// Identities special to Levi-Civita connections: metricity, symmetric Ricci
/// and `Ric = (N−1)P`; also the explicit and generic Christoffel routes.
pub fn metric_suite<M: Field + Clone>(metric: &M, domain: &ChartBox, points: &[Point], tol: &Tolerances) -> Result<Vec<CheckReport>> {
    let mut rs = residuals(
        &["affine.metricity", "affine.ric_symmetric", "affine.ric_is_n_schouten", "affine.christoffel_routes"],
        &[tol.alg, tol.alg, tol.alg, tol.alg],
    );
    let lc = LeviCivita(metric.clone());
    for p in points {
        let x = &p.coords;
        let mj = MetricJet::eval(metric, x, Some(domain))?;
        let c = levi_civita(&mj)?;
        let n = c.n;
        rs[0].push(metricity_residual(&mj, &c)?, x);
        let inv = algebraic_invariants(&c)?;
        let asym: Vec<f64> = (0..n * n).map(|q| inv.ric[q] - inv.ric[(q % n) * n + q / n]).collect();
        rs[1].push_max(&asym, x);
        let np: Vec<f64> = (0..n * n).map(|q| inv.ric[q] - (n as f64 - 1.0) * inv.p[q]).collect();
        rs[2].push_max(&np, x);
        let generic = ConnectionJet::from_field(&lc, x, 1, Some(domain))?;
        rs[3].push(linalg::max_abs_diff(&generic.gamma, &c.gamma).max(linalg::max_abs_diff(&generic.dgamma, &c.dgamma)), x);
    }
    Ok(finish(rs))
}

/// Number of seeded projective changes used by the invariance check.
pub const PROJECTIVE_CHANGES: u64 = 10;

/// Weyl invariance under seeded projective changes (relative, tolerance
/// `10·tol.alg`) and the transformation law of the density connection.
pub fn projective_suite<G: Field + Clone>(
    conn: &G,
    domain: &ChartBox,
    points: &[Point],
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<CheckReport>> {
    let n = conn.dim_in();
    let changes: Vec<OneFormModel> =
        (0..PROJECTIVE_CHANGES).map(|i| OneFormModel::random(n, 0.5, seed.wrapping_mul(1000).wrapping_add(i))).collect();
    let sigma = ScalarModel::random_positive(n, seed.wrapping_add(17));
    let mut weyl = Residual::new("projective.weyl_invariance", 10.0 * tol.alg);
    let mut dens = Residual::new("projective.density_law", tol.alg);
    let mut flat = Residual::new("projective.change_routes", tol.alg);
    weyl.detail("changes", PROJECTIVE_CHANGES as f64);
    for (i, p) in points.iter().enumerate() {
        let x = &p.coords;
        let u = &changes[i % changes.len()];
        let c = ConnectionJet::from_field(conn, x, 1, Some(domain))?;
        let ch = ProjectivelyChanged { base: conn.clone(), upsilon: u.clone() };
        let c2 = ConnectionJet::from_field(&ch, x, 1, Some(domain))?;
        let w0 = algebraic_invariants(&c)?.w;
        let w1 = algebraic_invariants(&c2)?.w;
        weyl.push(linalg::max_abs_diff(&w0, &w1) / (1.0 + linalg::max_abs(&w0)), x);

        let uj = eval_jet(u, x, 1, None)?;
        let cj = projective_change(&c, &uj);
        flat.push(linalg::max_abs_diff(&cj.gamma, &c2.gamma).max(linalg::max_abs_diff(&cj.dgamma, &c2.dgamma)), x);
        let sj = eval_jet(&sigma, x, 1, None)?;
        let mut worst = 0.0f64;
        for w in [-2.0, 1.0, 3.0] {
            let a = density_derivative(&c, &sj, w);
            let b = density_derivative(&cj, &sj, w);
            for q in 0..n {
                worst = worst.max((b[q] - a[q] - w * uj.value[q] * sj.value[0]).abs());
            }
        }
        dens.push(worst, x);
    }
    Ok(vec![weyl.finish(), dens.finish(), flat.finish()])
}

// ---------------------------------------------------------------------------
// tractor connection

/// Curvature by two routes, the parallel volume form, the two derivative
/// routes and equivariance of the tractor derivative under resplitting.
pub fn tractor_suite<G: Field + Clone>(s: &TractorSplitting<G>, points: &[Point], seed: u64, tol: &Tolerances) -> Result<Vec<CheckReport>> {
    let n = s.dim();
    let r = n + 1;
    let mut rs = residuals(
        &["tractor.curvature_routes", "tractor.volume_form_parallel", "tractor.derivative_routes", "tractor.resplit_equivariance"],
        &[tol.d2, tol.alg, tol.alg, tol.alg],
    );
    let fields: Vec<(TractorKind, InBundle<TrigField>)> = [TractorKind::Standard, TractorKind::Dual, TractorKind::TwoForm, TractorKind::Adjoint]
        .into_iter()
        .enumerate()
        .map(|(i, k)| (k, InBundle { kind: k, field: TrigField::random(n, k.len(r), 0.5, seed.wrapping_add(100 + i as u64)) }))
        .collect();
    let upsilon = OneFormModel::random(n, 0.4, seed.wrapping_add(200));
    let hat = TractorSplitting::new(ProjectivelyChanged { base: s.connection.clone(), upsilon: upsilon.clone() }, s.domain.clone());
    let std_field = &fields[0].1;
    let resplit = Resplit { tractor: std_field.clone(), upsilon: upsilon.clone() };
    for p in points {
        let x = &p.coords;
        let f = s.frame(x)?;
        let a = tractor_curvature(&f);
        let b = curvature_from_form(&f)?;
        let d = a.iter().zip(&b).map(|(u, v)| linalg::max_abs_diff(u, v)).fold(0.0, f64::max);
        rs[0].push(d, x);
        let (v1, v2) = volume_form_derivative(&f);
        rs[1].push(linalg::max_abs(&v1).max(linalg::max_abs(&v2)), x);
        let mut worst = 0.0f64;
        for (kind, fld) in &fields {
            let j = eval_jet(fld, x, 1, None)?;
            let u = tractor_derivative(&f, *kind, &j, 0.0)?;
            let v = tractor_derivative_components(&f, *kind, &j, 0.0)?;
            for (p, q) in u.iter().zip(&v) {
                worst = worst.max(linalg::max_abs_diff(p, q));
            }
        }
        rs[2].push(worst, x);
        let fh = hat.frame(x)?;
        let dt = tractor_derivative(&f, TractorKind::Standard, &eval_jet(std_field, x, 1, None)?, 0.0)?;
        let dh = tractor_derivative(&fh, TractorKind::Standard, &eval_jet(&resplit, x, 1, None)?, 0.0)?;
        let ux = upsilon.eval(x);
        let worst = dt
            .iter()
            .zip(&dh)
            .map(|(a, b)| linalg::max_abs_diff(&resplit_value(TractorKind::Standard, &ux, a), b))
            .fold(0.0, f64::max);
        rs[3].push(worst, x);
    }
    Ok(finish(rs))
}

// ---------------------------------------------------------------------------
// Sasaki structures and parallel Hermitian tractors

/// Transport-matrix holonomy of seeded loops must preserve the listed forms:
/// `Uᵀ F(x₀) U = F(x₀)` with `x₀` the loop base.
pub fn holonomy_suite<G: Field, F: Field>(
    s: &TractorSplitting<G>,
    forms: &[(&str, &F)],
    seed: u64,
    steps: usize,
    tol: f64,
) -> Result<Vec<CheckReport>> {
    let r = s.dim() + 1;
    let loops = holonomy_sample(s, HOLONOMY_LOOPS, seed, steps)?;
    let mut out = Vec::new();
    for (name, form) in forms {
        let mut res = Residual::new(format!("holonomy.preserves_{name}"), tol);
        for (path, u) in &loops {
            let (x0, _) = path.at(0.0);
            let h = form.eval(&x0);
            let back = linalg::matmul(&linalg::transpose(u, r), &linalg::matmul(&h, u, r), r);
            res.push(linalg::max_abs_diff(&back, &h), &x0);
        }
        res.detail("loops", loops.len() as f64);
        res.detail("steps", steps as f64);
        out.push(res.finish());
    }
    Ok(out)
}

/// Sasaki criteria, the Einstein constant, assembly of `(h, Ω, J)` with its
/// parallelism, the tractor signature and holonomy invariance.
pub fn sasaki_suite<M: Field + Clone, K: Field + Clone>(
    metric: &M,
    k: &K,
    domain: &ChartBox,
    points: &[Point],
    opts: &SuiteOptions,
) -> Result<Vec<CheckReport>> {
    let tol = opts.tol;
    let cand = SasakiCandidate { metric: metric.clone(), k: k.clone(), domain: domain.clone() };
    let at = points.first().map(|p| p.coords.clone()).unwrap_or_default();
    let mut out = match verify_sasaki(&cand, points, tol.d2) {
        Ok(v) => v,
        Err(e) => return Ok(vec![failed_check("sasaki.unit_length", tol.d2, &at, &e)]),
    };
    out.push(match einstein_residual(metric, domain, points, tol.d2) {
        Ok(c) => c,
        Err(e) => failed_check("einstein.ric_minus_2m_g", tol.d2, &at, &e),
    });
    if out.iter().any(|c| !c.pass) {
        let e = GeomError::NotSasakiEinstein("criteria failed; Hermitian tractors not assembled".into());
        out.push(failed_check("hermitian.assembly", 0.0, &at, &e));
        return Ok(out);
    }
    let data = match assemble_hermitian(&cand, points, tol.d2) {
        Ok(d) => d,
        Err(e) => {
            out.push(failed_check("hermitian.assembly", 0.0, &at, &e));
            return Ok(out);
        }
    };
    let s = TractorSplitting::new(LeviCivita(metric.clone()), domain.clone());
    out.extend(verify_parallel_hermitian(&s, &data.h, &data.omega, &data.j, points, opts.fd_step, tol.d1, tol.alg)?);

    let n = s.dim();
    let mut sig = Residual::new("hermitian.signature", 0.0);
    for p in points {
        let x = &p.coords;
        let g_sig = linalg::signature(&metric.eval(x), n, 1e-9);
        let h_sig = crate::hermitian::signature(&data.h.eval(x), n + 1);
        sig.push(if h_sig == (g_sig.0 + 1, g_sig.1) { 0.0 } else { 1.0 }, x);
    }
    let h0 = crate::hermitian::signature(&data.h.eval(&data.base_point), n + 1);
    sig.detail("positive", h0.0 as f64);
    sig.detail("negative", h0.1 as f64);
    out.push(sig.finish());
    out.extend(holonomy_suite(&s, &[("h", &data.h), ("omega", &data.omega)], opts.seed, opts.ode_steps, tol.d2)?);
    Ok(out)
}

/// Parallel Hermitian data `(h₀, Ω₀, J₀)` of a flat model in the flat
/// affine splitting.
pub fn flat_hermitian_suite(model: FlatModel, points: &[Point], opts: &SuiteOptions) -> Result<Vec<CheckReport>> {
    let n = model.dim();
    let (j0, om0) = match (model.j0(), model.omega0()) {
        (Some(j), Some(o)) => (j, o),
        _ => {
            return Err(GeomError::InvalidArgument(format!(
                "flat model ({}, {}) carries no complex structure",
                model.p, model.q
            )))
        }
    };
    let domain = ChartBox::cube(n, 2.0);
    let s = TractorSplitting::new(ConnectionModel::Flat(n), domain.clone());
    let h = FlatModelBilinear { model, form: model.h0() };
    let om = FlatModelBilinear { model, form: om0 };
    let j = FlatModelEndo { model, endo: j0 };
    let mut out = verify_parallel_hermitian(&s, &h, &om, &j, points, opts.fd_step, opts.tol.d1, opts.tol.alg)?;
    let mut sig = Residual::new("hermitian.signature", 0.0);
    for p in points {
        let got = crate::hermitian::signature(&h.eval(&p.coords), n + 1);
        sig.push(if got == (model.p, model.q) { 0.0 } else { 1.0 }, &p.coords);
    }
    sig.detail("positive", model.p as f64);
    sig.detail("negative", model.q as f64);
    out.push(sig.finish());
    out.extend(holonomy_suite(&s, &[("h", &h), ("omega", &om)], opts.seed, opts.ode_steps, opts.tol.d2)?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// BGG operators

/// Prolongation of the Killing form `k♭` (weight 2), the Killing and adjoint
/// BGG operators with their normality conditions, and parallelism of the
/// splitting-operator images.
pub fn bgg_suite<M: Field + Clone, K: Field + Clone>(
    metric: &M,
    k: &K,
    domain: &ChartBox,
    points: &[Point],
    opts: &SuiteOptions,
) -> Result<Vec<CheckReport>> {
    let tol = opts.tol;
    let conn = LeviCivita(metric.clone());
    let s = TractorSplitting::new(conn.clone(), domain.clone());
    let kl = LoweredWeighted { metric: metric.clone(), vector: k.clone(), weight: 2.0 };
    let mu = CovariantOneForm { connection: conn.clone(), k: kl.clone() };
    let two = SplitTwoFormField { connection: conn.clone(), k: kl.clone() };
    let adj = SplitAdjointField { connection: conn.clone(), xi: k.clone() };
    let mut rs = residuals(
        &[
            "bgg.prolongation_parallel",
            "bgg.killing",
            "bgg.killing_normality",
            "bgg.adjoint",
            "bgg.adjoint_normality",
            "bgg.symmetry",
            "bgg.two_form_parallel.ad",
            "bgg.two_form_parallel.fd",
            "bgg.adjoint_parallel.ad",
            "bgg.adjoint_parallel.fd",
        ],
        &[tol.d2, tol.alg, tol.d2, tol.alg, tol.d2, tol.alg, tol.d2, tol.d1, tol.d2, tol.d1],
    );
    for p in points {
        let x = &p.coords;
        let f = s.frame(x)?;
        let kj = eval_jet(&kl, x, 1, Some(domain))?;
        let mj = eval_jet(&mu, x, 1, Some(domain))?;
        let (a, b) = crate::tractor::prolongation_derivative(&f, &kj, &mj)?;
        rs[0].push(linalg::max_abs(&a).max(linalg::max_abs(&b)), x);
        rs[1].push(linalg::max_abs(&bgg_killing(&f, &kj)?), x);
        rs[2].push(linalg::max_abs(&killing_normality_residual(&f, &kj.value)), x);
        let xj = eval_jet(k, x, 2, Some(domain))?;
        rs[3].push(linalg::max_abs(&bgg_adjoint(&f, &xj)?), x);
        let (w, c) = adjoint_normality_residual(&f, &xj.value);
        rs[4].push(linalg::max_abs(&w).max(linalg::max_abs(&c)), x);
        rs[5].push(linalg::max_abs(&symmetry_residual(&f, &xj)?), x);
        let (ad, fd) = parallel_residual(&s, &two, TractorKind::TwoForm, x, opts.fd_step)?;
        rs[6].push(ad, x);
        rs[7].push(fd, x);
        let (ad, fd) = parallel_residual(&s, &adj, TractorKind::Adjoint, x, opts.fd_step)?;
        rs[8].push(ad, x);
        rs[9].push(fd, x);
    }
    Ok(finish(rs))
}

// ---------------------------------------------------------------------------
// orbits of a parallel tractor metric

/// Boundary points found by bisecting between samples of opposite `τ` sign,
/// returned as `(interior start, boundary point)`.
pub fn boundary_pairs<H: Field>(h: &H, points: &[Point], max: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let taus: Vec<f64> = points.iter().map(|p| tau_field(h, &p.coords)).collect();
    let mut out = Vec::new();
    for i in 0..points.len() {
        if out.len() >= max {
            break;
        }
        let j = (i + 1..points.len()).find(|&j| taus[i] * taus[j] < 0.0);
        if let Some(j) = j {
            if let Ok(x) = bisect_boundary(h, &points[i].coords, &points[j].coords, 1e-12) {
                out.push((points[i].coords.clone(), x));
            }
        }
    }
    out
}

/// Orbit decomposition for the flat model of a tractor metric of signature
/// `(p, q)`: labels, open-orbit Einstein metrics and signatures, boundary
/// conformal structure, the null conformal Killing field and compactification.
pub fn orbits_suite(model: FlatModel, points: &[Point], opts: &SuiteOptions) -> Result<Vec<CheckReport>> {
    let n = model.dim();
    let tol = opts.tol;
    let s = TractorSplitting::new(ConnectionModel::Flat(n), ChartBox::cube(n, 2.0));
    let h = FlatModelBilinear { model, form: model.h0() };
    let pairs = boundary_pairs(&h, points, 20);
    let boundary: Vec<Vec<f64>> = pairs.iter().map(|(_, b)| b.clone()).collect();
    let mut samples = points.to_vec();
    samples.extend(boundary.iter().cloned().map(Point::new));
    let expected = Some(ExpectedSignatures::for_signature(model.p, model.q));
    let k = model.j0().map(|_| FlatModelK(model));
    let mut out = verify_orbits(&s, &h, k.as_ref(), &samples, &boundary, expected, tol.d2, tol.d1)?;

    // every orbit permitted by the signature must be seen
    let cls = classify_points(&s, &h, &samples)?;
    let want = [model.p > 0, model.p > 0 && model.q > 0, model.q > 0];
    let mut labels = Residual::new("orbits.labels_present", 0.0);
    for (i, name) in ["plus", "zero", "minus"].iter().enumerate() {
        labels.detail(*name, cls.counts[i] as f64);
        labels.push(if want[i] && cls.counts[i] == 0 { 1.0 } else { 0.0 }, &[]);
    }
    out.push(labels.finish());

    if !pairs.is_empty() {
        let mut conv = Residual::new("orbits.compactification_converges", tol.d2);
        let mut ctrl = Residual::new("orbits.control_diverges", 1e-5);
        for (from, to) in pairs.iter().take(4) {
            let tr = compactification_trace(&s, &h, from, to, 24)?;
            conv.push(*tr.corrected_steps.last().unwrap_or(&f64::INFINITY), to);
            if !tr.corrected_converges(tol.d2) {
                conv.fail();
            }
            ctrl.push(1.0 / tr.control_growth(), to);
        }
        out.push(conv.finish());
        out.push(ctrl.finish());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// contact geometry

/// Reeb system residuals of a contact form with the unit scale.
fn reeb_checks<K: Field>(form: &K, points: &[Point], tol: &Tolerances) -> Result<Vec<CheckReport>> {
    let n = form.dim_in();
    let mut rs = residuals(&["contact.reeb", "contact.reeb_inverse"], &[tol.alg, tol.alg]);
    for p in points {
        let d = contact_data(form, &UnitScale(n), &p.coords)?;
        let (th, tw, inv) = d.identity_residuals();
        rs[0].push(th.max(tw), &p.coords);
        rs[1].push(inv, &p.coords);
    }
    Ok(finish(rs))
}

/// Contact forms on `ℝ^{2m+1}` with a compatible connection. In dimension 3
/// the torsion vanishes identically; above it the torsion symmetries, scale
/// independence and the extension tensor of a synthetic torsion are checked.
pub fn contact_model_suite(form: ContactModel, points: &[Point], seed: u64, tol: &Tolerances) -> Result<Vec<CheckReport>> {
    let n = form.dim();
    let m = (n - 1) / 2;
    let conn = ConnectionModel::ContactCompatible(form, Some(TrigField::random(n, n * n * n, 0.3, seed)));
    let mut out = reeb_checks(&form, points, tol)?;
    let mut compat = Residual::new("contact.compatibility", tol.alg);
    for p in points {
        let c = ConnectionJet::from_field(&conn, &p.coords, 1, None)?;
        let kj = eval_jet(&form, &p.coords, 1, None)?;
        compat.push(compatibility_eta(&c, &kj).0, &p.coords);
    }
    out.push(compat.finish());
    if n == 3 {
        let mut t = Residual::new("contact.torsion_dim3", tol.alg);
        for p in points {
            let c = ConnectionJet::from_field(&conn, &p.coords, 1, None)?;
            let d = contact_data(&form, &UnitScale(3), &p.coords)?;
            t.push(linalg::max_abs(&contact_torsion(&c, &d, 1e-8)?.t), &p.coords);
        }
        out.push(t.finish());
        return Ok(out);
    }
    let changed = conn.clone().changed(OneFormModel::random(n, 0.5, seed.wrapping_add(1)));
    let f = ScalarModel::random_positive(n, seed.wrapping_add(2));
    let scale = InvSquare(f.clone());
    let mut rs = residuals(
        &[
            "contact.torsion_symmetries",
            "contact.torsion_scale_independence",
            "contact.extension_symmetries",
            "contact.extension_scale_independence",
        ],
        &[10.0 * tol.alg, tol.d1, 10.0 * tol.alg, tol.d1],
    );
    let synthetic = HeisenbergTorsion::random(m, 0.7, seed.wrapping_add(3));
    let flat_compatible = ConnectionModel::ContactCompatible(form, None);
    let s0 = TractorSplitting::new(flat_compatible.clone(), ChartBox::cube(n, 2.0));
    let s1 = TractorSplitting::new(
        ProjectivelyChanged { base: flat_compatible, upsilon: OneFormModel::LogGradient(f.clone(), 1.0) },
        ChartBox::cube(n, 2.0),
    );
    for p in points {
        let x = &p.coords;
        let c0 = ConnectionJet::from_field(&conn, x, 1, None)?;
        let c1 = ConnectionJet::from_field(&changed, x, 1, None)?;
        let d0 = contact_data(&form, &UnitScale(n), x)?;
        let d1 = contact_data(&form, &scale, x)?;
        let t0 = contact_torsion(&c0, &d0, 1e-8)?;
        let t1 = contact_torsion(&c0, &d1, 1e-8)?;
        let t2 = contact_torsion(&c1, &d1, 1e-8)?;
        let sym = [torsion_symmetry_residuals(&t0, &d0), torsion_symmetry_residuals(&t2, &d1)];
        rs[0].push(sym.iter().flatten().fold(0.0f64, |m, v| m.max(*v)), x);
        let h = linalg::null_space(&d0.theta, 1, n, 1e-12);
        let mut worst = 0.0f64;
        for u in &h {
            for v in &h {
                let a = t0.apply(u, v);
                worst = worst.max(linalg::max_abs_diff(&a, &t1.apply(u, v))).max(linalg::max_abs_diff(&a, &t2.apply(u, v)));
            }
        }
        rs[1].push(worst, x);

        let tj = TensorJet::of_field(&synthetic, x, vec![Idx::Up, Idx::Up, Idx::Up], 2)?;
        let e0 = extension_tensor(&s0.frame(x)?, &d0, &tj)?;
        let e1 = extension_tensor(&s1.frame(x)?, &d1, &tj)?;
        let sym0 = extension_symmetry_residuals(&d0, &e0, &tj.v);
        let sym1 = extension_symmetry_residuals(&d1, &e1, &tj.v);
        rs[2].push(sym0.iter().chain(&sym1).fold(0.0f64, |m, v| m.max(*v)), x);
        rs[3].push(linalg::max_abs_diff(&e0, &e1), x);
    }
    out.extend(finish(rs));
    Ok(out)
}

/// `f^{-2}` for a positive scalar, a weight-2 scale.
#[derive(Clone, Debug)]
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

/// Contact data of a Sasaki structure in its own scale: the Reeb field is `k`,
/// the Levi-Civita connection is compatible and torsion-free, conditions
/// (a)–(c) of the distinguished connection hold, and `Ω` reduces to a
/// symplectic form with `k` contact.
pub fn sasaki_contact_suite<M: Field + Clone, K: Field + Clone>(
    metric: &M,
    k: &K,
    domain: &ChartBox,
    points: &[Point],
    opts: &SuiteOptions,
) -> Result<Vec<CheckReport>> {
    let tol = opts.tol;
    let conn = LeviCivita(metric.clone());
    let s = TractorSplitting::new(conn, domain.clone());
    let kl = LoweredWeighted { metric: metric.clone(), vector: k.clone(), weight: 2.0 };
    let tau = ScaleDensity { metric: metric.clone(), weight: 2.0 };
    let mut rs = residuals(
        &[
            "contact.reeb",
            "contact.reeb_inverse",
            "contact.reeb_is_k",
            "contact.compatibility",
            "contact.torsion",
            "contact.distinguished_a",
            "contact.distinguished_b",
            "contact.distinguished_c",
        ],
        &[tol.alg, tol.alg, tol.alg, tol.alg, tol.d2, tol.d2, tol.d2, tol.d2],
    );
    for p in points {
        let x = &p.coords;
        let d = contact_data(&kl, &tau, x)?;
        let (th, tw, inv) = d.identity_residuals();
        rs[0].push(th.max(tw), x);
        rs[1].push(inv, x);
        rs[2].push(linalg::max_abs_diff(&d.reeb, &k.eval(x)), x);
        let f = s.frame(x)?;
        let kj = eval_jet(&kl, x, 1, Some(domain))?;
        rs[3].push(compatibility_eta(&f.conn, &kj).0, x);
        match contact_torsion(&f.conn, &d, 1e-8) {
            Ok(t) => rs[4].push(linalg::max_abs(&t.t), x),
            Err(_) => rs[4].push(f64::INFINITY, x),
        }
        let r = distinguished_connection_residual(&f, &d, None);
        rs[5].push(r.a, x);
        rs[6].push(r.b, x);
        rs[7].push(r.c, x);
    }
    let mut out = finish(rs);
    let om = HermitianField { metric: metric.clone(), k: k.clone(), part: HermitianPart::TwoForm };
    out.extend(symplectic_reduction_check(&s, &om, points, opts.fd_step, tol.d1, tol.d2)?);
    Ok(out)
}

/// Symplectic reduction of the parallel `Ω₀` of a flat model.
pub fn flat_contact_suite(model: FlatModel, points: &[Point], opts: &SuiteOptions) -> Result<Vec<CheckReport>> {
    let n = model.dim();
    let om0 = model
        .omega0()
        .ok_or_else(|| GeomError::InvalidArgument(format!("flat model ({}, {}) carries no symplectic form", model.p, model.q)))?;
    let s = TractorSplitting::new(ConnectionModel::Flat(n), ChartBox::cube(n, 2.0));
    let om = FlatModelBilinear { model, form: om0 };
    symplectic_reduction_check(&s, &om, points, opts.fd_step, opts.tol.d1, opts.tol.d2)
}

// ---------------------------------------------------------------------------
// leaf space

/// Leaf space of a Sasaki structure whose Reeb field is the last coordinate
/// field: Kähler–Einstein residuals of the induced data, the leaf system of
/// the split, the Fefferman-type connection identities, `k`-invariance and the
/// c-projective correspondence.
pub fn leafspace_suite<M: Field + Clone, K: Field + Clone>(
    metric: &M,
    k: &K,
    domain: &ChartBox,
    points: &[Point],
    opts: &SuiteOptions,
) -> Result<Vec<CheckReport>> {
    let tol = opts.tol;
    let n = metric.dim_in();
    let chart = LeafChart::new(n, n - 1, 0.0);
    let conn = LeviCivita(metric.clone());
    let s = TractorSplitting::new(conn.clone(), domain.clone());
    let ut = OneFormModel::random(n - 1, 0.4, opts.seed.wrapping_add(5));
    let changed = ProjectivelyChanged { base: conn.clone(), upsilon: OneFormModel::SliceLift(Box::new(ut.clone())) };
    let mut rs = residuals(
        &[
            "leafspace.j_square",
            "leafspace.hermitian",
            "leafspace.d_omega",
            "leafspace.nijenhuis",
            "leafspace.parallel_j",
            "leafspace.einstein",
            "leafspace.split_system",
            "leafspace.fefferman",
            "leafspace.k_invariance",
            "leafspace.c_projective_change",
            "leafspace.j_projective_invariance",
        ],
        &[tol.alg, tol.alg, tol.d1, tol.d1, tol.d1, tol.d2, tol.alg, tol.d1, tol.alg, tol.d1, tol.d1],
    );
    for p in points {
        let x = &p.coords;
        let y = chart.project(x);
        let leaf = induced_kahler(metric, k, &chart, &y, opts.fd_step)?;
        let r = leaf.residuals;
        for (res, v) in rs.iter_mut().zip([r.j_square, r.hermitian, r.d_omega, r.nijenhuis, r.parallel_j, r.einstein]) {
            res.push(v, x);
        }
        let f = s.frame(x)?;
        let kj = eval_jet(k, x, 1, Some(domain))?;
        let split = leaf_split(&f, &kj, 1e-8)?;
        rs[6].push(split.system.iter().fold(split.j_square, |m, v| m.max(v.abs())), x);
        rs[7].push(fefferman_connection_residual(&s, k, &chart, &leaf, x)?.max(), x);
        let (lnu, lj) = lie_derivative_residuals(&conn, k, x)?;
        rs[8].push(lnu.max(lj), x);
        let (rc, rj) = c_projective_residual(&conn, &changed, k, chart, &ut.eval(&y), &y);
        rs[9].push(rc, x);
        rs[10].push(rj, x);
    }
    Ok(finish(rs))
}

// ---------------------------------------------------------------------------
// ambient metric

/// Perturbation used for the Ricci double-expression check.
pub const AMBIENT_PERTURBATION: f64 = 0.4;

/// Monge–Ampère value of the sphere potential, Ricci-flatness of its ambient
/// metric, `Ric = ∂∂̄ log K` for a perturbed potential and the Kähler checks.
pub fn ambient_suite(m: usize, points: &[Point], tol: &Tolerances) -> Result<Vec<CheckReport>> {
    let sphere = CrPotential::Sphere { m, c: 1.0 };
    let perturbed = CrPotential::Perturbed { m, eps: AMBIENT_PERTURBATION };
    let hs = ComplexHessian(AmbientPotential(sphere.clone()));
    let hp = ComplexHessian(AmbientPotential(perturbed.clone()));
    let nn = m + 1;
    let mut rs = residuals(&["ambient.monge_ampere", "ambient.ricci_flat", "ambient.ricci_log_k"], &[tol.alg, tol.d2, tol.d2]);
    for p in points {
        let x = &p.coords;
        rs[0].push(monge_ampere_k(&sphere, &x[2..])? - 1.0, x);
        let ric = ambient_ricci(&hs, x)?;
        rs[1].push(ric.iter().fold(0.0f64, |a, c| a.max(c.norm())), x);
        let ric = ambient_ricci(&hp, x)?;
        let lk = log_k_hessian(&perturbed, &x[2..])?;
        let mut worst = 0.0f64;
        for a in 0..nn {
            for b in 0..nn {
                let want = if a == 0 || b == 0 { num_complex::Complex64::new(0.0, 0.0) } else { lk[(a - 1) * m + b - 1] };
                worst = worst.max((ric[a * nn + b] - want).norm());
            }
        }
        rs[2].push(worst, x);
    }
    let mut out = finish(rs);
    out.extend(kahler_check(&hs, points, tol.alg, Some((2 * m, 2)))?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// oracles

/// Dual-number jets against central differences of the next-lower jet, for
/// every derivative order up to `order`; tolerance `10·step²`.
pub fn ad_fd_check<F: Field>(
    name: &str,
    f: &F,
    domain: &ChartBox,
    points: &[Point],
    step: f64,
    order: usize,
) -> Result<CheckReport> {
    let mut r = Residual::new(format!("oracle.ad_fd.{name}"), 10.0 * step * step);
    for p in points {
        r.push(ad_fd_residual(f, &p.coords, step, order, Some(domain))?, &p.coords);
    }
    r.detail("order", order as f64);
    Ok(r.finish())
}

/// Halve-step Richardson ratio `|T_N − T_2N| / |T_2N − T_4N|` of RK4 transport
/// matrices along seeded open oblique paths, required in `[12, 20]`, with
/// `N = ode_steps/8`. Transports exact to roundoff (flat connections) pass with
/// the `exact` detail set.
pub fn richardson_check<G: Field>(s: &TractorSplitting<G>, seed: u64, ode_steps: usize) -> Result<CheckReport> {
    let paths = oblique_paths(&s.domain, HOLONOMY_LOOPS, seed, false);
    // whole steps per smooth piece, so that each level exactly halves the step
    let pieces = paths.first().map_or(1, |p| p.pieces().len());
    let base = (ode_steps / 8).max(16).next_multiple_of(pieces);
    let mut r = Residual::new("oracle.rk4_richardson", 4.0);
    let mut exact = 0usize;
    let mut ratios = Vec::new();
    for path in paths {
        let t1 = transport_matrix(s, &path, base)?;
        let t2 = transport_matrix(s, &path, 2 * base)?;
        let t4 = transport_matrix(s, &path, 4 * base)?;
        let (e1, e2) = (linalg::max_abs_diff(&t1, &t2), linalg::max_abs_diff(&t2, &t4));
        let (x0, _) = path.at(0.0);
        if e1 < 1e-13 {
            exact += 1;
            r.push(0.0, &x0);
        } else {
            let ratio = e1 / e2;
            ratios.push(ratio);
            r.push(ratio - 16.0, &x0);
        }
    }
    r.detail("base_steps", base as f64);
    r.detail("exact", exact as f64);
    if let (Some(lo), Some(hi)) = (
        ratios.iter().cloned().reduce(f64::min),
        ratios.iter().cloned().reduce(f64::max),
    ) {
        r.detail("ratio_min", lo);
        r.detail("ratio_max", hi);
    }
    Ok(r.finish())
}
