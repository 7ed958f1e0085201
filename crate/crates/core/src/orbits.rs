//! Curved orbits of a parallel tractor metric `h`: the density `τ = h(X, X)`,
//! the sign stratification, the Einstein metrics on the open orbits and the
//! conformal structure on the separating hypersurface.
//!
//! Tractor metrics are `SymForm` fields in the coordinate density
//! trivialisation of a given splitting, so `τ` is the `[0][0]` entry.

use serde::{Deserialize, Serialize};

use crate::affine::{projective_invariants, ConnectionJet, ProjectivelyChanged};
use crate::error::{GeomError, Result};
use crate::jets::{eval_jet, value_and_partials, Field, Point, Scalar};
use crate::linalg;
use crate::report::{CheckReport, Residual};
use crate::tractor::{resplit_value, TractorKind, TractorSplitting};

/// `τ = h(X, X)` as a weight-2 density field.
#[derive(Clone, Debug)]
pub struct TauField<H>(pub H);

impl<H: Field> Field for TauField<H> {
    fn dim_in(&self) -> usize {
        self.0.dim_in()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![self.0.eval(x)[0]]
    }
    fn weight(&self) -> f64 {
        2.0
    }
}

fn gamma_trace<S: Scalar>(g: &[S], n: usize) -> Vec<S> {
    (0..n)
        .map(|a| {
            let mut s = S::zero();
            for b in 0..n {
                s = s + g[(b * n + b) * n + a];
            }
            s / (n as f64 + 1.0)
        })
        .collect()
}

/// `∇_a τ = ∂_a τ + 2γ_a τ` on any scalar type.
fn nabla_tau<S: Scalar, G: Field, H: Field>(conn: &G, h: &H, x: &[S]) -> (S, Vec<S>) {
    let n = x.len();
    let (t, dt) = value_and_partials(&TauField(h), x);
    let gt = gamma_trace(&conn.eval(x), n);
    (t[0], (0..n).map(|a| dt[a] + gt[a] * t[0] * 2.0).collect())
}

/// `Υ = −∇τ/(2τ)`, the change to the scale in which `τ` is parallel.
#[derive(Clone, Debug)]
pub struct OpenScale<G, H> {
    pub connection: G,
    pub h: H,
}

impl<G: Field, H: Field> Field for OpenScale<G, H> {
    fn dim_in(&self) -> usize {
        self.h.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.h.dim_in()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (t, d) = nabla_tau(&self.connection, &self.h, x);
        d.into_iter().map(|v| -v / (t * 2.0)).collect()
    }
}

/// `½∇_a∇_b τ` as a weight-2 field.
#[derive(Clone, Debug)]
pub struct HalfHessian<G, H> {
    pub connection: G,
    pub h: H,
}

struct NablaTau<'a, G, H>(&'a G, &'a H);

impl<G: Field, H: Field> Field for NablaTau<'_, G, H> {
    fn dim_in(&self) -> usize {
        self.1.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.1.dim_in()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        nabla_tau(self.0, self.1, x).1
    }
}

impl<G: Field, H: Field> Field for HalfHessian<G, H> {
    fn dim_in(&self) -> usize {
        self.h.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.h.dim_in().pow(2)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let (nt, dnt) = value_and_partials(&NablaTau(&self.connection, &self.h), x);
        let g = self.connection.eval(x);
        let gt = gamma_trace(&g, n);
        let mut out = vec![S::zero(); n * n];
        for a in 0..n {
            for b in 0..n {
                let mut s = dnt[a * n + b] + gt[a] * nt[b] * 2.0;
                for c in 0..n {
                    s = s - g[(c * n + a) * n + b] * nt[c];
                }
                out[a * n + b] = s * 0.5;
            }
        }
        out
    }
    fn weight(&self) -> f64 {
        2.0
    }
}

pub fn tau_field<H: Field>(h: &H, x: &[f64]) -> f64 {
    h.eval(x)[0]
}

/// `τ` and `∇τ` at `x` in the splitting of `s`.
pub fn tau_jet<G: Field, H: Field>(s: &TractorSplitting<G>, h: &H, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    s.domain.check(x)?;
    Ok(nabla_tau(&s.connection, h, x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orbit {
    Plus,
    Zero,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitLabel {
    pub orbit: Orbit,
    pub tau: f64,
    pub grad: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Classification {
    pub labels: Vec<OrbitLabel>,
    /// Counts of `(plus, zero, minus)`.
    pub counts: [usize; 3],
    pub zero_band: f64,
    /// Smallest `|∇τ|` over zero-labelled samples (`∞` if there are none).
    pub min_grad_on_zero: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Labels by the strict sign of `τ`, with a zero band of `1e−10·(1 + max|τ|)`.
pub fn classify_points<G: Field, H: Field>(s: &TractorSplitting<G>, h: &H, points: &[Point]) -> Result<Classification> {
    let mut raw = Vec::with_capacity(points.len());
    for p in points {
        raw.push(tau_jet(s, h, &p.coords)?);
    }
    let scale = raw.iter().fold(0.0f64, |m, (t, _)| m.max(t.abs()));
    let band = 1e-10 * (1.0 + scale);
    let mut counts = [0; 3];
    let mut min_grad = f64::INFINITY;
    let labels = raw
        .into_iter()
        .map(|(tau, grad)| {
            let orbit = if tau.abs() <= band {
                min_grad = min_grad.min(norm(&grad));
                Orbit::Zero
            } else if tau > 0.0 {
                Orbit::Plus
            } else {
                Orbit::Minus
            };
            counts[orbit as usize] += 1;
            OrbitLabel { orbit, tau, grad }
        })
        .collect();
    Ok(Classification { labels, counts, zero_band: band, min_grad_on_zero: min_grad })
}

/// Bisection for `τ = 0` on the segment `[from, to]`, which must carry a
/// sign change. Stops when the parameter interval is below `tol`.
pub fn bisect_boundary<H: Field>(h: &H, from: &[f64], to: &[f64], tol: f64) -> Result<Vec<f64>> {
    let at = |s: f64| -> Vec<f64> { from.iter().zip(to).map(|(a, b)| a + s * (b - a)).collect() };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let t0 = tau_field(h, from);
    let t1 = tau_field(h, to);
    if t0 == 0.0 {
        return Ok(from.to_vec());
    }
    if t1 == 0.0 {
        return Ok(to.to_vec());
    }
    if t0.signum() == t1.signum() {
        return Err(GeomError::InvalidArgument("no sign change of tau on the segment".into()));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let tm = tau_field(h, &at(mid));
        if tm == 0.0 {
            return Ok(at(mid));
        }
        if tm.signum() == t0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(0.5 * (lo + hi)))
}

/// The Einstein scale data on an open orbit.
#[derive(Clone, Debug)]
pub struct OpenMetric {
    pub tau: f64,
    pub upsilon: Vec<f64>,
    pub connection: ConnectionJet,
    /// `ĝ = P̂`, symmetrised.
    pub metric: Vec<f64>,
    /// `max |∇̂ τ|` in the new scale.
    pub tau_parallel: f64,
    /// `max |ĥ − τ(YY + P̂ZZ)|` after resplitting `h`.
    pub reconstruction: f64,
    /// `max |∇̂ ĝ|`.
    pub metric_parallel: f64,
    /// `max |Ric(∇̂) − (n−1)ĝ|`.
    pub einstein: f64,
    pub signature: (usize, usize),
}

/// Moves to the scale `∇̂ = ∇ + Υ`, `Υ = −∇τ/(2τ)`, and reads off `ĝ = P̂`.
pub fn recover_open_metric<G: Field + Clone, H: Field + Clone>(
    s: &TractorSplitting<G>,
    h: &H,
    x: &[f64],
) -> Result<OpenMetric> {
    let n = s.dim();
    let (tau, _) = tau_jet(s, h, x)?;
    if tau.abs() < 1e-12 {
        return Err(GeomError::TauVanishes);
    }
    let ups = OpenScale { connection: s.connection.clone(), h: h.clone() };
    let upsilon = ups.eval(x);
    let changed = ProjectivelyChanged { base: s.connection.clone(), upsilon: ups };
    let conn = ConnectionJet::from_field(&changed, x, 2, Some(&s.domain))?;
    let inv = projective_invariants(&conn)?;
    let sym = |v: &[f64]| -> Vec<f64> { (0..n * n).map(|q| 0.5 * (v[q] + v[(q % n) * n + q / n])).collect() };
    let g = sym(&inv.p);

    let tau_parallel = linalg::max_abs(&nabla_tau(&changed, h, x).1);

    let hh = resplit_value(TractorKind::SymForm, &upsilon, &h.eval(x));
    let r = n + 1;
    let mut want = vec![0.0; r * r];
    want[0] = tau;
    for a in 0..n {
        for b in 0..n {
            want[(1 + a) * r + 1 + b] = tau * g[a * n + b];
        }
    }
    let reconstruction = linalg::max_abs_diff(&hh, &want);

    // ∇̂_e P̂_ab with P̂ of weight 0
    let mut metric_parallel = 0.0f64;
    for e in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut v = 0.5 * (inv.dp[(e * n + a) * n + b] + inv.dp[(e * n + b) * n + a]);
                for c in 0..n {
                    v -= conn.g(c, e, a) * g[c * n + b] + conn.g(c, e, b) * g[a * n + c];
                }
                metric_parallel = metric_parallel.max(v.abs());
            }
        }
    }
    let einstein = (0..n * n).fold(0.0f64, |m, q| m.max((inv.ric[q] - (n as f64 - 1.0) * g[q]).abs()));
    let signature = linalg::signature(&g, n, 1e-9);
    Ok(OpenMetric { tau, upsilon, connection: conn, metric: g, tau_parallel, reconstruction, metric_parallel, einstein, signature })
}

/// The boundary conformal structure at a point of `M₀`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryConformalSample {
    pub x: Vec<f64>,
    /// Orthonormal (Euclidean) frame of `ker dτ`.
    pub frame: Vec<Vec<f64>>,
    /// `½∇∇τ` restricted to the frame.
    pub hessian: Vec<f64>,
    pub signature: (usize, usize),
    /// Signature of the opposite sign choice.
    pub signature_negated: (usize, usize),
    pub grad_norm: f64,
    pub tau: f64,
}

pub fn boundary_conformal<G: Field + Clone, H: Field + Clone>(
    s: &TractorSplitting<G>,
    h: &H,
    x: &[f64],
) -> Result<BoundaryConformalSample> {
    let n = s.dim();
    let (tau, grad) = tau_jet(s, h, x)?;
    let gn = norm(&grad);
    if gn < 1e-6 {
        return Err(GeomError::DegenerateBoundary);
    }
    let frame = linalg::null_space(&grad, 1, n, 1e-12);
    let hess = HalfHessian { connection: s.connection.clone(), h: h.clone() }.eval(x);
    let k = frame.len();
    let mut res = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let mut v = 0.0;
            for a in 0..n {
                for b in 0..n {
                    v += frame[i][a] * hess[a * n + b] * frame[j][b];
                }
            }
            res[i * k + j] = v;
        }
    }
    let ev = linalg::sym_eigenvalues(&res, k);
    let big = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let small = ev.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if k == 0 || small <= 1e-8 * big.max(1e-300) {
        return Err(GeomError::DegenerateBoundary);
    }
    let signature = linalg::signature(&res, k, 1e-8);
    Ok(BoundaryConformalSample {
        x: x.to_vec(),
        frame,
        hessian: res,
        signature,
        signature_negated: (signature.1, signature.0),
        grad_norm: gn,
        tau,
    })
}

/// Approach to the boundary: Christoffel symbols of `∇⁺` and of the
/// order-2 compactification `∇⁺ + dρ/(2ρ)`, `ρ = τ` in the chart trivialisation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompactificationTrace {
    pub params: Vec<f64>,
    pub rho: Vec<f64>,
    /// `max|Γ̂|` of the corrected connection.
    pub corrected_size: Vec<f64>,
    /// `max|Γ̂(x_{i+1}) − Γ̂(x_i)|`.
    pub corrected_steps: Vec<f64>,
    /// `max|Γ⁺|` (uncorrected control).
    pub control_size: Vec<f64>,
}

impl CompactificationTrace {
    /// Successive differences shrink at least geometrically and the final
    /// step is below `tol`.
    pub fn corrected_converges(&self, tol: f64) -> bool {
        let st = &self.corrected_steps;
        !st.is_empty()
            && st.iter().all(|v| v.is_finite())
            && *st.last().unwrap() <= tol
            && st.windows(2).all(|w| w[1] <= 0.75 * w[0] + tol)
    }
    /// Growth factor of the uncorrected control along the path.
    pub fn control_growth(&self) -> f64 {
        self.control_size.last().copied().unwrap_or(0.0) / self.control_size.first().copied().unwrap_or(1.0)
    }
}

/// Samples `x(s) = from + s(to − from)` at `s = 1 − 2^{−k}`, `k = 1..=levels`,
/// where `to` lies on `M₀` and `from` in an open orbit.
pub fn compactification_trace<G: Field + Clone, H: Field + Clone>(
    s: &TractorSplitting<G>,
    h: &H,
    from: &[f64],
    to: &[f64],
    levels: usize,
) -> Result<CompactificationTrace> {
    let n = s.dim();
    let plus = ProjectivelyChanged { base: s.connection.clone(), upsilon: OpenScale { connection: s.connection.clone(), h: h.clone() } };
    let mut out = CompactificationTrace {
        params: Vec::new(),
        rho: Vec::new(),
        corrected_size: Vec::new(),
        corrected_steps: Vec::new(),
        control_size: Vec::new(),
    };
    let mut prev: Option<Vec<f64>> = None;
    for k in 1..=levels {
        let t = 1.0 - 0.5f64.powi(k as i32);
        let x: Vec<f64> = from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect();
        s.domain.check(&x)?;
        let gp = plus.eval(&x);
        let (rho, drho) = value_and_partials(&TauField(h), &x);
        let rho = rho[0];
        let mut gc = gp.clone();
        for c in 0..n {
            for a in 0..n {
                let u = drho[a] / (2.0 * rho);
                gc[(c * n + c) * n + a] += u;
                gc[(c * n + a) * n + c] += u;
            }
        }
        out.params.push(t);
        out.rho.push(rho);
        out.control_size.push(linalg::max_abs(&gp));
        out.corrected_size.push(linalg::max_abs(&gc));
        if let Some(p) = &prev {
            out.corrected_steps.push(linalg::max_abs_diff(&gc, p));
        }
        prev = Some(gc);
    }
    Ok(out)
}

/// Residuals of a vector field `k` at a boundary point: tangency `dτ(k)/|dτ|`,
/// nullity `½∇∇τ(k, k)`, and the trace-free part of `L_k(½∇∇τ)` on `TM₀`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NullKillingSample {
    pub tangency: f64,
    pub nullity: f64,
    pub conformal_killing: f64,
}

pub fn null_ck_boundary<G: Field + Clone, H: Field + Clone, K: Field>(
    s: &TractorSplitting<G>,
    h: &H,
    k: &K,
    x: &[f64],
) -> Result<NullKillingSample> {
    let n = s.dim();
    let b = boundary_conformal(s, h, x)?;
    let (_, grad) = tau_jet(s, h, x)?;
    let kj = eval_jet(k, x, 1, Some(&s.domain))?;
    let kv = &kj.value;
    let gj = eval_jet(&HalfHessian { connection: s.connection.clone(), h: h.clone() }, x, 1, Some(&s.domain))?;
    let g = &gj.value;
    let tangency = grad.iter().zip(kv).map(|(a, b)| a * b).sum::<f64>() / b.grad_norm;
    let mut nullity = 0.0;
    for a in 0..n {
        for c in 0..n {
            nullity += g[a * n + c] * kv[a] * kv[c];
        }
    }
    // coordinate Lie derivative; weight terms are multiples of g and drop out
    let mut lie = vec![0.0; n * n];
    for a in 0..n {
        for c in 0..n {
            let mut v = 0.0;
            for e in 0..n {
                v += kv[e] * gj.d1(e, a * n + c) + g[e * n + c] * kj.d1(a, e) + g[a * n + e] * kj.d1(c, e);
            }
            lie[a * n + c] = v;
        }
    }
    let fr = &b.frame;
    let m = fr.len();
    let restrict = |t: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let mut v = 0.0;
                for a in 0..n {
                    for c in 0..n {
                        v += fr[i][a] * t[a * n + c] * fr[j][c];
                    }
                }
                out[i * m + j] = v;
            }
        }
        out
    };
    let lt = restrict(&lie);
    let gt = &b.hessian;
    let gi = linalg::inverse(gt, m).ok_or(GeomError::DegenerateBoundary)?;
    let mut tr = 0.0;
    for i in 0..m {
        for j in 0..m {
            tr += gi[i * m + j] * lt[j * m + i];
        }
    }
    let tf: Vec<f64> = (0..m * m).map(|q| lt[q] - tr / m as f64 * gt[q]).collect();
    Ok(NullKillingSample { tangency, nullity, conformal_killing: linalg::max_abs(&tf) })
}

/// Full orbit check over samples and boundary points, as report entries.
#[allow(clippy::too_many_arguments)]
pub fn verify_orbits<G: Field + Clone, H: Field + Clone, K: Field>(
    s: &TractorSplitting<G>,
    h: &H,
    k: Option<&K>,
    samples: &[Point],
    boundary: &[Vec<f64>],
    expected: Option<ExpectedSignatures>,
    tol_d2: f64,
    tol_d1: f64,
) -> Result<Vec<CheckReport>> {
    let n = s.dim();
    let cls = classify_points(s, h, samples)?;
    // zero-labelled samples must have nonvanishing ∇τ
    let mut labels = Residual::new("orbits.classification", 0.0);
    labels.detail("plus", cls.counts[0] as f64);
    labels.detail("zero", cls.counts[1] as f64);
    labels.detail("minus", cls.counts[2] as f64);
    labels.push(0.0, &[]);
    if cls.min_grad_on_zero < 1e-6 {
        labels.fail();
    }

    let mut recon = Residual::new("orbits.reconstruction", tol_d1);
    let mut par = Residual::new("orbits.metric_parallel", tol_d2);
    let mut ein = Residual::new("orbits.einstein", tol_d2);
    let mut sig_ok = Residual::new("orbits.open_signature", 0.0);
    for (p, l) in samples.iter().zip(&cls.labels) {
        if l.tau.abs() < 0.1 {
            continue;
        }
        let om = recover_open_metric(s, h, &p.coords)?;
        recon.push(om.reconstruction, &p.coords);
        par.push(om.metric_parallel, &p.coords);
        ein.push(om.einstein, &p.coords);
        let ok = match (&expected, l.orbit) {
            (Some(e), Orbit::Plus) => om.signature == e.plus,
            (Some(e), Orbit::Minus) => om.signature == e.minus,
            _ => om.signature.0 + om.signature.1 == n,
        };
        sig_ok.push(if ok { 0.0 } else { 1.0 }, &p.coords);
    }

    let mut grad = Residual::new("orbits.boundary_gradient", f64::INFINITY);
    let mut on = Residual::new("orbits.boundary_tau", 1e-10);
    let mut bsig = Residual::new("orbits.boundary_signature", 0.0);
    let mut tang = Residual::new("orbits.k_tangency", tol_d1);
    let mut null = Residual::new("orbits.k_nullity", tol_d1);
    let mut ck = Residual::new("orbits.k_conformal_killing", tol_d1);
    let mut min_grad = f64::INFINITY;
    for x in boundary {
        let b = boundary_conformal(s, h, x)?;
        min_grad = min_grad.min(b.grad_norm);
        grad.push(0.0, x);
        on.push(b.tau, x);
        let ok = match &expected {
            Some(e) => b.signature == e.boundary || b.signature_negated == e.boundary,
            None => b.signature.0 + b.signature.1 == n - 1,
        };
        bsig.push(if ok { 0.0 } else { 1.0 }, x);
        if let Some(k) = k {
            let r = null_ck_boundary(s, h, k, x)?;
            tang.push(r.tangency, x);
            null.push(r.nullity, x);
            ck.push(r.conformal_killing, x);
        }
    }
    if min_grad < 1e-6 {
        grad.fail();
    }
    grad.detail("min_grad", min_grad);
    let mut out = vec![labels.finish(), recon.finish(), par.finish(), ein.finish(), sig_ok.finish()];
    if !boundary.is_empty() {
        out.extend([grad.finish(), on.finish(), bsig.finish()]);
        if k.is_some() {
            out.extend([tang.finish(), null.finish(), ck.finish()]);
        }
    }
    Ok(out)
}

/// Signatures predicted for `h` of real signature `(p′, q′)`:
/// `(p′−1, q′)` on `M₊`, `(q′−1, p′)` on `M₋`, `(p′−1, q′−1)` on `M₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedSignatures {
    pub plus: (usize, usize),
    pub minus: (usize, usize),
    pub boundary: (usize, usize),
}

impl ExpectedSignatures {
    pub fn for_signature(p: usize, q: usize) -> Self {
        ExpectedSignatures {
            plus: (p.saturating_sub(1), q),
            minus: (q.saturating_sub(1), p),
            boundary: (p.saturating_sub(1), q.saturating_sub(1)),
        }
    }
}
