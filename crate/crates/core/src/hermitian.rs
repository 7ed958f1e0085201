//! Sasaki structures and the parallel Hermitian tractor data they induce.

use num_complex::Complex64;

use crate::affine::{levi_civita, nabla, projective_invariants, Idx, TensorJet};
use crate::error::{GeomError, Result};
use crate::jets::{eval_jet, fd_derivative, value_and_partials, ChartBox, Field, MetricJet, Point, Scalar};
use crate::linalg;
use crate::models::{scale_density, LoweredWeighted};
use crate::report::{CheckReport, Residual};
use crate::tractor::{act, tractor_derivative, TractorKind, TractorSplitting};

/// A metric together with a candidate Reeb field.
#[derive(Clone, Debug)]
pub struct SasakiCandidate<M, K> {
    pub metric: M,
    pub k: K,
    pub domain: ChartBox,
}

/// Pointwise residual magnitudes (max-abs over components).
#[derive(Clone, Debug, Default)]
pub struct SasakiPoint {
    /// `∇_(a k_b)`
    pub killing: f64,
    /// `g(k,k) − 1`
    pub unit: f64,
    /// `∇_a∇_b k^c + g_ab k^c − δ^c_a k_b`
    pub second: f64,
    /// `R_bc^a_d k^d − 2δ^a_[b k_c]`
    pub curvature: f64,
    /// `W_ab^c_d k^d`
    pub weyl: f64,
    /// `P_ab k^a k^b − 1`
    pub schouten: f64,
    pub norm: f64,
}

impl SasakiPoint {
    /// Unit Killing field with the curvature condition.
    pub fn curvature_criterion(&self, tol: f64) -> bool {
        self.killing <= tol && self.unit.abs() <= tol && self.curvature <= tol
    }
    /// Unit Killing field with `W·k = 0` and `P(k,k) = 1`.
    pub fn projective_criterion(&self, tol: f64) -> bool {
        self.killing <= tol && self.unit.abs() <= tol && self.weyl <= tol && self.schouten.abs() <= tol
    }
}

impl<M: Field, K: Field> SasakiCandidate<M, K> {
    pub fn dim(&self) -> usize {
        self.metric.dim_in()
    }

    pub fn at(&self, x: &[f64]) -> Result<SasakiPoint> {
        let n = self.dim();
        let mj = MetricJet::eval(&self.metric, x, Some(&self.domain))?;
        let c = levi_civita(&mj)?;
        let inv = projective_invariants(&c)?;
        let kj = TensorJet::of_field(&self.k, x, vec![Idx::Up], 2)?;
        let nk = nabla(&c, &kj)?;
        let nnk = nabla(&c, &nk)?;
        let g = |a: usize, b: usize| mj.g[a * n + b];
        let k = &kj.v;
        let kl: Vec<f64> = (0..n).map(|b| (0..n).map(|cc| g(b, cc) * k[cc]).sum()).collect();
        let norm: f64 = (0..n).map(|a| k[a] * kl[a]).sum();
        let mut out = SasakiPoint { unit: norm - 1.0, norm, ..Default::default() };
        for a in 0..n {
            for b in 0..n {
                // ∇_a k_b = g_bc ∇_a k^c (metric connection)
                let nab: f64 = (0..n).map(|cc| g(b, cc) * nk.v[a * n + cc]).sum();
                let nba: f64 = (0..n).map(|cc| g(a, cc) * nk.v[b * n + cc]).sum();
                out.killing = out.killing.max((0.5 * (nab + nba)).abs());
                for cc in 0..n {
                    let mut s = nnk.v[(a * n + b) * n + cc] + g(a, b) * k[cc];
                    if cc == a {
                        s -= kl[b];
                    }
                    out.second = out.second.max(s.abs());
                    // R_{ab}^c_d k^d vs δ^c_a k_b − δ^c_b k_a, and W_{ab}^c_d k^d
                    let mut rk = 0.0;
                    let mut wk = 0.0;
                    for d in 0..n {
                        rk += inv.r(a, b, cc, d) * k[d];
                        wk += inv.w(a, b, cc, d) * k[d];
                    }
                    let want = if cc == a { kl[b] } else { 0.0 } - if cc == b { kl[a] } else { 0.0 };
                    out.curvature = out.curvature.max((rk - want).abs());
                    out.weyl = out.weyl.max(wk.abs());
                }
            }
        }
        let pkk: f64 = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| inv.p(a, b) * k[a] * k[b]).sum();
        out.schouten = pkk - 1.0;
        Ok(out)
    }
}

/// Residual reports for all Sasaki criteria. `DegenerateInput` if `g(k,k) ≤ 0`.
pub fn verify_sasaki<M: Field, K: Field>(cand: &SasakiCandidate<M, K>, points: &[Point], tol: f64) -> Result<Vec<CheckReport>> {
    let names = [
        "sasaki.killing",
        "sasaki.unit_length",
        "sasaki.second_derivative",
        "sasaki.curvature_condition",
        "sasaki.weyl_nullity",
        "sasaki.schouten_kk",
    ];
    let mut rs: Vec<Residual> = names.iter().map(|s| Residual::new(*s, tol)).collect();
    let mut agree = Residual::new("sasaki.criteria_agree", 0.0);
    for p in points {
        let r = cand.at(&p.coords)?;
        if r.norm <= 0.0 {
            return Err(GeomError::DegenerateInput(format!("g(k,k) = {} at {:?}", r.norm, p.coords)));
        }
        let vals = [r.killing, r.unit, r.second, r.curvature, r.weyl, r.schouten];
        for (res, v) in rs.iter_mut().zip(vals) {
            res.push(v, &p.coords);
        }
        let same = r.curvature_criterion(tol) == r.projective_criterion(tol);
        agree.push(if same { 0.0 } else { 1.0 }, &p.coords);
    }
    rs.push(agree);
    Ok(rs.into_iter().map(Residual::finish).collect())
}

/// `max |Ric − 2m g|` with `dim = 2m + 1`.
pub fn einstein_residual<M: Field>(metric: &M, domain: &ChartBox, points: &[Point], tol: f64) -> Result<CheckReport> {
    let n = metric.dim_in();
    if n % 2 == 0 {
        return Err(GeomError::InvalidArgument(format!("Einstein constant 2m needs odd dimension, got {n}")));
    }
    let m2 = (n - 1) as f64;
    let mut r = Residual::new("einstein.ric_minus_2m_g", tol);
    for p in points {
        let mj = MetricJet::eval(metric, &p.coords, Some(domain))?;
        let c = levi_civita(&mj)?;
        let inv = crate::affine::curvature(&c)?;
        let d: Vec<f64> = inv.ric.iter().zip(&mj.g).map(|(a, b)| a - m2 * b).collect();
        r.push_max(&d, &p.coords);
    }
    Ok(r.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HermitianPart {
    /// `h = YY + ZZ g`
    Metric,
    /// `Ω = 2k Y∧Z + ∇k ZZ`
    TwoForm,
    /// `J = h^{-1} Ω`
    ComplexStructure,
}

/// Tractor fields of a Sasaki structure in the Levi-Civita splitting,
/// expressed in the coordinate density trivialisation.
#[derive(Clone, Debug)]
pub struct HermitianField<M, K> {
    pub metric: M,
    pub k: K,
    pub part: HermitianPart,
}

impl<M: Field, K: Field> HermitianField<M, K> {
    pub fn kind(&self) -> TractorKind {
        match self.part {
            HermitianPart::Metric => TractorKind::SymForm,
            HermitianPart::TwoForm => TractorKind::TwoForm,
            HermitianPart::ComplexStructure => TractorKind::Adjoint,
        }
    }
}

impl<M: Field, K: Field> Field for HermitianField<M, K> {
    fn dim_in(&self) -> usize {
        self.metric.dim_in()
    }
    fn dim_out(&self) -> usize {
        (self.metric.dim_in() + 1).pow(2)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let r = n + 1;
        let g = self.metric.eval(x);
        let s2 = scale_density(&g, n, 2.0);
        let mut h = vec![S::zero(); r * r];
        h[0] = s2;
        for a in 0..n {
            for b in 0..n {
                h[(1 + a) * r + 1 + b] = g[a * n + b] * s2;
            }
        }
        if self.part == HermitianPart::Metric {
            return h;
        }
        let lower = LoweredWeighted { metric: &self.metric, vector: &self.k, weight: 0.0 };
        let (kl, dkl) = value_and_partials(&lower, x);
        let mut om = vec![S::zero(); r * r];
        for b in 0..n {
            om[1 + b] = kl[b] * s2;
            om[(1 + b) * r] = -kl[b] * s2;
            for cc in 0..n {
                om[(1 + b) * r + 1 + cc] = (dkl[b * n + cc] - dkl[cc * n + b]) * 0.5 * s2;
            }
        }
        if self.part == HermitianPart::TwoForm {
            return om;
        }
        let gi = linalg::inverse(&g, n).unwrap_or_else(|| vec![S::cst(f64::NAN); n * n]);
        let mut j = vec![S::zero(); r * r];
        for col in 0..r {
            j[col] = om[col] / s2;
            for a in 0..n {
                let mut s = S::zero();
                for b in 0..n {
                    s = s + gi[a * n + b] * om[(1 + b) * r + col];
                }
                j[(1 + a) * r + col] = s / s2;
            }
        }
        j
    }
}

/// `𝛆_ℂ` as the determinant of complex coordinates `z_i(v) = h(v,b_i) + i h(v,Jb_i)`
/// built from an `h`-unitary frame `b_i` at a base point.
#[derive(Clone, Debug)]
pub struct ComplexVolumeForm {
    pub rank: usize,
    pub h: Vec<f64>,
    pub j: Vec<f64>,
    /// The unitary frame `b_0, …, b_m` (real vectors).
    pub frame: Vec<Vec<f64>>,
    /// `h(b_i, b_i) = ±1`.
    pub signs: Vec<f64>,
    /// Unit phase making the value on the reference frame real positive.
    pub phase: Complex64,
}

fn bil(h: &[f64], u: &[f64], v: &[f64], r: usize) -> f64 {
    let hv = linalg::matvec(h, v, r);
    u.iter().zip(&hv).map(|(a, b)| a * b).sum()
}

impl ComplexVolumeForm {
    pub fn new(h: &[f64], j: &[f64], r: usize) -> Result<Self> {
        if r % 2 != 0 {
            return Err(GeomError::InvalidArgument("complex volume form needs even tractor rank".into()));
        }
        let mut frame: Vec<Vec<f64>> = Vec::new();
        let mut signs = Vec::new();
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        for i in 0..r {
            let mut e = vec![0.0; r];
            e[i] = 1.0;
            candidates.push(e);
        }
        for i in 0..r {
            for k in i + 1..r {
                let mut e = vec![0.0; r];
                e[i] = 1.0;
                e[k] = 1.0;
                candidates.push(e);
            }
        }
        let scale = linalg::max_abs(h).max(1e-300);
        for cand in candidates {
            if frame.len() == r / 2 {
                break;
            }
            let mut v = cand;
            for (b, sgn) in frame.iter().zip(&signs) {
                let jb = linalg::matvec(j, b, r);
                let c1 = bil(h, &v, b, r) * sgn;
                let c2 = bil(h, &v, &jb, r) * sgn;
                for q in 0..r {
                    v[q] -= c1 * b[q] + c2 * jb[q];
                }
            }
            let hv = bil(h, &v, &v, r);
            if hv.abs() > 1e-6 * scale {
                let s = hv.abs().sqrt();
                frame.push(v.iter().map(|x| x / s).collect());
                signs.push(hv.signum());
            }
        }
        if frame.len() != r / 2 {
            return Err(GeomError::DegenerateInput("no h-unitary frame found".into()));
        }
        let mut out = ComplexVolumeForm { rank: r, h: h.to_vec(), j: j.to_vec(), frame, signs, phase: Complex64::new(1.0, 0.0) };
        let v0 = out.eval(&out.frame.clone());
        out.phase = v0.conj() / v0.norm();
        Ok(out)
    }

    fn coords(&self, v: &[f64]) -> Vec<Complex64> {
        let r = self.rank;
        self.frame
            .iter()
            .map(|b| {
                let jb = linalg::matvec(&self.j, b, r);
                Complex64::new(bil(&self.h, v, b, r), bil(&self.h, v, &jb, r))
            })
            .collect()
    }

    /// `𝛆_ℂ(v_0, …, v_m)`.
    pub fn eval(&self, vs: &[Vec<f64>]) -> Complex64 {
        let m = vs.len();
        let mut a: Vec<Complex64> = Vec::with_capacity(m * m);
        let cols: Vec<Vec<Complex64>> = vs.iter().map(|v| self.coords(v)).collect();
        for i in 0..m {
            for c in &cols {
                a.push(c[i]);
            }
        }
        complex_det(a, m) * self.phase
    }

    /// Complex determinant of a real endomorphism commuting with `J`,
    /// computed as `𝛆_ℂ(U b) / 𝛆_ℂ(b)`.
    pub fn det_c(&self, u: &[f64]) -> Complex64 {
        let r = self.rank;
        let ub: Vec<Vec<f64>> = self.frame.iter().map(|b| linalg::matvec(u, b, r)).collect();
        self.eval(&ub) / self.eval(&self.frame)
    }
}

fn complex_det(mut a: Vec<Complex64>, n: usize) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x * n + col].norm().partial_cmp(&a[y * n + col].norm()).unwrap()).unwrap();
        if a[piv * n + col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            for k in col..n {
                let t = a[col * n + k];
                a[r * n + k] -= f * t;
            }
        }
    }
    det
}

/// Assembled parallel Hermitian tractor data of a Sasaki–Einstein structure.
#[derive(Clone, Debug)]
pub struct HermitianTractorData<M, K> {
    pub h: HermitianField<M, K>,
    pub omega: HermitianField<M, K>,
    pub j: HermitianField<M, K>,
    pub eps_c: ComplexVolumeForm,
    pub base_point: Vec<f64>,
}

/// Builds `(h, Ω, J, 𝛆_ℂ)` after checking the Sasaki–Einstein conditions on `points`.
pub fn assemble_hermitian<M: Field + Clone, K: Field + Clone>(
    cand: &SasakiCandidate<M, K>,
    points: &[Point],
    tol: f64,
) -> Result<HermitianTractorData<M, K>> {
    let sas = verify_sasaki(cand, points, tol)?;
    if let Some(bad) = sas.iter().find(|c| !c.pass) {
        return Err(GeomError::NotSasakiEinstein(format!("{} = {:e}", bad.check, bad.max)));
    }
    let ein = einstein_residual(&cand.metric, &cand.domain, points, tol)?;
    if !ein.pass {
        return Err(GeomError::NotSasakiEinstein(format!("{} = {:e}", ein.check, ein.max)));
    }
    let mk = |part| HermitianField { metric: cand.metric.clone(), k: cand.k.clone(), part };
    let (h, omega, j) = (mk(HermitianPart::Metric), mk(HermitianPart::TwoForm), mk(HermitianPart::ComplexStructure));
    let base = cand.domain.center();
    let r = cand.dim() + 1;
    let eps_c = ComplexVolumeForm::new(&h.eval(&base), &j.eval(&base), r)?;
    Ok(HermitianTractorData { h, omega, j, eps_c, base_point: base })
}

/// Algebraic consistency of `(h, Ω, J)` at one point:
/// `(J² + I, h(J·,J·) − h, Ω − hJ, h − hᵀ, Ω + Ωᵀ)` as max-abs values.
pub fn algebraic_residuals(h: &[f64], omega: &[f64], j: &[f64], r: usize) -> [f64; 5] {
    let jj = linalg::matmul(j, j, r);
    let id = linalg::identity(r);
    let jsq: Vec<f64> = jj.iter().zip(&id).map(|(a, b)| a + b).collect();
    let hjj = linalg::matmul(&linalg::transpose(j, r), &linalg::matmul(h, j, r), r);
    let hj = linalg::matmul(h, j, r);
    let ht = linalg::transpose(h, r);
    let ot = linalg::transpose(omega, r);
    [
        linalg::max_abs(&jsq),
        linalg::max_abs_diff(&hjj, h),
        linalg::max_abs_diff(omega, &hj),
        linalg::max_abs_diff(h, &ht),
        omega.iter().zip(&ot).fold(0.0f64, |m, (a, b)| m.max((a + b).abs())),
    ]
}

/// Parallelism of tractor fields: both the dual-number route and central
/// differences. Returns `(ad, fd)` max-abs of `∇^𝒯 t` at `x`.
pub fn parallel_residual<G: Field, F: Field>(
    s: &TractorSplitting<G>,
    field: &F,
    kind: TractorKind,
    x: &[f64],
    fd_step: f64,
) -> Result<(f64, f64)> {
    let frame = s.frame(x)?;
    let jet = eval_jet(field, x, 1, Some(&s.domain))?;
    let ad = tractor_derivative(&frame, kind, &jet, field.weight())?;
    let ad_max = ad.iter().fold(0.0f64, |m, v| m.max(linalg::max_abs(v)));
    let fd = fd_derivative(field, x, fd_step, Some(&s.domain))?;
    let r = frame.rank();
    let gt = frame.conn.gamma_trace();
    let mut fd_max = 0.0f64;
    let len = jet.m;
    for a in 0..frame.dim() {
        let alg = act(kind, &frame.a[a], &jet.value, r);
        for k in 0..len {
            let v = fd[a * len + k] + alg[k] + field.weight() * gt[a] * jet.value[k];
            fd_max = fd_max.max(v.abs());
        }
    }
    Ok((ad_max, fd_max))
}

/// Reports for `∇^𝒯 h`, `∇^𝒯 Ω`, `∇^𝒯 J` (AD and FD) and the algebraic identities.
#[allow(clippy::too_many_arguments)]
pub fn verify_parallel_hermitian<G: Field, H: Field, O: Field, J: Field>(
    s: &TractorSplitting<G>,
    h: &H,
    omega: &O,
    j: &J,
    points: &[Point],
    fd_step: f64,
    tol_par: f64,
    tol_alg: f64,
) -> Result<Vec<CheckReport>> {
    let r = s.dim() + 1;
    let mut par: Vec<Residual> = ["h", "omega", "j"]
        .iter()
        .flat_map(|n| [Residual::new(format!("parallel.{n}.ad"), tol_par), Residual::new(format!("parallel.{n}.fd"), tol_par)])
        .collect();
    let mut alg: Vec<Residual> = ["hermitian.j_squared", "hermitian.h_compatible", "hermitian.omega_is_hj", "hermitian.h_symmetric", "hermitian.omega_antisymmetric"]
        .iter()
        .map(|n| Residual::new(*n, tol_alg))
        .collect();
    for p in points {
        let x = &p.coords;
        let res = [
            parallel_residual(s, h, TractorKind::SymForm, x, fd_step)?,
            parallel_residual(s, omega, TractorKind::TwoForm, x, fd_step)?,
            parallel_residual(s, j, TractorKind::Adjoint, x, fd_step)?,
        ];
        for (i, (ad, fd)) in res.into_iter().enumerate() {
            par[2 * i].push(ad, x);
            par[2 * i + 1].push(fd, x);
        }
        let vals = algebraic_residuals(&h.eval(x), &omega.eval(x), &j.eval(x), r);
        for (a, v) in alg.iter_mut().zip(vals) {
            a.push(v, x);
        }
    }
    Ok(par.into_iter().chain(alg).map(Residual::finish).collect())
}

/// Eigenvalue-count signature of a tractor bilinear form.
pub fn signature(h: &[f64], r: usize) -> (usize, usize) {
    linalg::signature(h, r, 1e-8)
}
