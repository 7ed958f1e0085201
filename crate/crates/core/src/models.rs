//! Built-in metric, connection and tensor-field providers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::{FlatConnection, LeviCivita, ProjectivelyChanged};
use crate::jets::{value_and_partials, Field, Scalar};
use crate::linalg;

// ---------------------------------------------------------------------------
// Metrics

/// Unit round sphere `S^{2m+1}` in Hopf-adapted coordinates
/// `(Re w₁, Im w₁, …, Re w_m, Im w_m, θ)`, embedded by
/// `p = e^{iθ}(1, w)/√(1+|w|²) ⊂ ℂ^{m+1}`. The Reeb field is `∂_θ`.
#[derive(Clone, Copy, Debug)]
pub struct HopfSphere {
    pub m: usize,
}

impl Field for HopfSphere {
    fn dim_in(&self) -> usize {
        2 * self.m + 1
    }
    fn dim_out(&self) -> usize {
        2 * self.m + 2
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let m = self.m;
        let theta = x[2 * m];
        let mut r2 = S::one();
        for v in &x[..2 * m] {
            r2 = r2 + *v * *v;
        }
        let inv = r2.sqrt().recip();
        let (c, s) = (theta.cos(), theta.sin());
        let mut p = vec![c * inv, s * inv];
        for a in 0..m {
            let (u, v) = (x[2 * a], x[2 * a + 1]);
            p.push((c * u - s * v) * inv);
            p.push((s * u + c * v) * inv);
        }
        p
    }
}

/// Pullback metric `g_ij = ∂_i p · ∂_j p` of an embedding field.
#[derive(Clone, Copy, Debug)]
pub struct Pullback<E>(pub E);

impl<E: Field> Field for Pullback<E> {
    fn dim_in(&self) -> usize {
        self.0.dim_in()
    }
    fn dim_out(&self) -> usize {
        let n = self.0.dim_in();
        n * n
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let k = self.0.dim_out();
        let (_, jac) = value_and_partials(&self.0, x);
        let mut g = vec![S::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let mut s = S::zero();
                for o in 0..k {
                    s = s + jac[i * k + o] * jac[j * k + o];
                }
                g[i * n + j] = s;
                g[j * n + i] = s;
            }
        }
        g
    }
}

#[derive(Clone, Debug)]
pub enum MetricModel {
    Euclidean(usize),
    /// `4δ/(1+|x|²)²`, the unit sphere in stereographic coordinates.
    StereoSphere(usize),
    HopfSphere(usize),
    /// A non-Einstein metric on ℝ³ with nonzero projective Weyl tensor.
    Perturbed3,
    /// Round `S² × S³` in stereographic coordinates.
    ProductS2S3,
    /// `∂∂τ/(2τ) − ∂τ∂τ/(4τ²)` for the homogeneous quadratic `τ` of a flat model.
    OpenOrbit(FlatModel),
    /// Fubini–Study metric on the slice `{θ = const}` of a Hopf sphere.
    FubiniStudy(usize),
}

impl MetricModel {
    pub fn dim(&self) -> usize {
        match self {
            MetricModel::Euclidean(n) | MetricModel::StereoSphere(n) => *n,
            MetricModel::HopfSphere(m) => 2 * m + 1,
            MetricModel::Perturbed3 => 3,
            MetricModel::ProductS2S3 => 5,
            MetricModel::OpenOrbit(f) => f.dim(),
            MetricModel::FubiniStudy(m) => 2 * m,
        }
    }
}

fn stereo<S: Scalar>(x: &[S]) -> Vec<S> {
    let n = x.len();
    let mut r2 = S::one();
    for v in x {
        r2 = r2 + *v * *v;
    }
    let f = (r2 * r2).recip() * 4.0;
    let mut g = vec![S::zero(); n * n];
    for i in 0..n {
        g[i * n + i] = f;
    }
    g
}

impl Field for MetricModel {
    fn dim_in(&self) -> usize {
        self.dim()
    }
    fn dim_out(&self) -> usize {
        self.dim() * self.dim()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = self.dim();
        match self {
            MetricModel::Euclidean(_) => {
                let mut g = vec![S::zero(); n * n];
                for i in 0..n {
                    g[i * n + i] = S::one();
                }
                g
            }
            MetricModel::StereoSphere(_) => stereo(x),
            MetricModel::HopfSphere(m) => Pullback(HopfSphere { m: *m }).eval(x),
            MetricModel::Perturbed3 => {
                let mut g = vec![S::zero(); 9];
                let freq = [[1.0, 0.7, -0.4], [0.7, 1.3, 0.5], [-0.4, 0.5, 0.9]];
                for i in 0..3 {
                    for j in 0..3 {
                        let arg = x[0] * freq[i][j] + x[1] * (0.3 * (i + j) as f64) - x[2] * freq[j][i] * 0.5
                            + x[0] * x[2] * 0.2;
                        let mut v = arg.sin() * 0.15;
                        if i == j {
                            v = v + 1.0 + x[i] * x[i] * 0.1;
                        }
                        g[i * 3 + j] = v;
                    }
                }
                g
            }
            MetricModel::ProductS2S3 => {
                let a = stereo(&x[..2]);
                let b = stereo(&x[2..]);
                let mut g = vec![S::zero(); 25];
                for i in 0..2 {
                    for j in 0..2 {
                        g[i * 5 + j] = a[i * 2 + j];
                    }
                }
                for i in 0..3 {
                    for j in 0..3 {
                        g[(i + 2) * 5 + j + 2] = b[i * 3 + j];
                    }
                }
                g
            }
            MetricModel::OpenOrbit(f) => {
                let (tau, dtau, ddtau) = f.tau_jets(x);
                let mut g = vec![S::zero(); n * n];
                for a in 0..n {
                    for b in 0..n {
                        g[a * n + b] =
                            ddtau[a * n + b] / (tau * 2.0) - dtau[a] * dtau[b] / (tau * tau * 4.0);
                    }
                }
                g
            }
            MetricModel::FubiniStudy(m) => {
                // restrict the Hopf metric to θ = 0 and remove the k-component
                let mut y: Vec<S> = x.to_vec();
                y.push(S::zero());
                let big = Pullback(HopfSphere { m: *m }).eval(&y);
                let nb = 2 * m + 1;
                let t = nb - 1;
                let gtt = big[t * nb + t];
                let mut g = vec![S::zero(); n * n];
                for i in 0..n {
                    for j in 0..n {
                        g[i * n + j] = big[i * nb + j] - big[i * nb + t] * big[j * nb + t] / gtt;
                    }
                }
                g
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Connections

/// Christoffel-symbol providers used by the scenario registry.
#[derive(Clone, Debug)]
pub enum ConnectionModel {
    LeviCivita(MetricModel),
    Flat(usize),
    Changed(Box<ConnectionModel>, OneFormModel),
    /// `Γ^c_ab = t^c ∂_(aθ_b) + A^c_ab − t^c θ_d A^d_ab` with `t = ∂_z`: torsion-free
    /// and compatible with `ker θ`; `A` is an optional symmetric perturbation.
    ContactCompatible(ContactModel, Option<TrigField>),
}

impl ConnectionModel {
    pub fn dim(&self) -> usize {
        match self {
            ConnectionModel::LeviCivita(m) => m.dim(),
            ConnectionModel::Flat(n) => *n,
            ConnectionModel::Changed(c, _) => c.dim(),
            ConnectionModel::ContactCompatible(f, _) => f.dim(),
        }
    }

    pub fn changed(self, u: OneFormModel) -> Self {
        ConnectionModel::Changed(Box::new(self), u)
    }
}

impl Field for ConnectionModel {
    fn dim_in(&self) -> usize {
        self.dim()
    }
    fn dim_out(&self) -> usize {
        self.dim().pow(3)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        match self {
            ConnectionModel::LeviCivita(m) => LeviCivita(m).eval(x),
            ConnectionModel::Flat(n) => FlatConnection(*n).eval(x),
            ConnectionModel::Changed(c, u) => ProjectivelyChanged { base: &**c, upsilon: u }.eval(x),
            ConnectionModel::ContactCompatible(f, extra) => {
                let n = x.len();
                let (th, dth) = value_and_partials(f, x);
                let z = n - 1;
                let mut g = vec![S::zero(); n * n * n];
                for a in 0..n {
                    for b in 0..n {
                        g[(z * n + a) * n + b] = (dth[a * n + b] + dth[b * n + a]) * 0.5;
                    }
                }
                if let Some(t) = extra {
                    let raw = t.eval(x);
                    for a in 0..n {
                        for b in 0..n {
                            let mut th_a = S::zero();
                            for c in 0..n {
                                let v = (raw[(c * n + a) * n + b] + raw[(c * n + b) * n + a]) * 0.5;
                                th_a = th_a + th[c] * v;
                                g[(c * n + a) * n + b] = g[(c * n + a) * n + b] + v;
                            }
                            g[(z * n + a) * n + b] = g[(z * n + a) * n + b] - th_a;
                        }
                    }
                }
                g
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 1-forms, vector fields, densities

#[derive(Clone, Debug)]
pub enum OneFormModel {
    Zero(usize),
    /// `Υ_a = c_a + Σ_b A_ab sin(F_ab x_b + φ_a)`.
    Trig { n: usize, c: Vec<f64>, amp: Vec<f64>, freq: Vec<f64>, phase: Vec<f64> },
    /// `Υ = d log f` for a positive scalar model `f` (i.e. `Υ = df/f`).
    LogGradient(ScalarModel, f64),
    /// Pullback `π*Υ̃` of a 1-form on the first `N−1` coordinates, zero on the last.
    SliceLift(Box<OneFormModel>),
}

impl OneFormModel {
    pub fn random(n: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = |k: usize, s: f64| (0..k).map(|_| s * (2.0 * rng.gen::<f64>() - 1.0)).collect::<Vec<_>>();
        OneFormModel::Trig { n, c: g(n, scale), amp: g(n * n, scale), freq: g(n * n, 1.5), phase: g(n, 3.0) }
    }

    pub fn dim(&self) -> usize {
        match self {
            OneFormModel::Zero(n) => *n,
            OneFormModel::Trig { n, .. } => *n,
            OneFormModel::LogGradient(f, _) => f.dim(),
            OneFormModel::SliceLift(u) => u.dim() + 1,
        }
    }
}

impl Field for OneFormModel {
    fn dim_in(&self) -> usize {
        self.dim()
    }
    fn dim_out(&self) -> usize {
        self.dim()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        match self {
            OneFormModel::Zero(n) => vec![S::zero(); *n],
            OneFormModel::Trig { n, c, amp, freq, phase } => (0..*n)
                .map(|a| {
                    let mut s = S::cst(c[a]);
                    for b in 0..*n {
                        s = s + (x[b] * freq[a * n + b] + phase[a]).sin() * amp[a * n + b];
                    }
                    s
                })
                .collect(),
            OneFormModel::LogGradient(f, scale) => {
                let (v, d) = value_and_partials(f, x);
                (0..x.len()).map(|a| d[a] / v[0] * *scale).collect()
            }
            OneFormModel::SliceLift(u) => {
                let k = x.len() - 1;
                let mut v = u.eval(&x[..k]);
                v.push(S::zero());
                v
            }
        }
    }
}

/// Smooth generic field with `m` outputs:
/// `v_k = c_k + Σ_b A_kb sin(F_kb x_b + φ_k)`.
#[derive(Clone, Debug)]
pub struct TrigField {
    pub n: usize,
    pub m: usize,
    pub c: Vec<f64>,
    pub amp: Vec<f64>,
    pub freq: Vec<f64>,
    pub phase: Vec<f64>,
}

impl TrigField {
    pub fn random(n: usize, m: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = |k: usize, s: f64| (0..k).map(|_| s * (2.0 * rng.gen::<f64>() - 1.0)).collect::<Vec<_>>();
        TrigField { n, m, c: g(m, scale), amp: g(m * n, scale), freq: g(m * n, 1.5), phase: g(m, 3.0) }
    }
}

impl Field for TrigField {
    fn dim_in(&self) -> usize {
        self.n
    }
    fn dim_out(&self) -> usize {
        self.m
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = self.n;
        (0..self.m)
            .map(|k| {
                let mut s = S::cst(self.c[k]);
                for b in 0..n {
                    s = s + (x[b] * self.freq[k * n + b] + self.phase[k]).sin() * self.amp[k * n + b];
                }
                s
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum ScalarModel {
    Const(usize, f64),
    /// `exp(Σ c_i x_i + Σ q_i x_i² + s sin(x₀ + x_last))`; always positive.
    ExpPoly { n: usize, lin: Vec<f64>, quad: Vec<f64>, s: f64 },
    /// Same as `ExpPoly` on the first `N−1` coordinates only.
    SliceExp(Box<ScalarModel>),
}

impl ScalarModel {
    pub fn random_positive(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lin = (0..n).map(|_| 0.4 * (2.0 * rng.gen::<f64>() - 1.0)).collect();
        let quad = (0..n).map(|_| 0.2 * (2.0 * rng.gen::<f64>() - 1.0)).collect();
        ScalarModel::ExpPoly { n, lin, quad, s: 0.2 * (2.0 * rng.gen::<f64>() - 1.0) }
    }

    pub fn dim(&self) -> usize {
        match self {
            ScalarModel::Const(n, _) => *n,
            ScalarModel::ExpPoly { n, .. } => *n,
            ScalarModel::SliceExp(f) => f.dim() + 1,
        }
    }
}

impl Field for ScalarModel {
    fn dim_in(&self) -> usize {
        self.dim()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        match self {
            ScalarModel::Const(_, c) => vec![S::cst(*c)],
            ScalarModel::ExpPoly { n, lin, quad, s } => {
                let mut e = (x[0] + x[n - 1]).sin() * *s;
                for i in 0..*n {
                    e = e + x[i] * lin[i] + x[i] * x[i] * quad[i];
                }
                vec![e.exp()]
            }
            ScalarModel::SliceExp(f) => f.eval(&x[..x.len() - 1]),
        }
    }
}

#[derive(Clone, Debug)]
pub enum VectorModel {
    Zero(usize),
    /// Coordinate field `∂_i` scaled by `c`.
    Coordinate { n: usize, i: usize, c: f64 },
    /// `ξ^a = Σ_b A_ab x_b + v_a`.
    Linear { n: usize, a: Vec<f64>, v: Vec<f64> },
    /// `ξ^a = x_a x_b` style quadratic field: `ξ^i = Σ_jk Q_ijk x_j x_k`.
    Quadratic { n: usize, q: Vec<f64> },
    /// Smooth generic field with trigonometric components.
    Trig(OneFormModel),
}

impl VectorModel {
    pub fn dim(&self) -> usize {
        match self {
            VectorModel::Zero(n) => *n,
            VectorModel::Coordinate { n, .. } | VectorModel::Linear { n, .. } | VectorModel::Quadratic { n, .. } => *n,
            VectorModel::Trig(u) => u.dim(),
        }
    }
}

impl Field for VectorModel {
    fn dim_in(&self) -> usize {
        self.dim()
    }
    fn dim_out(&self) -> usize {
        self.dim()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        match self {
            VectorModel::Zero(n) => vec![S::zero(); *n],
            VectorModel::Coordinate { n, i, c } => {
                let mut v = vec![S::zero(); *n];
                v[*i] = S::cst(*c);
                v
            }
            VectorModel::Linear { n, a, v } => (0..*n)
                .map(|i| {
                    let mut s = S::cst(v[i]);
                    for j in 0..*n {
                        s = s + x[j] * a[i * n + j];
                    }
                    s
                })
                .collect(),
            VectorModel::Quadratic { n, q } => (0..*n)
                .map(|i| {
                    let mut s = S::zero();
                    for j in 0..*n {
                        for k in 0..*n {
                            s = s + x[j] * x[k] * q[(i * n + j) * n + k];
                        }
                    }
                    s
                })
                .collect(),
            VectorModel::Trig(u) => u.eval(x),
        }
    }
}

/// Coordinate value of the parallel weight-`w` density of a Levi-Civita
/// scale: `σ^w` with `σ = |det g|^{-1/(2(n+2))}`.
pub fn scale_density<S: Scalar>(g: &[S], dim: usize, w: f64) -> S {
    let det = linalg::det(g, dim).abs();
    det.powf(-w / (2.0 * (dim as f64 + 1.0)))
}

/// Lowered vector field `k_b = g_bc k^c`, times the parallel density of
/// weight `weight` (so the result is a section of `T*M(weight)`).
#[derive(Clone, Debug)]
pub struct LoweredWeighted<M, V> {
    pub metric: M,
    pub vector: V,
    pub weight: f64,
}

impl<M: Field, V: Field> Field for LoweredWeighted<M, V> {
    fn dim_in(&self) -> usize {
        self.vector.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.vector.dim_in()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let g = self.metric.eval(x);
        let k = self.vector.eval(x);
        let s = scale_density(&g, n, self.weight);
        (0..n)
            .map(|b| {
                let mut v = S::zero();
                for c in 0..n {
                    v = v + g[b * n + c] * k[c];
                }
                v * s
            })
            .collect()
    }
    fn weight(&self) -> f64 {
        self.weight
    }
}

/// The parallel density `σ^w` of a metric's Levi-Civita scale as a field.
#[derive(Clone, Debug)]
pub struct ScaleDensity<M> {
    pub metric: M,
    pub weight: f64,
}

impl<M: Field> Field for ScaleDensity<M> {
    fn dim_in(&self) -> usize {
        self.metric.dim_in()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![scale_density(&self.metric.eval(x), x.len(), self.weight)]
    }
    fn weight(&self) -> f64 {
        self.weight
    }
}

/// Field-valued product `f · v` of a scalar and another field.
#[derive(Clone, Debug)]
pub struct Scaled<F, G> {
    pub scalar: F,
    pub field: G,
    pub weight: f64,
}

impl<F: Field, G: Field> Field for Scaled<F, G> {
    fn dim_in(&self) -> usize {
        self.field.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.field.dim_out()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let s = self.scalar.eval(x)[0];
        self.field.eval(x).into_iter().map(|v| v * s).collect()
    }
    fn weight(&self) -> f64 {
        self.weight
    }
}

// ---------------------------------------------------------------------------
// Flat model with a Hermitian form

/// Affine chart `X = (1, x)` of `S^n = P₊(ℝ^{n+1})` with the flat projective
/// structure and the constant tractor metric `H₀ = diag(+1 ×p, −1 ×q)` of real
/// signature `(p, q)`. When `p` and `q` are both even, `J₀` pairs coordinates
/// as `(X_{2i}, X_{2i+1})` and `H₀` is Hermitian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatModel {
    pub p: usize,
    pub q: usize,
}

impl FlatModel {
    /// Manifold dimension `p + q − 1`.
    pub fn dim(&self) -> usize {
        self.p + self.q - 1
    }
    pub fn rank(&self) -> usize {
        self.p + self.q
    }
    /// `m` with `dim = 2m + 1`; meaningful for Hermitian models.
    pub fn m(&self) -> usize {
        (self.dim() - 1) / 2
    }
    pub fn is_hermitian(&self) -> bool {
        self.p % 2 == 0 && self.q % 2 == 0 && self.rank() >= 2
    }

    pub fn h0(&self) -> Vec<f64> {
        let r = self.rank();
        let mut h = vec![0.0; r * r];
        for i in 0..r {
            h[i * r + i] = if i < self.p { 1.0 } else { -1.0 };
        }
        h
    }

    /// `J₀ e_{2i} = e_{2i+1}`, `J₀ e_{2i+1} = −e_{2i}` (column convention);
    /// `None` unless both signature entries are even.
    pub fn j0(&self) -> Option<Vec<f64>> {
        if !self.is_hermitian() {
            return None;
        }
        let r = self.rank();
        let mut j = vec![0.0; r * r];
        for i in 0..r / 2 {
            j[(2 * i + 1) * r + 2 * i] = 1.0;
            j[(2 * i) * r + 2 * i + 1] = -1.0;
        }
        Some(j)
    }

    /// `Ω₀ = H₀ J₀`.
    pub fn omega0(&self) -> Option<Vec<f64>> {
        self.j0().map(|j| linalg::matmul(&self.h0(), &j, self.rank()))
    }

    /// `τ`, `∂τ`, `∂∂τ` for `τ(x) = (1,x)ᵀ H₀ (1,x)`.
    pub fn tau_jets<S: Scalar>(&self, x: &[S]) -> (S, Vec<S>, Vec<S>) {
        let n = self.dim();
        let h = self.h0();
        let r = self.rank();
        let mut tau = S::cst(h[0]);
        let mut d = vec![S::zero(); n];
        let mut dd = vec![S::zero(); n * n];
        for a in 0..n {
            let ha = h[(a + 1) * r + a + 1];
            tau = tau + x[a] * x[a] * ha;
            d[a] = x[a] * (2.0 * ha);
            dd[a * n + a] = S::cst(2.0 * ha);
        }
        (tau, d, dd)
    }

    /// `T(x) = [[1, 0], [x, I]]`: columns map splitting components to
    /// homogeneous coordinates, `V = ρ(1,x) + ν^b e_{1+b}`.
    pub fn trivialisation<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r = self.rank();
        let mut t = vec![S::zero(); r * r];
        for i in 0..r {
            t[i * r + i] = S::one();
        }
        for a in 0..r - 1 {
            t[(a + 1) * r] = x[a];
        }
        t
    }

    /// Inverse of [`FlatModel::trivialisation`].
    pub fn trivialisation_inv<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r = self.rank();
        let mut t = vec![S::zero(); r * r];
        for i in 0..r {
            t[i * r + i] = S::one();
        }
        for a in 0..r - 1 {
            t[(a + 1) * r] = -x[a];
        }
        t
    }
}

/// `Tᵀ H₀ T`, a bilinear form on tractors in the flat affine splitting.
#[derive(Clone, Debug)]
pub struct FlatModelBilinear {
    pub model: FlatModel,
    pub form: Vec<f64>,
}

impl Field for FlatModelBilinear {
    fn dim_in(&self) -> usize {
        self.model.dim()
    }
    fn dim_out(&self) -> usize {
        self.model.rank().pow(2)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r = self.model.rank();
        let t = self.model.trivialisation(x);
        let h: Vec<S> = self.form.iter().map(|v| S::cst(*v)).collect();
        linalg::matmul(&linalg::transpose(&t, r), &linalg::matmul(&h, &t, r), r)
    }
}

/// `T⁻¹ J₀ T`, an endomorphism of tractors in the flat affine splitting.
#[derive(Clone, Debug)]
pub struct FlatModelEndo {
    pub model: FlatModel,
    pub endo: Vec<f64>,
}

impl Field for FlatModelEndo {
    fn dim_in(&self) -> usize {
        self.model.dim()
    }
    fn dim_out(&self) -> usize {
        self.model.rank().pow(2)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r = self.model.rank();
        let t = self.model.trivialisation(x);
        let ti = self.model.trivialisation_inv(x);
        let j: Vec<S> = self.endo.iter().map(|v| S::cst(*v)).collect();
        linalg::matmul(&ti, &linalg::matmul(&j, &t, r), r)
    }
}

/// The vector field `k = Π(J)`: the ξ-slot of the flat-model complex structure.
#[derive(Clone, Debug)]
pub struct FlatModelK(pub FlatModel);

impl Field for FlatModelK {
    fn dim_in(&self) -> usize {
        self.0.dim()
    }
    fn dim_out(&self) -> usize {
        self.0.dim()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r = self.0.rank();
        let j0 = self.0.j0().expect("flat model has no complex structure");
        let j = FlatModelEndo { model: self.0, endo: j0 }.eval(x);
        (0..r - 1).map(|a| j[(a + 1) * r]).collect()
    }
}

// ---------------------------------------------------------------------------
// Contact forms

/// `θ = dz − y dx` on ℝ³, coordinates `(x, y, z)`.
#[derive(Clone, Copy, Debug)]
pub struct StandardContactR3;

impl Field for StandardContactR3 {
    fn dim_in(&self) -> usize {
        3
    }
    fn dim_out(&self) -> usize {
        3
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![-x[1], S::zero(), S::one()]
    }
    fn weight(&self) -> f64 {
        2.0
    }
}

/// `θ = dz + ½Σ(x_i dy_i − y_i dx_i)` on ℝ^{2m+1}, coordinates
/// `(x₁, y₁, …, x_m, y_m, z)`. Its exterior derivative is constant.
#[derive(Clone, Copy, Debug)]
pub struct HeisenbergContact {
    pub m: usize,
}

impl Field for HeisenbergContact {
    fn dim_in(&self) -> usize {
        2 * self.m + 1
    }
    fn dim_out(&self) -> usize {
        2 * self.m + 1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut v = vec![S::zero(); 2 * self.m + 1];
        for i in 0..self.m {
            v[2 * i] = -x[2 * i + 1] * 0.5;
            v[2 * i + 1] = x[2 * i] * 0.5;
        }
        v[2 * self.m] = S::one();
        v
    }
    fn weight(&self) -> f64 {
        2.0
    }
}

/// Contact forms on coordinate charts, all with `θ_z = 1` in the last coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContactModel {
    StandardR3,
    Heisenberg(usize),
}

impl ContactModel {
    pub fn dim(&self) -> usize {
        match self {
            ContactModel::StandardR3 => 3,
            ContactModel::Heisenberg(m) => 2 * m + 1,
        }
    }
}

impl Field for ContactModel {
    fn dim_in(&self) -> usize {
        self.dim()
    }
    fn dim_out(&self) -> usize {
        self.dim()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        match self {
            ContactModel::StandardR3 => StandardContactR3.eval(x),
            ContactModel::Heisenberg(m) => HeisenbergContact { m: *m }.eval(x),
        }
    }
    fn weight(&self) -> f64 {
        2.0
    }
}

/// A synthetic contact torsion `T^{abc} = Σ C^{ijk}(x) e_i e_j e_k` on the Heisenberg
/// chart, with `e_i` the horizontal frame and `C` ranging over the solutions of
/// `C^{(ij)k} = 0`, `C^{[ijk]} = 0`, `ω_ij C^{ijk} = 0`. Weight −4.
#[derive(Clone, Debug)]
pub struct HeisenbergTorsion {
    pub m: usize,
    basis: Vec<Vec<f64>>,
    coeff: TrigField,
}

impl HeisenbergTorsion {
    pub fn random(m: usize, scale: f64, seed: u64) -> Self {
        let h = 2 * m;
        let idx = |i: usize, j: usize, k: usize| (i * h + j) * h + k;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for i in 0..h {
            for j in 0..h {
                for k in 0..h {
                    let mut r = vec![0.0; h * h * h];
                    r[idx(i, j, k)] += 1.0;
                    r[idx(j, i, k)] += 1.0;
                    rows.push(r);
                    let mut r = vec![0.0; h * h * h];
                    r[idx(i, j, k)] += 1.0;
                    r[idx(j, k, i)] += 1.0;
                    r[idx(k, i, j)] += 1.0;
                    rows.push(r);
                }
            }
        }
        for k in 0..h {
            let mut r = vec![0.0; h * h * h];
            for i in 0..m {
                r[idx(2 * i, 2 * i + 1, k)] = 1.0;
                r[idx(2 * i + 1, 2 * i, k)] = -1.0;
            }
            rows.push(r);
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let basis = linalg::null_space(&flat, rows.len(), h * h * h, 1e-12);
        let coeff = TrigField::random(2 * m + 1, basis.len(), scale, seed);
        HeisenbergTorsion { m, basis, coeff }
    }

    /// Dimension of the space of admissible algebraic torsions.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Horizontal frame `e_i` evaluated at `x`, `[i][a]`.
    pub fn frame<S: Scalar>(m: usize, x: &[S]) -> Vec<Vec<S>> {
        let n = 2 * m + 1;
        let mut e = vec![vec![S::zero(); n]; 2 * m];
        for i in 0..m {
            e[2 * i][2 * i] = S::one();
            e[2 * i][n - 1] = x[2 * i + 1] * 0.5;
            e[2 * i + 1][2 * i + 1] = S::one();
            e[2 * i + 1][n - 1] = -x[2 * i] * 0.5;
        }
        e
    }
}

impl Field for HeisenbergTorsion {
    fn dim_in(&self) -> usize {
        2 * self.m + 1
    }
    fn dim_out(&self) -> usize {
        (2 * self.m + 1).pow(3)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (n, h) = (2 * self.m + 1, 2 * self.m);
        let f = self.coeff.eval(x);
        let e = Self::frame(self.m, x);
        let mut c = vec![S::zero(); h * h * h];
        for (l, b) in self.basis.iter().enumerate() {
            for (q, v) in b.iter().enumerate() {
                c[q] = c[q] + f[l] * *v;
            }
        }
        let mut out = vec![S::zero(); n * n * n];
        for i in 0..h {
            for j in 0..h {
                for k in 0..h {
                    let cv = c[(i * h + j) * h + k];
                    // e_i is supported on coordinates i and z
                    for a in [i, n - 1] {
                        let ca = cv * e[i][a];
                        for b in [j, n - 1] {
                            let cab = ca * e[j][b];
                            for d in [k, n - 1] {
                                out[(a * n + b) * n + d] = out[(a * n + b) * n + d] + cab * e[k][d];
                            }
                        }
                    }
                }
            }
        }
        out
    }
    fn weight(&self) -> f64 {
        -4.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::eval_jet;

    #[test]
    fn hopf_reeb_field_is_unit() {
        let x = [0.3, -0.2, 0.5, 0.1, 0.7];
        let g = MetricModel::HopfSphere(2).eval(&x);
        assert!((g[24] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flat_model_tau_example() {
        let f = FlatModel { p: 2, q: 2 };
        let x = [0.3, 0.4, -1.2];
        let (tau, _, _) = f.tau_jets(&x);
        assert!((tau - (1.0 + 0.09 - 0.16 - 1.44)).abs() < 1e-15);
    }

    #[test]
    fn open_orbit_metric_is_symmetric() {
        let f = FlatModel { p: 4, q: 2 };
        let m = MetricModel::OpenOrbit(f);
        let j = eval_jet(&m, &[0.1, 0.2, 0.3, 0.1, 0.2], 1, None).unwrap();
        let n = 5;
        for a in 0..n {
            for b in 0..n {
                assert_eq!(j.value[a * n + b], j.value[b * n + a]);
            }
        }
    }
}
