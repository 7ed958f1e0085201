//! Complex Monge–Ampère determinant of a CR defining function, the ambient Kähler
//! metric `∂∂̄(−|z₀|²u)` on `ℂ*×ℂ^m` and its Ricci form.
//!
//! Wirtinger derivatives are taken over real coordinates `(x₁, y₁, …)` with
//! `∂ = (∂ₓ − i∂ᵧ)/2`; complex numbers only appear in the linear algebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{GeomError, Result};
use crate::jets::{eval_jet, value_and_partials, Field, Jet, Point, Scalar};
use crate::linalg;
use crate::report::{CheckReport, Residual};

/// Real-valued defining functions `u(z)` on `ℂ^m`.
#[derive(Clone, Debug, PartialEq)]
pub enum CrPotential {
    /// `c(1 − |z|²)`.
    Sphere { m: usize, c: f64 },
    /// `(1 − |z|²)(1 + ε|z₁|⁴)`.
    Perturbed { m: usize, eps: f64 },
    /// `u ≡ v`.
    Constant { m: usize, v: f64 },
    /// `1 + Re z₁`, pluriharmonic.
    Pluriharmonic { m: usize },
}

impl CrPotential {
    pub fn m(&self) -> usize {
        match self {
            CrPotential::Sphere { m, .. }
            | CrPotential::Perturbed { m, .. }
            | CrPotential::Constant { m, .. }
            | CrPotential::Pluriharmonic { m } => *m,
        }
    }
}

fn norm2<S: Scalar>(x: &[S]) -> S {
    x.iter().fold(S::zero(), |s, v| s + *v * *v)
}

impl Field for CrPotential {
    fn dim_in(&self) -> usize {
        2 * self.m()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let v = match self {
            CrPotential::Sphere { c, .. } => (S::one() - norm2(x)) * *c,
            CrPotential::Perturbed { eps, .. } => {
                let z1 = x[0] * x[0] + x[1] * x[1];
                (S::one() - norm2(x)) * (z1 * z1 * *eps + 1.0)
            }
            CrPotential::Constant { v, .. } => S::cst(*v),
            CrPotential::Pluriharmonic { .. } => x[0] + 1.0,
        };
        vec![v]
    }
}

/// The ambient potential `Φ(z₀, z) = −|z₀|² u(z)` on `ℂ^{m+1}`.
#[derive(Clone, Debug)]
pub struct AmbientPotential<U>(pub U);

impl<U: Field> Field for AmbientPotential<U> {
    fn dim_in(&self) -> usize {
        self.0.dim_in() + 2
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let u = self.0.eval(&x[2..])[0];
        vec![-(x[0] * x[0] + x[1] * x[1]) * u]
    }
}

/// `Φ = Σ s_α |z_α|²`, a flat Kähler potential of any signature.
#[derive(Clone, Debug)]
pub struct DiagonalPotential(pub Vec<f64>);

impl Field for DiagonalPotential {
    fn dim_in(&self) -> usize {
        2 * self.0.len()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut s = S::zero();
        for (a, c) in self.0.iter().enumerate() {
            s = s + (x[2 * a] * x[2 * a] + x[2 * a + 1] * x[2 * a + 1]) * *c;
        }
        vec![s]
    }
}

/// Mixed Wirtinger Hessian `∂_α∂_β̄` from real second partials `d2[i][j]`,
/// returned as `(re, im)` row-major `n×n`.
fn mixed<S: Scalar>(d2: &dyn Fn(usize, usize) -> S, n: usize) -> (Vec<S>, Vec<S>) {
    let mut re = vec![S::zero(); n * n];
    let mut im = vec![S::zero(); n * n];
    for a in 0..n {
        for b in 0..n {
            let (x, y, xp, yp) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
            re[a * n + b] = (d2(x, xp) + d2(y, yp)) * 0.25;
            im[a * n + b] = (d2(x, yp) - d2(y, xp)) * 0.25;
        }
    }
    (re, im)
}

/// Real form `[[A, −B], [B, A]]` of `A + iB`; its determinant is `|det(A + iB)|²`.
fn real_form<S: Scalar>(re: &[S], im: &[S], n: usize) -> Vec<S> {
    let r = 2 * n;
    let mut out = vec![S::zero(); r * r];
    for a in 0..n {
        for b in 0..n {
            out[a * r + b] = re[a * n + b];
            out[(a + n) * r + b + n] = re[a * n + b];
            out[a * r + b + n] = -im[a * n + b];
            out[(a + n) * r + b] = im[a * n + b];
        }
    }
    out
}

/// Gradient of a scalar field, as a field.
struct Gradient<'a, F>(&'a F);

impl<F: Field> Field for Gradient<'_, F> {
    fn dim_in(&self) -> usize {
        self.0.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.0.dim_in()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        value_and_partials(self.0, x).1
    }
}

fn real_hessian<S: Scalar, F: Field>(f: &F, x: &[S]) -> Vec<S> {
    value_and_partials(&Gradient(f), x).1
}

/// The Hermitian matrix `∂_α∂_β̄Φ` of a potential, as a field with outputs
/// `[re (n×n), im (n×n)]`.
#[derive(Clone, Debug)]
pub struct ComplexHessian<P>(pub P);

impl<P: Field> Field for ComplexHessian<P> {
    fn dim_in(&self) -> usize {
        self.0.dim_in()
    }
    fn dim_out(&self) -> usize {
        let n = self.0.dim_in() / 2;
        2 * n * n
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r = x.len();
        let h = real_hessian(&self.0, x);
        let (mut re, im) = mixed(&|i, j| h[i * r + j], r / 2);
        re.extend(im);
        re
    }
}

/// `log|det h|` of a Hermitian matrix field with outputs `[re, im]`.
#[derive(Clone, Debug)]
pub struct LogDet<H>(pub H);

impl<H: Field> Field for LogDet<H> {
    fn dim_in(&self) -> usize {
        self.0.dim_in()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len() / 2;
        let h = self.0.eval(x);
        let d = linalg::det(&real_form(&h[..n * n], &h[n * n..], n), 2 * n);
        vec![d.abs().ln() * 0.5]
    }
}

/// Bordered matrix `[[u, u_b̄], [u_a, u_ab̄]]` as `(re, im)` from real jets.
fn bordered<S: Scalar>(u: S, d1: &dyn Fn(usize) -> S, d2: &dyn Fn(usize, usize) -> S, m: usize) -> (Vec<S>, Vec<S>) {
    let r = m + 1;
    let (hre, him) = mixed(d2, m);
    let mut re = vec![S::zero(); r * r];
    let mut im = vec![S::zero(); r * r];
    re[0] = u;
    for a in 0..m {
        // u_a = (u_x − i u_y)/2, u_ā its conjugate
        let (ur, ui) = (d1(2 * a) * 0.5, -(d1(2 * a + 1) * 0.5));
        re[(a + 1) * r] = ur;
        im[(a + 1) * r] = ui;
        re[a + 1] = ur;
        im[a + 1] = -ui;
        for b in 0..m {
            re[(a + 1) * r + b + 1] = hre[a * m + b];
            im[(a + 1) * r + b + 1] = him[a * m + b];
        }
    }
    (re, im)
}

/// `log|K(u)|` as a field on `ℂ^m`.
#[derive(Clone, Debug)]
pub struct LogK<U>(pub U);

impl<U: Field> Field for LogK<U> {
    fn dim_in(&self) -> usize {
        self.0.dim_in()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let m = n / 2;
        let u = self.0.eval(x)[0];
        let g = value_and_partials(&self.0, x).1;
        let h = real_hessian(&self.0, x);
        let (re, im) = bordered(u, &|i| g[i], &|i, j| h[i * n + j], m);
        let d = linalg::det(&real_form(&re, &im, m + 1), 2 * m + 2);
        vec![d.abs().ln() * 0.5]
    }
}

fn to_complex(re: &[f64], im: &[f64]) -> Vec<Complex64> {
    re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect()
}

/// `K(u) = (−1)^m det[[u, u_b̄], [u_a, u_ab̄]]`; the sign makes the sphere give `+1`.
pub fn monge_ampere_k<U: Field>(u: &U, z: &[f64]) -> Result<f64> {
    let m = u.dim_in() / 2;
    let j = eval_jet(u, z, 2, None)?;
    let (re, im) = bordered(j.value[0], &|i| j.d1(i, 0), &|a, b| j.d2(a, b, 0), m);
    let d = DMatrix::from_row_slice(m + 1, m + 1, &to_complex(&re, &im)).determinant();
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * d.re)
}

/// Ambient metric at one point of `ℂ*×ℂ^m`, with first real partials.
#[derive(Clone, Debug)]
pub struct AmbientMetric {
    /// Complex dimension `m + 1`.
    pub n: usize,
    /// `h_{αβ̄}`, row-major.
    pub h: Vec<Complex64>,
    /// `∂h/∂x_k`, `[k][α][β]` over the `2n` real coordinates.
    pub dh: Vec<Complex64>,
}

impl AmbientMetric {
    pub fn from_field<H: Field>(field: &H, x: &[f64]) -> Result<Self> {
        let n = x.len() / 2;
        let nn = n * n;
        let j: Jet = eval_jet(field, x, 1, None)?;
        let h = to_complex(&j.value[..nn], &j.value[nn..]);
        let mut dh = Vec::with_capacity(2 * n * nn);
        for k in 0..2 * n {
            dh.extend((0..nn).map(|q| Complex64::new(j.d1(k, q), j.d1(k, nn + q))));
        }
        Ok(AmbientMetric { n, h, dh })
    }

    pub fn real_form(&self) -> Vec<f64> {
        let re: Vec<f64> = self.h.iter().map(|c| c.re).collect();
        let im: Vec<f64> = self.h.iter().map(|c| c.im).collect();
        real_form(&re, &im, self.n)
    }

    /// `max |h_{αβ̄} − conj(h_{βᾱ})|`.
    pub fn hermitian_residual(&self) -> f64 {
        let n = self.n;
        (0..n * n).map(|q| (self.h[q] - self.h[(q % n) * n + q / n].conj()).norm()).fold(0.0, f64::max)
    }

    pub fn condition(&self) -> f64 {
        linalg::condition(&self.real_form(), 2 * self.n)
    }

    pub fn is_degenerate(&self) -> bool {
        self.condition() > MAX_CONDITION
    }

    /// Real signature `(positive, negative)` of the underlying real symmetric form.
    pub fn signature(&self) -> (usize, usize) {
        linalg::signature(&self.real_form(), 2 * self.n, 1e-10)
    }

    /// `max |∂_γ h_{αβ̄} − ∂_α h_{γβ̄}|`, Wirtinger `∂_γ = (∂ₓ − i∂ᵧ)/2`.
    pub fn closedness_residual(&self) -> f64 {
        let n = self.n;
        let nn = n * n;
        let w = |g: usize, a: usize, b: usize| {
            (self.dh[2 * g * nn + a * n + b] - Complex64::i() * self.dh[(2 * g + 1) * nn + a * n + b]) * 0.5
        };
        let mut worst = 0.0f64;
        for g in 0..n {
            for a in 0..n {
                for b in 0..n {
                    worst = worst.max((w(g, a, b) - w(a, g, b)).norm());
                }
            }
        }
        worst
    }
}

/// Largest condition number of the real form accepted as nondegenerate.
pub const MAX_CONDITION: f64 = 1e10;

/// `h = ∂∂̄(−|z₀|²u)` at `x = (z₀, z)` in real coordinates.
pub fn ambient_metric<U: Field>(u: &U, x: &[f64]) -> Result<AmbientMetric> {
    if x[0] == 0.0 && x[1] == 0.0 {
        return Err(GeomError::ZeroFiberCoordinate);
    }
    AmbientMetric::from_field(&ComplexHessian(AmbientPotential(u)), x)
}

fn complex_hessian_of<F: Field>(f: &F, x: &[f64]) -> Result<Vec<Complex64>> {
    let n = x.len() / 2;
    let j = eval_jet(f, x, 2, None)?;
    let (re, im) = mixed(&|a, b| j.d2(a, b, 0), n);
    Ok(to_complex(&re, &im))
}

/// Ricci form `∂_α∂_β̄ log|det h|` of a Hermitian metric field `[re, im]`.
pub fn ambient_ricci<H: Field>(h: &H, x: &[f64]) -> Result<Vec<Complex64>> {
    let m = AmbientMetric::from_field(h, x)?;
    if m.is_degenerate() {
        return Err(GeomError::SingularAmbient);
    }
    complex_hessian_of(&LogDet(h), x)
}

/// `∂_a∂_b̄ log|K(u)|` on `ℂ^m`.
pub fn log_k_hessian<U: Field>(u: &U, z: &[f64]) -> Result<Vec<Complex64>> {
    if monge_ampere_k(u, z)?.abs() < 1e-300 {
        return Err(GeomError::DegenerateInput("K(u) vanishes".into()));
    }
    complex_hessian_of(&LogK(u), z)
}

/// Hermitian symmetry, closedness, nondegeneracy and signature of a Hermitian
/// metric field over sample points. Degenerate points are counted in the details;
/// `expected` is the real signature the sample should carry.
pub fn kahler_check<H: Field>(h: &H, points: &[Point], tol: f64, mut expected: Option<(usize, usize)>) -> Result<Vec<CheckReport>> {
    let mut herm = Residual::new("ambient.hermitian", tol);
    let mut closed = Residual::new("ambient.closed", tol);
    let mut nondeg = Residual::new("ambient.nondegenerate", MAX_CONDITION);
    let mut sig = Residual::new("ambient.signature", 0.0);
    let mut degenerate = 0usize;
    for p in points {
        let x = &p.coords;
        let m = AmbientMetric::from_field(h, x)?;
        herm.push(m.hermitian_residual(), x);
        closed.push(m.closedness_residual(), x);
        let c = m.condition();
        nondeg.push(c, x);
        if c > MAX_CONDITION {
            degenerate += 1;
            continue;
        }
        let s = m.signature();
        let want = *expected.get_or_insert(s);
        sig.push(if s == want { 0.0 } else { 1.0 }, x);
    }
    nondeg.detail("degenerate_points", degenerate as f64);
    if let Some((p, q)) = expected {
        sig.detail("positive", p as f64);
        sig.detail("negative", q as f64);
    }
    Ok(vec![herm.finish(), closed.finish(), nondeg.finish(), sig.finish()])
}

/// `h = I + t·x₀·E₁₁`: Hermitian but not closed, a control for [`kahler_check`].
#[derive(Clone, Debug)]
pub struct NonClosedHermitian {
    pub n: usize,
    pub t: f64,
}

impl Field for NonClosedHermitian {
    fn dim_in(&self) -> usize {
        2 * self.n
    }
    fn dim_out(&self) -> usize {
        2 * self.n * self.n
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = self.n;
        let mut out = vec![S::zero(); 2 * n * n];
        for a in 0..n {
            out[a * n + a] = S::one();
        }
        out[n + 1] = S::one() + x[0] * self.t;
        out
    }
}
