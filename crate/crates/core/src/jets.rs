//! Chart-level fields and their derivatives.
//!
//! Fields are generic closures over [`Scalar`]; derivatives come from
//! evaluating the same closure on nested [`Dual`] numbers. A central
//! finite-difference routine is kept alongside as an independent oracle.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeomError, Result};
use crate::linalg;

pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    /// Underlying real value, stripping all infinitesimal parts.
    fn re(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, p: f64) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
    fn abs(self) -> Self {
        if self.re() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

/// `v + d·ε` with `ε² = 0`. Nesting gives mixed higher partials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub v: T,
    pub d: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(v: T, d: T) -> Self {
        Dual { v, d }
    }
    pub fn constant(v: T) -> Self {
        Dual { v, d: T::zero() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}
impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}
impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}
impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.v.recip();
        let q = self.v * inv;
        Dual::new(q, (self.d - q * o.d) * inv)
    }
}
impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.v, -self.d)
    }
}
impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Dual::new(self.v + o, self.d)
    }
}
impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Dual::new(self.v - o, self.d)
    }
}
impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Dual::new(self.v * o, self.d * o)
    }
}
impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        Dual::new(self.v / o, self.d / o)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }
    fn re(self) -> f64 {
        self.v.re()
    }
    fn sin(self) -> Self {
        Dual::new(self.v.sin(), self.d * self.v.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.v.cos(), -(self.d * self.v.sin()))
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual::new(e, self.d * e)
    }
    fn ln(self) -> Self {
        Dual::new(self.v.ln(), self.d / self.v)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Dual::new(s, self.d / (s * 2.0))
    }
    fn powf(self, p: f64) -> Self {
        Dual::new(self.v.powf(p), self.d * self.v.powf(p - 1.0) * p)
    }
}

pub type D1 = Dual<f64>;
pub type D2 = Dual<D1>;
pub type D3 = Dual<D2>;

/// A smooth map from chart coordinates to a flat list of components.
///
/// `eval` must be written generically so that it can be evaluated on
/// nested duals; that is the only way derivatives are produced.
pub trait Field {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S>;
    /// Projective weight of the components in the coordinate trivialisation.
    fn weight(&self) -> f64 {
        0.0
    }
}

impl<F: Field + ?Sized> Field for &F {
    fn dim_in(&self) -> usize {
        (**self).dim_in()
    }
    fn dim_out(&self) -> usize {
        (**self).dim_out()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        (**self).eval(x)
    }
    fn weight(&self) -> f64 {
        (**self).weight()
    }
}

/// Value of `f` at `x` together with all first partials `[i][out]`,
/// computed one level of duals above `S`.
pub fn value_and_partials<S: Scalar, F: Field>(f: &F, x: &[S]) -> (Vec<S>, Vec<S>) {
    let n = x.len();
    let mut value = Vec::new();
    let mut d = Vec::with_capacity(n * f.dim_out());
    for i in 0..n {
        let xd: Vec<Dual<S>> = x
            .iter()
            .enumerate()
            .map(|(l, &xl)| Dual::new(xl, if l == i { S::one() } else { S::zero() }))
            .collect();
        let y = f.eval(&xd);
        if i == 0 {
            value = y.iter().map(|c| c.v).collect();
        }
        d.extend(y.iter().map(|c| c.d));
    }
    if n == 0 {
        value = f.eval(x);
    }
    (value, d)
}

/// Axis-aligned chart domain.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChartBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ChartBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        ChartBox { lo, hi }
    }

    pub fn cube(dim: usize, half: f64) -> Self {
        ChartBox::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(GeomError::OutOfDomain(x.to_vec()))
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Deterministic low-discrepancy samples (Halton with a seeded
    /// Cranley–Patterson shift), kept 5% of each side away from the boundary.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Point> {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let start = rng.gen_range(0..1024u64);
        (0..count as u64)
            .map(|k| {
                let coords = (0..d)
                    .map(|i| {
                        let u = (halton(start + k + 1, PRIMES[i % PRIMES.len()]) + shift[i]).fract();
                        let w = self.hi[i] - self.lo[i];
                        self.lo[i] + w * (0.05 + 0.9 * u)
                    })
                    .collect();
                Point::new(coords)
            })
            .collect()
    }
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub chart_id: String,
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { chart_id: "main".into(), coords }
    }
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Components and partial derivatives of a field at a point.
///
/// Layouts: `d1[i*m + o]`, `d2[(i*n + j)*m + o]`, `d3[((i*n + j)*n + k)*m + o]`
/// with `n` inputs and `m` outputs.
#[derive(Clone, Debug)]
pub struct Jet {
    pub order: usize,
    pub n: usize,
    pub m: usize,
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
}

impl Jet {
    pub fn d1(&self, i: usize, o: usize) -> f64 {
        self.d1[i * self.m + o]
    }
    pub fn d2(&self, i: usize, j: usize, o: usize) -> f64 {
        self.d2[(i * self.n + j) * self.m + o]
    }
    pub fn d3(&self, i: usize, j: usize, k: usize, o: usize) -> f64 {
        self.d3[((i * self.n + j) * self.n + k) * self.m + o]
    }
}

fn seed(x: f64, on: bool) -> D1 {
    Dual::new(x, if on { 1.0 } else { 0.0 })
}

pub fn eval_jet<F: Field>(f: &F, x: &[f64], order: usize, domain: Option<&ChartBox>) -> Result<Jet> {
    if order > 3 {
        return Err(GeomError::OrderUnsupported(order));
    }
    if let Some(b) = domain {
        b.check(x)?;
    }
    let n = x.len();
    let m = f.dim_out();
    let mut jet = Jet {
        order,
        n,
        m,
        value: Vec::new(),
        d1: Vec::new(),
        d2: Vec::new(),
        d3: Vec::new(),
    };
    match order {
        0 => jet.value = f.eval(x),
        1 => {
            let (v, d) = value_and_partials(f, x);
            jet.value = v;
            jet.d1 = d;
        }
        2 => {
            jet.d1 = vec![0.0; n * m];
            jet.d2 = vec![0.0; n * n * m];
            for i in 0..n {
                for j in i..n {
                    let xs: Vec<D2> = (0..n)
                        .map(|l| Dual::new(seed(x[l], l == i), Dual::constant(if l == j { 1.0 } else { 0.0 })))
                        .collect();
                    let y = f.eval(&xs);
                    for o in 0..m {
                        if i == 0 && j == 0 {
                            jet.value.push(y[o].v.v);
                        }
                        jet.d1[i * m + o] = y[o].v.d;
                        jet.d1[j * m + o] = y[o].d.v;
                        jet.d2[(i * n + j) * m + o] = y[o].d.d;
                        jet.d2[(j * n + i) * m + o] = y[o].d.d;
                    }
                }
            }
        }
        _ => {
            jet.d1 = vec![0.0; n * m];
            jet.d2 = vec![0.0; n * n * m];
            jet.d3 = vec![0.0; n * n * n * m];
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let xs: Vec<D3> = (0..n)
                            .map(|l| {
                                let inner = Dual::new(seed(x[l], l == i), Dual::constant(if l == j { 1.0 } else { 0.0 }));
                                Dual::new(inner, D2::cst(if l == k { 1.0 } else { 0.0 }))
                            })
                            .collect();
                        let y = f.eval(&xs);
                        for o in 0..m {
                            let c = y[o];
                            if i == 0 && j == 0 && k == 0 {
                                jet.value.push(c.v.v.v);
                            }
                            jet.d1[i * m + o] = c.v.v.d;
                            jet.d1[j * m + o] = c.v.d.v;
                            jet.d1[k * m + o] = c.d.v.v;
                            for (a, b, val) in [(i, j, c.v.d.d), (i, k, c.d.v.d), (j, k, c.d.d.v)] {
                                jet.d2[(a * n + b) * m + o] = val;
                                jet.d2[(b * n + a) * m + o] = val;
                            }
                            for (a, b, cc) in permutations3(i, j, k) {
                                jet.d3[((a * n + b) * n + cc) * m + o] = c.d.d.d;
                            }
                        }
                    }
                }
            }
        }
    }
    if n == 0 && jet.value.is_empty() {
        jet.value = f.eval(x);
    }
    Ok(jet)
}

fn permutations3(i: usize, j: usize, k: usize) -> [(usize, usize, usize); 6] {
    [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)]
}

/// Central-difference first derivatives `[i][out]`; oracle only.
pub fn fd_derivative<F: Field>(f: &F, x: &[f64], step: f64, domain: Option<&ChartBox>) -> Result<Vec<f64>> {
    if step <= 0.0 {
        return Err(GeomError::InvalidArgument("finite-difference step must be positive".into()));
    }
    let n = x.len();
    let m = f.dim_out();
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += step;
        xm[i] -= step;
        if let Some(b) = domain {
            b.check(&xp)?;
            b.check(&xm)?;
        }
        let fp = f.eval(&xp);
        let fm = f.eval(&xm);
        for o in 0..m {
            out[i * m + o] = (fp[o] - fm[o]) / (2.0 * step);
        }
    }
    Ok(out)
}

/// Largest scaled mismatch `|AD − FD| / (1 + max|AD block|)` between every
/// dual-number derivative block up to `order` and central differences of the
/// block one order lower.
pub fn ad_fd_residual<F: Field>(f: &F, x: &[f64], step: f64, order: usize, domain: Option<&ChartBox>) -> Result<f64> {
    if order == 0 || order > 3 {
        return Err(GeomError::OrderUnsupported(order));
    }
    if step <= 0.0 {
        return Err(GeomError::InvalidArgument("finite-difference step must be positive".into()));
    }
    let n = x.len();
    let ad = eval_jet(f, x, order, domain)?;
    let block = |j: &Jet, k: usize| -> Vec<f64> {
        match k {
            0 => j.value.clone(),
            1 => j.d1.clone(),
            2 => j.d2.clone(),
            _ => j.d3.clone(),
        }
    };
    let mut worst = 0.0f64;
    for k in 1..=order {
        let want = block(&ad, k);
        let scale = 1.0 + linalg::max_abs(&want);
        let len = want.len() / n;
        for i in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += step;
            xm[i] -= step;
            let (jp, jm) = (eval_jet(f, &xp, k - 1, domain)?, eval_jet(f, &xm, k - 1, domain)?);
            let (bp, bm) = (block(&jp, k - 1), block(&jm, k - 1));
            for q in 0..len {
                let fd = (bp[q] - bm[q]) / (2.0 * step);
                worst = worst.max((want[i * len + q] - fd).abs() / scale);
            }
        }
    }
    Ok(worst)
}


/// Metric components `g_ab` with partials to third order.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub n: usize,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    pub d2g: Vec<f64>,
    pub d3g: Vec<f64>,
}

impl MetricJet {
    pub fn from_jet(j: &Jet) -> Result<Self> {
        let n = j.n;
        if j.m != n * n {
            return Err(GeomError::InvalidArgument("metric field must have n*n components".into()));
        }
        if j.order < 3 {
            return Err(GeomError::InvalidArgument("metric jet needs order 3".into()));
        }
        for a in 0..n {
            for b in 0..a {
                if (j.value[a * n + b] - j.value[b * n + a]).abs() > 1e-12 * (1.0 + j.value[a * n + b].abs()) {
                    return Err(GeomError::InvalidArgument("metric is not symmetric".into()));
                }
            }
        }
        Ok(MetricJet { n, g: j.value.clone(), dg: j.d1.clone(), d2g: j.d2.clone(), d3g: j.d3.clone() })
    }

    pub fn eval<F: Field>(f: &F, x: &[f64], domain: Option<&ChartBox>) -> Result<Self> {
        Self::from_jet(&eval_jet(f, x, 3, domain)?)
    }
}

/// `g^{ab}` with first and second partials (`[e][a][b]`, `[e][f][a][b]`).
#[derive(Clone, Debug)]
pub struct InverseMetricJet {
    pub n: usize,
    pub gi: Vec<f64>,
    pub dgi: Vec<f64>,
    pub d2gi: Vec<f64>,
}

pub fn inverse_metric(g: &MetricJet) -> Result<InverseMetricJet> {
    let n = g.n;
    let scale = g.g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let (gi, det) = crate::linalg::inverse_with_det(&g.g, n).ok_or(GeomError::SingularMetric)?;
    if det.abs() < 1e-12 * scale.powi(n as i32) {
        return Err(GeomError::SingularMetric);
    }
    let nn = n * n;
    let mm = |a: &[f64], b: &[f64]| crate::linalg::matmul(a, b, n);
    // d(g^-1) = -g^-1 (dg) g^-1
    let mut dgi = vec![0.0; n * nn];
    let mut t1 = Vec::with_capacity(n);
    for e in 0..n {
        let dge = &g.dg[e * nn..(e + 1) * nn];
        let t = mm(&gi, dge);
        let r = mm(&t, &gi);
        for k in 0..nn {
            dgi[e * nn + k] = -r[k];
        }
        t1.push(t);
    }
    let mut d2gi = vec![0.0; n * n * nn];
    for e in 0..n {
        for f in 0..n {
            let d2 = &g.d2g[(e * n + f) * nn..(e * n + f + 1) * nn];
            let a = mm(&mm(&gi, d2), &gi);
            let b = mm(&mm(&t1[e], &t1[f]), &gi);
            let c = mm(&mm(&t1[f], &t1[e]), &gi);
            for k in 0..nn {
                d2gi[(e * n + f) * nn + k] = -a[k] + b[k] + c[k];
            }
        }
    }
    Ok(InverseMetricJet { n, gi, dgi, d2gi })
}
