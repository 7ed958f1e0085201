//! Torsion-free affine connections on a chart and their projective invariants.
//!
//! Curvature convention: `R_{ab}^c_d ξ^d = (∇_a∇_b − ∇_b∇_a) ξ^c`, stored
//! row-major as `[a][b][c][d]`; Ricci is `Ric_{bd} = R_{cb}^c_d`.
//! Dimension of the manifold is `N = n + 1`.

use crate::error::{GeomError, Result};
use crate::jets::{eval_jet, value_and_partials, ChartBox, Field, Jet, MetricJet, Scalar};
use crate::linalg;

/// Christoffel symbols `Γ^c_{ab}` with partials to order 2.
/// Layouts: `gamma[c][a][b]`, `dgamma[e][c][a][b]`, `d2gamma[e][f][c][a][b]`.
#[derive(Clone, Debug)]
pub struct ConnectionJet {
    pub n: usize,
    pub x: Vec<f64>,
    pub order: usize,
    pub gamma: Vec<f64>,
    pub dgamma: Vec<f64>,
    pub d2gamma: Vec<f64>,
}

impl ConnectionJet {
    /// Manifold dimension `N = n + 1` (the `n` field stores `N`).
    pub fn dim(&self) -> usize {
        self.n
    }
    #[inline]
    pub fn g(&self, c: usize, a: usize, b: usize) -> f64 {
        let n = self.n;
        self.gamma[(c * n + a) * n + b]
    }
    #[inline]
    pub fn dg(&self, e: usize, c: usize, a: usize, b: usize) -> f64 {
        let n = self.n;
        self.dgamma[((e * n + c) * n + a) * n + b]
    }
    #[inline]
    pub fn d2g(&self, e: usize, f: usize, c: usize, a: usize, b: usize) -> f64 {
        let n = self.n;
        self.d2gamma[(((e * n + f) * n + c) * n + a) * n + b]
    }

    /// Jets of a Christoffel-symbol field (`N³` outputs) at `x`.
    pub fn from_field<F: Field>(f: &F, x: &[f64], order: usize, domain: Option<&ChartBox>) -> Result<Self> {
        let n = x.len();
        if f.dim_out() != n * n * n {
            return Err(GeomError::InvalidArgument("connection field must have N^3 components".into()));
        }
        let j = eval_jet(f, x, order.min(2), domain)?;
        let c = Self::from_jet(&j, x);
        c.check_symmetric()?;
        Ok(c)
    }

    pub fn from_jet(j: &Jet, x: &[f64]) -> Self {
        ConnectionJet {
            n: j.n,
            x: x.to_vec(),
            order: j.order,
            gamma: j.value.clone(),
            dgamma: j.d1.clone(),
            d2gamma: j.d2.clone(),
        }
    }

    fn check_symmetric(&self) -> Result<()> {
        let n = self.n;
        for c in 0..n {
            for a in 0..n {
                for b in 0..a {
                    if (self.g(c, a, b) - self.g(c, b, a)).abs() > 1e-11 * (1.0 + self.g(c, a, b).abs()) {
                        return Err(GeomError::InvalidArgument("connection has torsion".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// `γ_a = Γ^b_{ba}/(n+2)`: the density part of the connection in the
    /// coordinate trivialisation.
    pub fn gamma_trace(&self) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|a| (0..n).map(|b| self.g(b, b, a)).sum::<f64>() / (n as f64 + 1.0)).collect()
    }

    /// `∂_e γ_a` as `[e][a]`.
    pub fn dgamma_trace(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for e in 0..n {
            for a in 0..n {
                out[e * n + a] = (0..n).map(|b| self.dg(e, b, b, a)).sum::<f64>() / (n as f64 + 1.0);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Generic connection fields

/// Christoffel symbols of the Levi-Civita connection of a metric field,
/// computed generically (first metric derivatives via one extra dual level).
#[derive(Clone, Debug)]
pub struct LeviCivita<M>(pub M);

pub fn christoffel_of<S: Scalar>(n: usize, g: &[S], dg: &[S]) -> Option<Vec<S>> {
    let gi = linalg::inverse(g, n)?;
    let nn = n * n;
    let mut first = vec![S::zero(); n * nn];
    for d in 0..n {
        for a in 0..n {
            for b in 0..n {
                first[(d * n + a) * n + b] =
                    (dg[a * nn + d * n + b] + dg[b * nn + d * n + a] - dg[d * nn + a * n + b]) * 0.5;
            }
        }
    }
    let mut out = vec![S::zero(); n * nn];
    for c in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut s = S::zero();
                for d in 0..n {
                    s = s + gi[c * n + d] * first[(d * n + a) * n + b];
                }
                out[(c * n + a) * n + b] = s;
            }
        }
    }
    Some(out)
}

impl<M: Field> Field for LeviCivita<M> {
    fn dim_in(&self) -> usize {
        self.0.dim_in()
    }
    fn dim_out(&self) -> usize {
        let n = self.0.dim_in();
        n * n * n
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let (g, dg) = value_and_partials(&self.0, x);
        christoffel_of(n, &g, &dg).unwrap_or_else(|| vec![S::cst(f64::NAN); n * n * n])
    }
}

/// The projectively equivalent connection `Γ + δΥ + δΥ` for a 1-form field `Υ`.
#[derive(Clone, Debug)]
pub struct ProjectivelyChanged<G, U> {
    pub base: G,
    pub upsilon: U,
}

impl<G: Field, U: Field> Field for ProjectivelyChanged<G, U> {
    fn dim_in(&self) -> usize {
        self.base.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.base.dim_out()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let mut gamma = self.base.eval(x);
        let u = self.upsilon.eval(x);
        for c in 0..n {
            for a in 0..n {
                gamma[(c * n + c) * n + a] = gamma[(c * n + c) * n + a] + u[a];
                gamma[(c * n + a) * n + c] = gamma[(c * n + a) * n + c] + u[a];
            }
        }
        gamma
    }
}

/// Identically vanishing Christoffel symbols on `ℝ^N`.
#[derive(Clone, Copy, Debug)]
pub struct FlatConnection(pub usize);

impl Field for FlatConnection {
    fn dim_in(&self) -> usize {
        self.0
    }
    fn dim_out(&self) -> usize {
        self.0 * self.0 * self.0
    }
    fn eval<S: Scalar>(&self, _x: &[S]) -> Vec<S> {
        vec![S::zero(); self.dim_out()]
    }
}

// ---------------------------------------------------------------------------
// Explicit Levi-Civita jets

pub fn levi_civita(g: &MetricJet) -> Result<ConnectionJet> {
    let n = g.n;
    let inv = crate::jets::inverse_metric(g)?;
    let nn = n * n;
    let n3 = nn * n;
    // Christoffel symbols of the first kind and their partials.
    let mut f0 = vec![0.0; n3];
    let mut f1 = vec![0.0; n * n3];
    let mut f2 = vec![0.0; nn * n3];
    let dg = |e: usize, a: usize, b: usize| g.dg[e * nn + a * n + b];
    let d2g = |e: usize, f: usize, a: usize, b: usize| g.d2g[(e * n + f) * nn + a * n + b];
    let d3g = |e: usize, f: usize, h: usize, a: usize, b: usize| g.d3g[((e * n + f) * n + h) * nn + a * n + b];
    for d in 0..n {
        for a in 0..n {
            for b in 0..n {
                let k = (d * n + a) * n + b;
                f0[k] = 0.5 * (dg(a, d, b) + dg(b, d, a) - dg(d, a, b));
                for e in 0..n {
                    f1[e * n3 + k] = 0.5 * (d2g(e, a, d, b) + d2g(e, b, d, a) - d2g(e, d, a, b));
                    for f in 0..n {
                        f2[(e * n + f) * n3 + k] =
                            0.5 * (d3g(e, f, a, d, b) + d3g(e, f, b, d, a) - d3g(e, f, d, a, b));
                    }
                }
            }
        }
    }
    let gi = |c: usize, d: usize| inv.gi[c * n + d];
    let dgi = |e: usize, c: usize, d: usize| inv.dgi[e * nn + c * n + d];
    let d2gi = |e: usize, f: usize, c: usize, d: usize| inv.d2gi[(e * n + f) * nn + c * n + d];
    let mut gamma = vec![0.0; n3];
    let mut dgamma = vec![0.0; n * n3];
    let mut d2gamma = vec![0.0; nn * n3];
    for c in 0..n {
        for a in 0..n {
            for b in 0..n {
                let k = (c * n + a) * n + b;
                let mut s = 0.0;
                for d in 0..n {
                    let kd = (d * n + a) * n + b;
                    s += gi(c, d) * f0[kd];
                }
                gamma[k] = s;
                for e in 0..n {
                    let mut s = 0.0;
                    for d in 0..n {
                        let kd = (d * n + a) * n + b;
                        s += dgi(e, c, d) * f0[kd] + gi(c, d) * f1[e * n3 + kd];
                    }
                    dgamma[e * n3 + k] = s;
                    for f in 0..n {
                        let mut s = 0.0;
                        for d in 0..n {
                            let kd = (d * n + a) * n + b;
                            s += d2gi(e, f, c, d) * f0[kd]
                                + dgi(e, c, d) * f1[f * n3 + kd]
                                + dgi(f, c, d) * f1[e * n3 + kd]
                                + gi(c, d) * f2[(e * n + f) * n3 + kd];
                        }
                        d2gamma[(e * n + f) * n3 + k] = s;
                    }
                }
            }
        }
    }
    Ok(ConnectionJet { n, x: Vec::new(), order: 2, gamma, dgamma, d2gamma })
}

// ---------------------------------------------------------------------------
// Weighted tensors and covariant differentiation

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Idx {
    Up,
    Down,
}

/// Tensor components at a point with optional first and second partials.
/// Derivative layout puts derivative indices first: `d1[e][comp]`, `d2[e][f][comp]`.
#[derive(Clone, Debug)]
pub struct TensorJet {
    pub n: usize,
    pub pattern: Vec<Idx>,
    pub weight: f64,
    pub v: Vec<f64>,
    pub d1: Option<Vec<f64>>,
    pub d2: Option<Vec<f64>>,
}

impl TensorJet {
    pub fn from_jet(j: &Jet, pattern: Vec<Idx>, weight: f64) -> Self {
        TensorJet {
            n: j.n,
            pattern,
            weight,
            v: j.value.clone(),
            d1: if j.order >= 1 { Some(j.d1.clone()) } else { None },
            d2: if j.order >= 2 { Some(j.d2.clone()) } else { None },
        }
    }

    pub fn of_field<F: Field>(f: &F, x: &[f64], pattern: Vec<Idx>, order: usize) -> Result<Self> {
        let j = eval_jet(f, x, order, None)?;
        Ok(Self::from_jet(&j, pattern, f.weight()))
    }

    pub fn constant(n: usize, pattern: Vec<Idx>, weight: f64, v: Vec<f64>) -> Self {
        let len = v.len();
        TensorJet { n, pattern, weight, v, d1: Some(vec![0.0; n * len]), d2: Some(vec![0.0; n * n * len]) }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// `∇_e T` with the leading index `e`; weights act through `w·γ_e`.
/// If `t` carries second partials and the connection its first partials,
/// the result carries first partials, so `nabla` can be applied twice.
pub fn nabla(c: &ConnectionJet, t: &TensorJet) -> Result<TensorJet> {
    let n = c.n;
    let d1 = t.d1.as_ref().ok_or_else(|| GeomError::InvalidArgument("tensor jet lacks first partials".into()))?;
    let len = t.v.len();
    let rank = t.pattern.len();
    debug_assert_eq!(len, n.pow(rank as u32));
    let gt = c.gamma_trace();
    let strides: Vec<usize> = (0..rank).map(|r| n.pow((rank - 1 - r) as u32)).collect();
    let w = t.weight;

    let mut v = vec![0.0; n * len];
    let want_d = t.d2.is_some() && c.order >= 1 && !c.dgamma.is_empty();
    let mut dv = if want_d { vec![0.0; n * n * len] } else { Vec::new() };
    let dgt = if want_d { c.dgamma_trace() } else { Vec::new() };

    for e in 0..n {
        for k in 0..len {
            let mut s = d1[e * len + k] + w * gt[e] * t.v[k];
            for r in 0..rank {
                let ir = (k / strides[r]) % n;
                let base = k - ir * strides[r];
                for q in 0..n {
                    let kq = base + q * strides[r];
                    match t.pattern[r] {
                        Idx::Up => s += c.g(ir, e, q) * t.v[kq],
                        Idx::Down => s -= c.g(q, e, ir) * t.v[kq],
                    }
                }
            }
            v[e * len + k] = s;
            if want_d {
                let d2 = t.d2.as_ref().unwrap();
                for f in 0..n {
                    let mut s = d2[(f * n + e) * len + k]
                        + w * (dgt[f * n + e] * t.v[k] + gt[e] * d1[f * len + k]);
                    for r in 0..rank {
                        let ir = (k / strides[r]) % n;
                        let base = k - ir * strides[r];
                        for q in 0..n {
                            let kq = base + q * strides[r];
                            match t.pattern[r] {
                                Idx::Up => {
                                    s += c.dg(f, ir, e, q) * t.v[kq] + c.g(ir, e, q) * d1[f * len + kq]
                                }
                                Idx::Down => {
                                    s -= c.dg(f, q, e, ir) * t.v[kq] + c.g(q, e, ir) * d1[f * len + kq]
                                }
                            }
                        }
                    }
                    dv[(f * n + e) * len + k] = s;
                }
            }
        }
    }
    let mut pattern = vec![Idx::Down];
    pattern.extend_from_slice(&t.pattern);
    Ok(TensorJet { n, pattern, weight: t.weight, v, d1: if want_d { Some(dv) } else { None }, d2: None })
}

// ---------------------------------------------------------------------------
// Invariants

#[derive(Clone, Debug, Default)]
pub struct AffineInvariants {
    pub n: usize,
    /// `R_{ab}^c_d`
    pub r: Vec<f64>,
    /// `∂_e R_{ab}^c_d`
    pub dr: Vec<f64>,
    pub ric: Vec<f64>,
    pub p: Vec<f64>,
    /// `∂_e P_{ab}`
    pub dp: Vec<f64>,
    pub w: Vec<f64>,
    /// `∂_e W_{ab}^c_d`
    pub dw: Vec<f64>,
    pub beta: Vec<f64>,
    /// `C_{abc} = ∇_a P_{bc} − ∇_b P_{ac}`
    pub c: Vec<f64>,
    /// `∇_e W_{ab}^c_d`
    pub nabla_w: Vec<f64>,
}

#[inline]
pub fn i4(n: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * n + b) * n + c) * n + d
}

#[inline]
pub fn i3(n: usize, a: usize, b: usize, c: usize) -> usize {
    (a * n + b) * n + c
}

impl AffineInvariants {
    #[inline]
    pub fn r(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.r[i4(self.n, a, b, c, d)]
    }
    #[inline]
    pub fn w(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.w[i4(self.n, a, b, c, d)]
    }
    #[inline]
    pub fn p(&self, a: usize, b: usize) -> f64 {
        self.p[a * self.n + b]
    }
    #[inline]
    pub fn cotton(&self, a: usize, b: usize, c: usize) -> f64 {
        self.c[i3(self.n, a, b, c)]
    }
}

fn riemann(c: &ConnectionJet) -> Vec<f64> {
    let n = c.n;
    let mut r = vec![0.0; n.pow(4)];
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                for d in 0..n {
                    let mut s = c.dg(a, cc, b, d) - c.dg(b, cc, a, d);
                    for e in 0..n {
                        s += c.g(cc, a, e) * c.g(e, b, d) - c.g(cc, b, e) * c.g(e, a, d);
                    }
                    r[i4(n, a, b, cc, d)] = s;
                }
            }
        }
    }
    r
}

fn riemann_partials(c: &ConnectionJet) -> Vec<f64> {
    let n = c.n;
    let n4 = n.pow(4);
    let mut dr = vec![0.0; n * n4];
    for f in 0..n {
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for d in 0..n {
                        let mut s = c.d2g(f, a, cc, b, d) - c.d2g(f, b, cc, a, d);
                        for e in 0..n {
                            s += c.dg(f, cc, a, e) * c.g(e, b, d) + c.g(cc, a, e) * c.dg(f, e, b, d)
                                - c.dg(f, cc, b, e) * c.g(e, a, d)
                                - c.g(cc, b, e) * c.dg(f, e, a, d);
                        }
                        dr[f * n4 + i4(n, a, b, cc, d)] = s;
                    }
                }
            }
        }
    }
    dr
}

fn ricci_of(n: usize, r: &[f64]) -> Vec<f64> {
    let mut ric = vec![0.0; n * n];
    for b in 0..n {
        for d in 0..n {
            ric[b * n + d] = (0..n).map(|c| r[i4(n, c, b, c, d)]).sum();
        }
    }
    ric
}

fn schouten_of(n1: usize, ric: &[f64]) -> Vec<f64> {
    let n = n1 as f64 - 1.0;
    let mut p = vec![0.0; n1 * n1];
    for a in 0..n1 {
        for b in 0..n1 {
            p[a * n1 + b] = ((n + 1.0) * ric[a * n1 + b] + ric[b * n1 + a]) / (n * (n + 2.0));
        }
    }
    p
}

fn weyl_of(n: usize, r: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut beta = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            beta[a * n + b] = -(p[a * n + b] - p[b * n + a]);
        }
    }
    let mut w = r.to_vec();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut s = 0.0;
                    if c == a {
                        s += p[b * n + d];
                    }
                    if c == b {
                        s -= p[a * n + d];
                    }
                    if c == d {
                        s += beta[a * n + b];
                    }
                    w[i4(n, a, b, c, d)] -= s;
                }
            }
        }
    }
    (w, beta)
}

/// Curvature and Ricci only; needs first partials of the connection.
pub fn curvature(c: &ConnectionJet) -> Result<AffineInvariants> {
    if c.order < 1 {
        return Err(GeomError::InvalidArgument("curvature needs first partials of the connection".into()));
    }
    let n = c.n;
    let r = riemann(c);
    let ric = ricci_of(n, &r);
    Ok(AffineInvariants { n, r, ric, ..Default::default() })
}

/// Schouten, Weyl and β from curvature; algebraic, first partials suffice.
pub fn algebraic_invariants(c: &ConnectionJet) -> Result<AffineInvariants> {
    let n = c.n;
    if n < 2 {
        return Err(GeomError::DimensionTooSmall(format!("dim M = {n}")));
    }
    let mut inv = curvature(c)?;
    inv.p = schouten_of(n, &inv.ric);
    let (w, beta) = weyl_of(n, &inv.r, &inv.p);
    inv.w = w;
    inv.beta = beta;
    Ok(inv)
}

/// All invariants including Cotton and `∇W`; needs second partials.
pub fn projective_invariants(c: &ConnectionJet) -> Result<AffineInvariants> {
    let n = c.n;
    if n < 2 {
        return Err(GeomError::DimensionTooSmall(format!("dim M = {n}")));
    }
    if c.order < 2 {
        return Err(GeomError::InvalidArgument("Cotton tensor needs second partials of the connection".into()));
    }
    let mut inv = algebraic_invariants(c)?;
    let n4 = n.pow(4);
    inv.dr = riemann_partials(c);
    let mut dp = Vec::with_capacity(n * n * n);
    let mut dw = Vec::with_capacity(n * n4);
    for e in 0..n {
        let dre = &inv.dr[e * n4..(e + 1) * n4];
        let dric = ricci_of(n, dre);
        let dpe = schouten_of(n, &dric);
        let (dwe, _) = weyl_of(n, dre, &dpe);
        dp.extend_from_slice(&dpe);
        dw.extend_from_slice(&dwe);
    }
    inv.dp = dp;
    inv.dw = dw;
    let pj = TensorJet {
        n,
        pattern: vec![Idx::Down, Idx::Down],
        weight: 0.0,
        v: inv.p.clone(),
        d1: Some(inv.dp.clone()),
        d2: None,
    };
    let np = nabla(c, &pj)?;
    let mut cot = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                cot[i3(n, a, b, cc)] = np.v[i3(n, a, b, cc)] - np.v[i3(n, b, a, cc)];
            }
        }
    }
    inv.c = cot;
    let wj = TensorJet {
        n,
        pattern: vec![Idx::Down, Idx::Down, Idx::Up, Idx::Down],
        weight: 0.0,
        v: inv.w.clone(),
        d1: Some(inv.dw.clone()),
        d2: None,
    };
    inv.nabla_w = nabla(c, &wj)?.v;
    Ok(inv)
}

/// `Γ̂ = Γ + δ^c_a Υ_b + δ^c_b Υ_a` with partials propagated from a jet of `Υ`.
pub fn projective_change(c: &ConnectionJet, upsilon: &Jet) -> ConnectionJet {
    let n = c.n;
    let mut out = c.clone();
    let n3 = n * n * n;
    for cc in 0..n {
        for a in 0..n {
            out.gamma[(cc * n + cc) * n + a] += upsilon.value[a];
            out.gamma[(cc * n + a) * n + cc] += upsilon.value[a];
            if c.order >= 1 && upsilon.order >= 1 {
                for e in 0..n {
                    out.dgamma[e * n3 + (cc * n + cc) * n + a] += upsilon.d1(e, a);
                    out.dgamma[e * n3 + (cc * n + a) * n + cc] += upsilon.d1(e, a);
                }
            }
            if c.order >= 2 && upsilon.order >= 2 {
                for e in 0..n {
                    for f in 0..n {
                        out.d2gamma[(e * n + f) * n3 + (cc * n + cc) * n + a] += upsilon.d2(e, f, a);
                        out.d2gamma[(e * n + f) * n3 + (cc * n + a) * n + cc] += upsilon.d2(e, f, a);
                    }
                }
            }
        }
    }
    out.order = c.order.min(upsilon.order);
    out
}

/// `∇_a σ = ∂_a σ + w γ_a σ` for a density of weight `w`.
pub fn density_derivative(c: &ConnectionJet, sigma: &Jet, w: f64) -> Vec<f64> {
    let gt = c.gamma_trace();
    (0..c.n).map(|a| sigma.d1(a, 0) + w * gt[a] * sigma.value[0]).collect()
}

/// `(L_ξ∇)_{ab}^c = ∇_{(a}∇_{b)}ξ^c + R_{d(a}^c_{b)} ξ^d`, stored `[a][b][c]`.
pub fn lie_derivative_connection(c: &ConnectionJet, xi: &TensorJet) -> Result<Vec<f64>> {
    let n = c.n;
    let inv = curvature(c)?;
    let nn = nabla(c, &nabla(c, xi)?)?;
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                let mut s = 0.5 * (nn.v[i3(n, a, b, cc)] + nn.v[i3(n, b, a, cc)]);
                for d in 0..n {
                    s += 0.5 * (inv.r(d, a, cc, b) + inv.r(d, b, cc, a)) * xi.v[d];
                }
                out[i3(n, a, b, cc)] = s;
            }
        }
    }
    Ok(out)
}

/// Max-abs residuals of the structural identities at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdentityResiduals {
    /// `R_[ab^c_d]`
    pub bianchi: f64,
    /// `R − (W + δ^c_a P_bd − δ^c_b P_ad + β_ab δ^c_d)`
    pub decomposition: f64,
    /// both traces of `W`
    pub weyl_trace: f64,
    /// `β + 2P_[ab]`
    pub beta: f64,
    /// `∇_c W_ab^c_d − (N−2) C_abd`
    pub differential_bianchi: f64,
}

/// Structural identities of the invariants; needs `projective_invariants` output.
pub fn identity_residuals(inv: &AffineInvariants) -> IdentityResiduals {
    let n = inv.n;
    let mut out = IdentityResiduals::default();
    let upd = |m: &mut f64, v: f64| *m = m.max(v.abs());
    let d = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
    for a in 0..n {
        for b in 0..n {
            upd(&mut out.beta, inv.beta[a * n + b] + inv.p(a, b) - inv.p(b, a));
            for c in 0..n {
                for e in 0..n {
                    upd(&mut out.bianchi, inv.r(a, b, c, e) + inv.r(b, e, c, a) + inv.r(e, a, c, b));
                    let rebuilt = inv.w(a, b, c, e) + d(c, a) * inv.p(b, e) - d(c, b) * inv.p(a, e)
                        + inv.beta[a * n + b] * d(c, e);
                    upd(&mut out.decomposition, inv.r(a, b, c, e) - rebuilt);
                }
                let t1: f64 = (0..n).map(|q| inv.w(a, q, q, c)).sum();
                let t2: f64 = (0..n).map(|q| inv.w(a, b, q, q)).sum();
                upd(&mut out.weyl_trace, t1);
                if c == 0 {
                    upd(&mut out.weyl_trace, t2);
                }
            }
        }
    }
    if !inv.nabla_w.is_empty() && !inv.c.is_empty() {
        let n4 = n.pow(4);
        for a in 0..n {
            for b in 0..n {
                for e in 0..n {
                    let div: f64 = (0..n).map(|c| inv.nabla_w[c * n4 + i4(n, a, b, c, e)]).sum();
                    upd(&mut out.differential_bianchi, div - (n as f64 - 2.0) * inv.cotton(a, b, e));
                }
            }
        }
    }
    out
}

/// `max|∇_a g_bc|` for a metric jet and a connection.
pub fn metricity_residual(g: &MetricJet, c: &ConnectionJet) -> Result<f64> {
    let n = g.n;
    let t = TensorJet { n, pattern: vec![Idx::Down, Idx::Down], weight: 0.0, v: g.g.clone(), d1: Some(g.dg.clone()), d2: None };
    Ok(linalg::max_abs(&nabla(c, &t)?.v))
}
