//! Projective tractor bundles in the splitting of a chosen connection.
//!
//! Storage order is fixed: slot 0 carries the `X`/`Y` component and slots
//! `1..=N` the `W`/`Z` components. Standard tractors are `(ρ, ν^b)`,
//! cotractors `(σ, μ_b)`. Matrix-valued kinds are stored row-major, so a
//! tractor 2-form has `H[0][1+b] = k_b`, `H[1+b][1+c] = μ_bc` and an adjoint
//! tractor has `M[0][0] = −φ^d_d`, `M[0][1+b] = ν_b`, `M[1+a][0] = ξ^a`,
//! `M[1+a][1+b] = φ^a_b`.
//!
//! Two independent routes are implemented for every kind: the connection
//! 1-form `A_a` acting on the matrix representation, and the component
//! formulas built on [`crate::affine::nabla`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::{algebraic_invariants, nabla, projective_invariants, AffineInvariants, ConnectionJet, Idx, TensorJet};
use crate::error::{GeomError, Result};
use crate::jets::{eval_jet, ChartBox, Field, Jet, Scalar};
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TractorKind {
    Standard,
    Dual,
    TwoForm,
    /// Symmetric bilinear forms `S²𝒯*` (tractor metrics).
    SymForm,
    Adjoint,
}

impl TractorKind {
    pub fn len(self, rank: usize) -> usize {
        match self {
            TractorKind::Standard | TractorKind::Dual => rank,
            _ => rank * rank,
        }
    }

    /// Weight of the tensor pieces of a weight-0 tractor of this kind.
    fn piece_weight(self) -> f64 {
        match self {
            TractorKind::Standard => -1.0,
            TractorKind::Dual => 1.0,
            TractorKind::TwoForm | TractorKind::SymForm => 2.0,
            TractorKind::Adjoint => 0.0,
        }
    }
}

/// A tractor at a point, with an optional overall density weight.
#[derive(Clone, Debug, PartialEq)]
pub struct TractorValue {
    pub kind: TractorKind,
    pub weight: f64,
    pub v: Vec<f64>,
}

/// The splitting determined by a connection field on a chart box.
#[derive(Clone, Debug)]
pub struct TractorSplitting<G> {
    pub connection: G,
    pub domain: ChartBox,
}

/// Everything the tractor connection needs at one point.
#[derive(Clone, Debug)]
pub struct TractorFrame {
    pub x: Vec<f64>,
    pub conn: ConnectionJet,
    pub inv: AffineInvariants,
    /// `A_a` for each direction `a`, `(N+1)²` row-major.
    pub a: Vec<Vec<f64>>,
    /// `∂_e A_a` as `da[e][a]`, present when built with second jets.
    pub da: Option<Vec<Vec<Vec<f64>>>>,
}

impl TractorFrame {
    pub fn dim(&self) -> usize {
        self.conn.n
    }
    pub fn rank(&self) -> usize {
        self.conn.n + 1
    }
}

/// `A_a` from `Γ`, `γ = Γ^b_{ba}/(N+1)` and `P`.
pub fn connection_form(c: &ConnectionJet, p: &[f64]) -> Vec<Vec<f64>> {
    let n = c.n;
    let r = n + 1;
    let gt = c.gamma_trace();
    (0..n)
        .map(|a| {
            let mut m = vec![0.0; r * r];
            m[0] = -gt[a];
            for b in 0..n {
                m[1 + b] = -p[a * n + b];
                m[(1 + b) * r] = if a == b { 1.0 } else { 0.0 };
                for cc in 0..n {
                    m[(1 + b) * r + 1 + cc] = c.g(b, a, cc) - if b == cc { gt[a] } else { 0.0 };
                }
            }
            m
        })
        .collect()
}

fn connection_form_partials(c: &ConnectionJet, dp: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let n = c.n;
    let r = n + 1;
    let dgt = c.dgamma_trace();
    (0..n)
        .map(|e| {
            (0..n)
                .map(|a| {
                    let mut m = vec![0.0; r * r];
                    m[0] = -dgt[e * n + a];
                    for b in 0..n {
                        m[1 + b] = -dp[(e * n + a) * n + b];
                        for cc in 0..n {
                            m[(1 + b) * r + 1 + cc] =
                                c.dg(e, b, a, cc) - if b == cc { dgt[e * n + a] } else { 0.0 };
                        }
                    }
                    m
                })
                .collect()
        })
        .collect()
}

impl<G: Field> TractorSplitting<G> {
    pub fn new(connection: G, domain: ChartBox) -> Self {
        TractorSplitting { connection, domain }
    }

    pub fn dim(&self) -> usize {
        self.connection.dim_in()
    }

    /// Full frame: second jets of `Γ`, all invariants and `∂A`.
    pub fn frame(&self, x: &[f64]) -> Result<TractorFrame> {
        let conn = ConnectionJet::from_field(&self.connection, x, 2, Some(&self.domain))?;
        let inv = projective_invariants(&conn)?;
        let a = connection_form(&conn, &inv.p);
        let da = Some(connection_form_partials(&conn, &inv.dp));
        Ok(TractorFrame { x: x.to_vec(), conn, inv, a, da })
    }

    /// Connection form only (first jets of `Γ`); used by transport.
    pub fn connection_form_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let conn = ConnectionJet::from_field(&self.connection, x, 1, Some(&self.domain))?;
        let inv = algebraic_invariants(&conn)?;
        Ok(connection_form(&conn, &inv.p))
    }
}

/// The zeroth-order part of the tractor connection: `∇_a v = ∂_a v + act(A_a, v)`.
pub fn act(kind: TractorKind, a: &[f64], v: &[f64], r: usize) -> Vec<f64> {
    match kind {
        TractorKind::Standard => linalg::matvec(a, v, r),
        TractorKind::Dual => {
            let at = linalg::transpose(a, r);
            linalg::matvec(&at, v, r).into_iter().map(|x| -x).collect()
        }
        TractorKind::TwoForm | TractorKind::SymForm => {
            let at = linalg::transpose(a, r);
            let l = linalg::matmul(&at, v, r);
            let rr = linalg::matmul(v, a, r);
            l.iter().zip(&rr).map(|(x, y)| -x - y).collect()
        }
        TractorKind::Adjoint => {
            let l = linalg::matmul(a, v, r);
            let rr = linalg::matmul(v, a, r);
            l.iter().zip(&rr).map(|(x, y)| x - y).collect()
        }
    }
}

fn check_len(kind: TractorKind, r: usize, got: usize) -> Result<()> {
    if kind.len(r) != got {
        return Err(GeomError::KindMismatch { expected: format!("{kind:?} with {} components", kind.len(r)), got: format!("{got} components") });
    }
    Ok(())
}

/// `∇^𝒯_a t` for all directions `a` via the connection form; `[a][comp]`.
/// `jet` holds the coordinate components of the tractor field and their
/// first partials; `weight` is an overall density weight.
pub fn tractor_derivative(f: &TractorFrame, kind: TractorKind, jet: &Jet, weight: f64) -> Result<Vec<Vec<f64>>> {
    let r = f.rank();
    check_len(kind, r, jet.m)?;
    if jet.order < 1 {
        return Err(GeomError::InvalidArgument("tractor derivative needs first partials".into()));
    }
    let gt = f.conn.gamma_trace();
    Ok((0..f.dim())
        .map(|a| {
            let alg = act(kind, &f.a[a], &jet.value, r);
            (0..jet.m).map(|k| jet.d1(a, k) + alg[k] + weight * gt[a] * jet.value[k]).collect()
        })
        .collect())
}

fn piece(n: usize, pattern: Vec<Idx>, weight: f64, v: Vec<f64>, d1: Vec<f64>) -> TensorJet {
    TensorJet { n, pattern, weight, v, d1: Some(d1), d2: None }
}

/// Same as [`tractor_derivative`], assembled from the component formulas of
/// each kind using covariant derivatives of the tensor pieces.
pub fn tractor_derivative_components(f: &TractorFrame, kind: TractorKind, jet: &Jet, weight: f64) -> Result<Vec<Vec<f64>>> {
    let n = f.dim();
    let r = n + 1;
    check_len(kind, r, jet.m)?;
    let c = &f.conn;
    let p = |a: usize, b: usize| f.inv.p[a * n + b];
    let w = weight + kind.piece_weight();
    let m = jet.m;
    // extract a sub-block (value, d1) by component index map
    let grab = |idx: &dyn Fn(usize) -> usize, len: usize| -> (Vec<f64>, Vec<f64>) {
        let v = (0..len).map(|k| jet.value[idx(k)]).collect();
        let mut d = Vec::with_capacity(n * len);
        for e in 0..n {
            for k in 0..len {
                d.push(jet.d1[e * m + idx(k)]);
            }
        }
        (v, d)
    };
    let mut out = vec![vec![0.0; m]; n];
    match kind {
        TractorKind::Standard | TractorKind::Dual => {
            let (s, ds) = grab(&|_| 0, 1);
            let (u, du) = grab(&|k| 1 + k, n);
            let pat = if kind == TractorKind::Standard { Idx::Up } else { Idx::Down };
            let ns = nabla(c, &piece(n, vec![], w, s.clone(), ds))?;
            let nu = nabla(c, &piece(n, vec![pat], w, u.clone(), du))?;
            for a in 0..n {
                if kind == TractorKind::Standard {
                    // (∇ν^b + ρδ^b_a, ∇ρ − P_ab ν^b)
                    out[a][0] = ns.v[a] - (0..n).map(|b| p(a, b) * u[b]).sum::<f64>();
                    for b in 0..n {
                        out[a][1 + b] = nu.v[a * n + b] + if a == b { s[0] } else { 0.0 };
                    }
                } else {
                    // (∇σ − μ_a, ∇μ_b + P_ab σ)
                    out[a][0] = ns.v[a] - u[a];
                    for b in 0..n {
                        out[a][1 + b] = nu.v[a * n + b] + p(a, b) * s[0];
                    }
                }
            }
        }
        TractorKind::TwoForm | TractorKind::SymForm => {
            let (rho, drho) = grab(&|_| 0, 1);
            let (k, dk) = grab(&|b| 1 + b, n);
            let (mu, dmu) = grab(&|q| (1 + q / n) * r + 1 + q % n, n * n);
            let nr = nabla(c, &piece(n, vec![], w, rho.clone(), drho))?;
            let nk = nabla(c, &piece(n, vec![Idx::Down], w, k.clone(), dk))?;
            let nm = nabla(c, &piece(n, vec![Idx::Down, Idx::Down], w, mu.clone(), dmu))?;
            let sym = kind == TractorKind::SymForm;
            for a in 0..n {
                // 2-form: (∇_a k_b − μ_ab, ∇_a μ_bc + 2P_a[b k_c]);
                // symmetric: ρ slot ∇ρ − 2k_a, k slot ∇k_b + P_ab ρ − μ_ab,
                // μ slot ∇μ_bc + P_ab k_c + P_ac k_b.
                if sym {
                    out[a][0] = nr.v[a] - 2.0 * k[a];
                }
                for b in 0..n {
                    let kb = nk.v[a * n + b] - mu[a * n + b] + if sym { p(a, b) * rho[0] } else { 0.0 };
                    out[a][1 + b] = kb;
                    out[a][(1 + b) * r] = if sym { kb } else { -kb };
                    for cc in 0..n {
                        let extra = if sym { p(a, b) * k[cc] + p(a, cc) * k[b] } else { p(a, b) * k[cc] - p(a, cc) * k[b] };
                        out[a][(1 + b) * r + 1 + cc] = nm.v[(a * n + b) * n + cc] + extra;
                    }
                }
            }
        }
        TractorKind::Adjoint => {
            let (xi, dxi) = grab(&|b| (1 + b) * r, n);
            let (nu, dnu) = grab(&|b| 1 + b, n);
            let (phi, dphi) = grab(&|q| (1 + q / n) * r + 1 + q % n, n * n);
            let tr: f64 = (0..n).map(|d| phi[d * n + d]).sum();
            let nx = nabla(c, &piece(n, vec![Idx::Up], w, xi.clone(), dxi))?;
            let nn = nabla(c, &piece(n, vec![Idx::Down], w, nu.clone(), dnu))?;
            let np = nabla(c, &piece(n, vec![Idx::Up, Idx::Down], w, phi.clone(), dphi))?;
            for cd in 0..n {
                let mut ntr = 0.0;
                for d in 0..n {
                    ntr += np.v[(cd * n + d) * n + d];
                }
                let mut corner = -ntr - nu[cd];
                for d in 0..n {
                    corner -= p(cd, d) * xi[d];
                }
                out[cd][0] = corner;
                for a in 0..n {
                    out[cd][(1 + a) * r] = nx.v[cd * n + a] - phi[a * n + cd] - if a == cd { tr } else { 0.0 };
                }
                for b in 0..n {
                    let mut s = nn.v[cd * n + b] - tr * p(cd, b);
                    for d in 0..n {
                        s -= p(cd, d) * phi[d * n + b];
                    }
                    out[cd][1 + b] = s;
                }
                for a in 0..n {
                    for b in 0..n {
                        out[cd][(1 + a) * r + 1 + b] = np.v[(cd * n + a) * n + b]
                            + p(cd, b) * xi[a]
                            + if a == cd { nu[b] } else { 0.0 };
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Convenience: derivative of a tractor field provider at `x`.
pub fn field_derivative<G: Field, F: Field>(
    s: &TractorSplitting<G>,
    frame: &TractorFrame,
    kind: TractorKind,
    field: &F,
) -> Result<Vec<Vec<f64>>> {
    let jet = eval_jet(field, &frame.x, 1, Some(&s.domain))?;
    tractor_derivative(frame, kind, &jet, field.weight())
}

/// Tractor curvature from `W` and `C`: `R_ab[1+c][1+d] = W_ab^c_d`,
/// `R_ab[0][1+d] = −C_abd`; indexed `[a*N + b]`.
pub fn tractor_curvature(f: &TractorFrame) -> Vec<Vec<f64>> {
    let n = f.dim();
    let r = n + 1;
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let mut m = vec![0.0; r * r];
            for d in 0..n {
                m[1 + d] = -f.inv.cotton(a, b, d);
                for cc in 0..n {
                    m[(1 + cc) * r + 1 + d] = f.inv.w(a, b, cc, d);
                }
            }
            out.push(m);
        }
    }
    out
}

/// `F_ab = ∂_a A_b − ∂_b A_a + [A_a, A_b]` from the connection form.
pub fn curvature_from_form(f: &TractorFrame) -> Result<Vec<Vec<f64>>> {
    let da = f.da.as_ref().ok_or_else(|| GeomError::InvalidArgument("frame lacks connection-form partials".into()))?;
    let n = f.dim();
    let r = n + 1;
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let ab = linalg::matmul(&f.a[a], &f.a[b], r);
            let ba = linalg::matmul(&f.a[b], &f.a[a], r);
            out.push((0..r * r).map(|k| da[a][b][k] - da[b][a][k] + ab[k] - ba[k]).collect());
        }
    }
    Ok(out)
}

/// Parallel tractor volume form: the derivative coefficient `−tr A_a` from the
/// connection form, and independently the weighted-density derivative
/// `(N+1)γ_a − Γ^b_{ab}` of the coordinate component. Both should vanish.
pub fn volume_form_derivative(f: &TractorFrame) -> (Vec<f64>, Vec<f64>) {
    let n = f.dim();
    let r = n + 1;
    let gt = f.conn.gamma_trace();
    let by_form = (0..n).map(|a| -(0..r).map(|i| f.a[a][i * r + i]).sum::<f64>()).collect();
    let by_density = (0..n)
        .map(|a| (n as f64 + 1.0) * gt[a] - (0..n).map(|b| f.conn.g(b, a, b)).sum::<f64>())
        .collect();
    (by_form, by_density)
}

/// Path through a chart, parameterised on `[0, 1]`.
#[derive(Clone, Debug)]
pub enum ChartPath {
    Segment { from: Vec<f64>, to: Vec<f64> },
    /// Closed rectangle in the `(i, j)` coordinate plane starting at `base`.
    Rectangle { base: Vec<f64>, i: usize, j: usize, hi: f64, hj: f64 },
    /// Closed circle of radius `radius` in the `(i, j)` plane around `center`.
    Circle { center: Vec<f64>, i: usize, j: usize, radius: f64 },
    /// Polygonal path through `vertices`, closed back to the first vertex when
    /// `closed`; each side takes an equal share of `[0, 1]`.
    Polyline { vertices: Vec<Vec<f64>>, closed: bool },
}

impl ChartPath {
    /// Position and velocity at parameter `s`.
    pub fn at(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        match self {
            ChartPath::Segment { from, to } => {
                let x = from.iter().zip(to).map(|(a, b)| a + s * (b - a)).collect();
                let v = from.iter().zip(to).map(|(a, b)| b - a).collect();
                (x, v)
            }
            ChartPath::Rectangle { base, i, j, hi, hj } => {
                let per = 2.0 * (hi.abs() + hj.abs());
                let t = s * per;
                let mut x = base.clone();
                let mut v = vec![0.0; base.len()];
                let (ai, aj) = (hi.abs(), hj.abs());
                if t <= ai {
                    x[*i] += hi.signum() * t;
                    v[*i] = hi.signum() * per;
                } else if t <= ai + aj {
                    x[*i] += hi;
                    x[*j] += hj.signum() * (t - ai);
                    v[*j] = hj.signum() * per;
                } else if t <= 2.0 * ai + aj {
                    x[*i] += hi - hi.signum() * (t - ai - aj);
                    x[*j] += hj;
                    v[*i] = -hi.signum() * per;
                } else {
                    x[*j] += hj - hj.signum() * (t - 2.0 * ai - aj);
                    v[*j] = -hj.signum() * per;
                }
                (x, v)
            }
            ChartPath::Polyline { vertices, closed } => {
                let m = if *closed { vertices.len() } else { vertices.len() - 1 };
                let k = ((s * m as f64).floor() as usize).min(m - 1);
                let t = s * m as f64 - k as f64;
                let (a, b) = (&vertices[k], &vertices[(k + 1) % m]);
                let x = a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect();
                let v = a.iter().zip(b).map(|(p, q)| m as f64 * (q - p)).collect();
                (x, v)
            }
            ChartPath::Circle { center, i, j, radius } => {
                let th = std::f64::consts::TAU * s;
                let mut x = center.clone();
                let mut v = vec![0.0; center.len()];
                x[*i] += radius * th.cos();
                x[*j] += radius * th.sin();
                v[*i] = -radius * std::f64::consts::TAU * th.sin();
                v[*j] = radius * std::f64::consts::TAU * th.cos();
                (x, v)
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            ChartPath::Segment { .. } => false,
            ChartPath::Polyline { closed, .. } => *closed,
            _ => true,
        }
    }

    /// Smooth pieces of the path. Rectangles split at their corners so that
    /// RK4 never steps across a jump in velocity.
    pub fn pieces(&self) -> Vec<ChartPath> {
        match self {
            ChartPath::Rectangle { base, i, j, hi, hj } => {
                let mut c = vec![base.clone(); 4];
                c[1][*i] += hi;
                c[2][*i] += hi;
                c[2][*j] += hj;
                c[3][*j] += hj;
                (0..4).map(|k| ChartPath::Segment { from: c[k].clone(), to: c[(k + 1) % 4].clone() }).collect()
            }
            ChartPath::Polyline { vertices, closed } => {
                let m = if *closed { vertices.len() } else { vertices.len() - 1 };
                (0..m).map(|k| ChartPath::Segment { from: vertices[k].clone(), to: vertices[(k + 1) % m].clone() }).collect()
            }
            p => vec![p.clone()],
        }
    }
}

/// Parallel transport by classical RK4 of `dt/ds = −act(A(γ(s))·γ'(s), t)`.
pub fn parallel_transport<G: Field>(
    s: &TractorSplitting<G>,
    t0: &TractorValue,
    path: &ChartPath,
    steps: usize,
) -> Result<TractorValue> {
    if steps < 16 {
        return Err(GeomError::InvalidArgument("parallel transport needs at least 16 steps".into()));
    }
    let r = s.dim() + 1;
    check_len(t0.kind, r, t0.v.len())?;
    let rhs = |path: &ChartPath, sp: f64, v: &[f64]| -> Result<Vec<f64>> {
        let (x, dx) = path.at(sp);
        s.domain.check(&x)?;
        let a = s.connection_form_at(&x)?;
        let mut am = vec![0.0; r * r];
        for (al, dxa) in a.iter().zip(&dx) {
            for k in 0..r * r {
                am[k] += al[k] * dxa;
            }
        }
        let mut out = act(t0.kind, &am, v, r);
        if t0.weight != 0.0 {
            let conn = ConnectionJet::from_field(&s.connection, &x, 0, Some(&s.domain))?;
            let gt = conn.gamma_trace();
            let g: f64 = gt.iter().zip(&dx).map(|(a, b)| a * b).sum();
            for (o, vi) in out.iter_mut().zip(v) {
                *o += t0.weight * g * vi;
            }
        }
        Ok(out.into_iter().map(|x| -x).collect())
    };
    let pieces = path.pieces();
    // each smooth piece gets an equal share of the steps
    let per = steps.div_ceil(pieces.len());
    let h = 1.0 / per as f64;
    let mut v = t0.v.clone();
    let axpy = |v: &[f64], k: &[f64], c: f64| -> Vec<f64> { v.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    for piece in &pieces {
        for i in 0..per {
            let s0 = i as f64 * h;
            let k1 = rhs(piece, s0, &v)?;
            let k2 = rhs(piece, s0 + 0.5 * h, &axpy(&v, &k1, 0.5 * h))?;
            let k3 = rhs(piece, s0 + 0.5 * h, &axpy(&v, &k2, 0.5 * h))?;
            let k4 = rhs(piece, s0 + h, &axpy(&v, &k3, h))?;
            for q in 0..v.len() {
                v[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
            }
        }
    }
    Ok(TractorValue { kind: t0.kind, weight: t0.weight, v })
}

/// Transport matrix of standard tractors along a path: columns are the
/// transported standard basis. All columns are integrated together.
pub fn transport_matrix<G: Field>(s: &TractorSplitting<G>, path: &ChartPath, steps: usize) -> Result<Vec<f64>> {
    if steps < 16 {
        return Err(GeomError::InvalidArgument("parallel transport needs at least 16 steps".into()));
    }
    let r = s.dim() + 1;
    // dU/ds = −A(γ)·γ' U
    let rhs = |path: &ChartPath, sp: f64, u: &[f64]| -> Result<Vec<f64>> {
        let (x, dx) = path.at(sp);
        s.domain.check(&x)?;
        let a = s.connection_form_at(&x)?;
        let mut am = vec![0.0; r * r];
        for (al, dxa) in a.iter().zip(&dx) {
            for k in 0..r * r {
                am[k] -= al[k] * dxa;
            }
        }
        Ok(linalg::matmul(&am, u, r))
    };
    let pieces = path.pieces();
    let per = steps.div_ceil(pieces.len());
    let h = 1.0 / per as f64;
    let mut u = linalg::identity(r);
    let axpy = |v: &[f64], k: &[f64], c: f64| -> Vec<f64> { v.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    for piece in &pieces {
        for i in 0..per {
            let s0 = i as f64 * h;
            let k1 = rhs(piece, s0, &u)?;
            let k2 = rhs(piece, s0 + 0.5 * h, &axpy(&u, &k1, 0.5 * h))?;
            let k3 = rhs(piece, s0 + 0.5 * h, &axpy(&u, &k2, 0.5 * h))?;
            let k4 = rhs(piece, s0 + h, &axpy(&u, &k3, h))?;
            for q in 0..u.len() {
                u[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
            }
        }
    }
    Ok(u)
}

/// Seeded oblique four-vertex paths inside the chart box, closed into loops
/// when `closed`. Unlike coordinate rectangles they avoid symmetry directions.
/// On a projectively flat structure the leading RK4 error partially cancels
/// around a closed loop, so order checks use the open paths.
pub fn oblique_paths(domain: &ChartBox, count: usize, seed: u64, closed: bool) -> Vec<ChartPath> {
    let n = domain.lo.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let center: Vec<f64> = (0..n).map(|d| domain.lo[d] + (domain.hi[d] - domain.lo[d]) * rng.gen_range(0.3..0.7)).collect();
            let vertices = (0..4)
                .map(|_| (0..n).map(|d| center[d] + (domain.hi[d] - domain.lo[d]) * rng.gen_range(-0.25..0.25)).collect())
                .collect();
            ChartPath::Polyline { vertices, closed }
        })
        .collect()
}

/// Seeded rectangular loops inside the chart box, each returned together
/// with its holonomy matrix on standard tractors.
pub fn holonomy_sample<G: Field>(
    s: &TractorSplitting<G>,
    loops: usize,
    seed: u64,
    steps: usize,
) -> Result<Vec<(ChartPath, Vec<f64>)>> {
    if loops == 0 {
        return Err(GeomError::InvalidArgument("need at least one loop".into()));
    }
    let n = s.dim();
    if n < 2 {
        return Err(GeomError::DimensionTooSmall("holonomy loops need two coordinate directions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = &s.domain;
    let mut out = Vec::with_capacity(loops);
    for _ in 0..loops {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let mut base = Vec::with_capacity(n);
        for d in 0..n {
            let w = b.hi[d] - b.lo[d];
            base.push(b.lo[d] + w * (0.1 + 0.4 * rng.gen::<f64>()));
        }
        let hi = (b.hi[i] - b.lo[i]) * (0.1 + 0.3 * rng.gen::<f64>());
        let hj = (b.hi[j] - b.lo[j]) * (0.1 + 0.3 * rng.gen::<f64>());
        let path = ChartPath::Rectangle { base, i, j, hi, hj };
        let m = transport_matrix(s, &path, steps)?;
        out.push((path, m));
    }
    Ok(out)
}

/// `∇^prol_a(k, μ) = (∇_a k_b − μ_ab, ∇_a μ_bc + 2P_a[b k_c] − W_bc^d_a k_d)`
/// for weight-2 `k` and `μ`; returned as `([a][b], [a][b][c])`.
pub fn prolongation_derivative(f: &TractorFrame, k: &Jet, mu: &Jet) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = f.dim();
    let c = &f.conn;
    let kt = TensorJet::from_jet(k, vec![Idx::Down], 2.0);
    let mt = TensorJet::from_jet(mu, vec![Idx::Down, Idx::Down], 2.0);
    let nk = nabla(c, &TensorJet { d2: None, ..kt })?;
    let nm = nabla(c, &TensorJet { d2: None, ..mt })?;
    let p = |a: usize, b: usize| f.inv.p[a * n + b];
    let mut first = vec![0.0; n * n];
    let mut second = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            first[a * n + b] = nk.v[a * n + b] - mu.value[a * n + b];
            for cc in 0..n {
                let mut s = nm.v[(a * n + b) * n + cc] + p(a, b) * k.value[cc] - p(a, cc) * k.value[b];
                for d in 0..n {
                    s -= f.inv.w(b, cc, d, a) * k.value[d];
                }
                second[(a * n + b) * n + cc] = s;
            }
        }
    }
    Ok((first, second))
}

/// Splitting change for a projective change by `Υ`, on standard tractors:
/// `ν̂ = ν`, `ρ̂ = ρ − Υ_b ν^b`.
pub fn resplit_matrix(upsilon: &[f64]) -> Vec<f64> {
    let n = upsilon.len();
    let r = n + 1;
    let mut t = linalg::identity(r);
    for b in 0..n {
        t[1 + b] = -upsilon[b];
    }
    t
}

/// Any tractor value re-expressed in the splitting of `∇ + Υ`: standard
/// tractors transform by `T = resplit_matrix(Υ)`, cotractors by `T^{-T}`,
/// forms by `T^{-T}·T^{-1}` and adjoint tractors by conjugation.
pub fn resplit_value(kind: TractorKind, upsilon: &[f64], v: &[f64]) -> Vec<f64> {
    let r = upsilon.len() + 1;
    let t = resplit_matrix(upsilon);
    let neg: Vec<f64> = upsilon.iter().map(|u| -u).collect();
    let ti = resplit_matrix(&neg);
    let tit = linalg::transpose(&ti, r);
    match kind {
        TractorKind::Standard => linalg::matvec(&t, v, r),
        TractorKind::Dual => linalg::matvec(&tit, v, r),
        TractorKind::TwoForm | TractorKind::SymForm => linalg::matmul(&linalg::matmul(&tit, v, r), &ti, r),
        TractorKind::Adjoint => linalg::matmul(&linalg::matmul(&t, v, r), &ti, r),
    }
}

/// A generic matrix-valued field forced into the bundle of `kind`:
/// antisymmetrised for 2-forms, symmetrised for symmetric forms and made
/// trace-free for adjoint tractors. Vector kinds pass through unchanged.
#[derive(Clone, Debug)]
pub struct InBundle<F> {
    pub kind: TractorKind,
    pub field: F,
}

impl<F: Field> Field for InBundle<F> {
    fn dim_in(&self) -> usize {
        self.field.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.field.dim_out()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let v = self.field.eval(x);
        let r = self.field.dim_in() + 1;
        let t = |i: usize, j: usize| v[j * r + i];
        match self.kind {
            TractorKind::Standard | TractorKind::Dual => v,
            TractorKind::TwoForm => (0..r * r).map(|k| (v[k] - t(k / r, k % r)) * 0.5).collect(),
            TractorKind::SymForm => (0..r * r).map(|k| (v[k] + t(k / r, k % r)) * 0.5).collect(),
            TractorKind::Adjoint => {
                let tr = (1..r).fold(v[0], |acc, i| acc + v[i * r + i]) / r as f64;
                (0..r * r).map(|k| if k / r == k % r { v[k] - tr } else { v[k] }).collect()
            }
        }
    }
    fn weight(&self) -> f64 {
        self.field.weight()
    }
}

/// A standard tractor field re-expressed in the splitting of `∇ + Υ`.
#[derive(Clone, Debug)]
pub struct Resplit<F, U> {
    pub tractor: F,
    pub upsilon: U,
}

impl<F: Field, U: Field> Field for Resplit<F, U> {
    fn dim_in(&self) -> usize {
        self.tractor.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.tractor.dim_out()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut t = self.tractor.eval(x);
        let u = self.upsilon.eval(x);
        for b in 0..u.len() {
            t[0] = t[0] - u[b] * t[1 + b];
        }
        t
    }
    fn weight(&self) -> f64 {
        self.tractor.weight()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::FlatConnection;

    #[test]
    fn flat_constant_x_slot_derivative() {
        let s = TractorSplitting::new(FlatConnection(3), ChartBox::cube(3, 1.0));
        let f = s.frame(&[0.1, 0.2, 0.3]).unwrap();
        let jet = Jet { order: 1, n: 3, m: 4, value: vec![1.0, 0.0, 0.0, 0.0], d1: vec![0.0; 12], d2: vec![], d3: vec![] };
        let d = tractor_derivative(&f, TractorKind::Standard, &jet, 0.0).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(d[a][1 + b], if a == b { 1.0 } else { 0.0 });
            }
            assert_eq!(d[a][0], 0.0);
        }
        let e = tractor_derivative_components(&f, TractorKind::Standard, &jet, 0.0).unwrap();
        assert_eq!(d, e);
    }

    #[test]
    fn kind_mismatch_reported() {
        let s = TractorSplitting::new(FlatConnection(2), ChartBox::cube(2, 1.0));
        let f = s.frame(&[0.0, 0.0]).unwrap();
        let jet = Jet { order: 1, n: 2, m: 4, value: vec![0.0; 4], d1: vec![0.0; 8], d2: vec![], d3: vec![] };
        assert!(matches!(tractor_derivative(&f, TractorKind::Standard, &jet, 0.0), Err(GeomError::KindMismatch { .. })));
    }

    #[test]
    fn zero_length_transport_is_identity() {
        let s = TractorSplitting::new(FlatConnection(2), ChartBox::cube(2, 1.0));
        let t0 = TractorValue { kind: TractorKind::Standard, weight: 0.0, v: vec![1.0, 2.0, 3.0] };
        let p = ChartPath::Segment { from: vec![0.1, 0.1], to: vec![0.1, 0.1] };
        assert_eq!(parallel_transport(&s, &t0, &p, 16).unwrap(), t0);
    }
}
