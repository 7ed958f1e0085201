//! Descent along a nowhere-vanishing symmetry `k`: adapted scales, the splitting
//! `TM = ⟨k⟩ ⊕ H`, the induced complex structure and connection on a local leaf
//! space, the induced Kähler metric of a Sasaki structure, the c-projective Rho
//! tensor and the defining equations of the Fefferman-type connection.
//!
//! Leaf charts are coordinate slices: `k` must be tangent to the coordinate
//! lines of one coordinate `s`, and the leaf projection drops `s`.

use crate::affine::{curvature, ConnectionJet, LeviCivita};
use crate::bgg::schouten_generic;
use crate::error::{GeomError, Result};
use crate::jets::{eval_jet, fd_derivative, value_and_partials, Field, Jet, Scalar};
use crate::linalg;
use crate::tractor::{TractorFrame, TractorSplitting};

/// A coordinate slice `{x_s = value}` used as a local leaf space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafChart {
    /// Dimension of the total space.
    pub dim: usize,
    pub coord: usize,
    pub value: f64,
}

impl LeafChart {
    pub fn new(dim: usize, coord: usize, value: f64) -> Self {
        LeafChart { dim, coord, value }
    }

    pub fn leaf_dim(&self) -> usize {
        self.dim - 1
    }

    /// Total-space coordinate index of the `j`-th slice coordinate.
    pub fn coord_of(&self, j: usize) -> usize {
        if j < self.coord { j } else { j + 1 }
    }

    pub fn embed<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let mut x = y.to_vec();
        x.insert(self.coord, S::cst(self.value));
        x
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        y.remove(self.coord);
        y
    }

    /// `Tπ`: drop the slice coordinate of a tangent vector.
    pub fn push<S: Scalar>(&self, v: &[S]) -> Vec<S> {
        self.project_generic(v)
    }

    fn project_generic<S: Scalar>(&self, v: &[S]) -> Vec<S> {
        let mut y = v.to_vec();
        y.remove(self.coord);
        y
    }

    /// `k` must cross the slice and be tangent to the `s`-coordinate lines.
    pub fn check(&self, k: &[f64]) -> Result<()> {
        let scale = linalg::max_abs(k).max(1e-300);
        if k[self.coord].abs() <= 1e-10 * scale.max(1.0) {
            return Err(GeomError::NonTransverseSlice);
        }
        if (0..self.dim).any(|i| i != self.coord && k[i].abs() > 1e-10 * scale) {
            return Err(GeomError::InvalidArgument("k is not tangent to the slice coordinate lines".into()));
        }
        Ok(())
    }
}

/// A choice of complement `H = ker ν` to `k`.
pub trait Horizontal {
    fn dim(&self) -> usize;
    /// `(ν, k)` at `x`.
    fn nu_and_k<S: Scalar>(&self, x: &[S]) -> (Vec<S>, Vec<S>);
}

/// `ν_b = −P_bc k^c` for a connection.
#[derive(Clone, Debug)]
pub struct ConnectionHorizontal<G, K> {
    pub connection: G,
    pub k: K,
}

impl<G: Field, K: Field> Horizontal for ConnectionHorizontal<G, K> {
    fn dim(&self) -> usize {
        self.k.dim_in()
    }
    fn nu_and_k<S: Scalar>(&self, x: &[S]) -> (Vec<S>, Vec<S>) {
        let n = x.len();
        let (g, dg) = value_and_partials(&self.connection, x);
        let p = schouten_generic(n, &g, &dg);
        let k = self.k.eval(x);
        let nu = (0..n)
            .map(|b| {
                let mut s = S::zero();
                for c in 0..n {
                    s = s - p[b * n + c] * k[c];
                }
                s
            })
            .collect();
        (nu, k)
    }
}

/// `ν_b = g_bc k^c`, the metric complement.
#[derive(Clone, Debug)]
pub struct MetricHorizontal<M, K> {
    pub metric: M,
    pub k: K,
}

impl<M: Field, K: Field> Horizontal for MetricHorizontal<M, K> {
    fn dim(&self) -> usize {
        self.k.dim_in()
    }
    fn nu_and_k<S: Scalar>(&self, x: &[S]) -> (Vec<S>, Vec<S>) {
        let n = x.len();
        let g = self.metric.eval(x);
        let k = self.k.eval(x);
        let nu = (0..n)
            .map(|b| {
                let mut s = S::zero();
                for c in 0..n {
                    s = s + g[b * n + c] * k[c];
                }
                s
            })
            .collect();
        (nu, k)
    }
}

/// Horizontal lifts `ξ_j = e_{s(j)} − (ν(e_{s(j)})/ν(k)) k` of the slice coordinate fields.
fn lifts<S: Scalar>(chart: &LeafChart, nu: &[S], k: &[S]) -> Vec<Vec<S>> {
    let n = chart.dim;
    let mut nk = S::zero();
    for c in 0..n {
        nk = nk + nu[c] * k[c];
    }
    (0..n - 1)
        .map(|j| {
            let c = chart.coord_of(j);
            let lam = nu[c] / nk;
            let mut v: Vec<S> = k.iter().map(|kv| -(*kv * lam)).collect();
            v[c] = v[c] + 1.0;
            v
        })
        .collect()
}

/// The lifts `ξ_j` as a field on the total space, `[j][a]`.
#[derive(Clone, Debug)]
pub struct LiftField<D> {
    pub horizontal: D,
    pub chart: LeafChart,
}

impl<D: Horizontal> Field for LiftField<D> {
    fn dim_in(&self) -> usize {
        self.chart.dim
    }
    fn dim_out(&self) -> usize {
        self.chart.dim * (self.chart.dim - 1)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (nu, k) = self.horizontal.nu_and_k(x);
        lifts(&self.chart, &nu, &k).into_iter().flatten().collect()
    }
}

/// `∇_b k^a` (stored `[a][b]`) for a connection field and a vector field.
fn nabla_k<S: Scalar, G: Field, K: Field>(connection: &G, k: &K, x: &[S]) -> Vec<S> {
    let n = x.len();
    let g = connection.eval(x);
    let (kv, dk) = value_and_partials(k, x);
    let mut out = vec![S::zero(); n * n];
    for a in 0..n {
        for b in 0..n {
            let mut s = dk[b * n + a];
            for c in 0..n {
                s = s + g[(a * n + b) * n + c] * kv[c];
            }
            out[a * n + b] = s;
        }
    }
    out
}

/// `J̃` on the slice: `J̃ẽ_j = Tπ(∇_{ξ_j} k)`, stored `[i][j] = J̃^i_j`.
#[derive(Clone, Debug)]
pub struct LeafComplexStructure<G, K> {
    pub connection: G,
    pub k: K,
    pub chart: LeafChart,
}

impl<G: Field + Clone, K: Field + Clone> Field for LeafComplexStructure<G, K> {
    fn dim_in(&self) -> usize {
        self.chart.leaf_dim()
    }
    fn dim_out(&self) -> usize {
        self.chart.leaf_dim().pow(2)
    }
    fn eval<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let x = self.chart.embed(y);
        let n = x.len();
        let h = ConnectionHorizontal { connection: self.connection.clone(), k: self.k.clone() };
        let (nu, k) = h.nu_and_k(&x);
        let xi = lifts(&self.chart, &nu, &k);
        let nk = nabla_k(&self.connection, &self.k, &x);
        let l = n - 1;
        let mut out = vec![S::zero(); l * l];
        for (j, v) in xi.iter().enumerate() {
            let w: Vec<S> = (0..n)
                .map(|a| {
                    let mut s = S::zero();
                    for b in 0..n {
                        s = s + nk[a * n + b] * v[b];
                    }
                    s
                })
                .collect();
            for (i, wi) in self.chart.push(&w).into_iter().enumerate() {
                out[i * l + j] = wi;
            }
        }
        out
    }
}

/// The descended connection `Γ̃^k_ij = Tπ(∇_{ξ_i} ξ_j)^k` on the slice.
#[derive(Clone, Debug)]
pub struct LeafConnection<G, K> {
    pub connection: G,
    pub k: K,
    pub chart: LeafChart,
}

impl<G: Field + Clone, K: Field + Clone> Field for LeafConnection<G, K> {
    fn dim_in(&self) -> usize {
        self.chart.leaf_dim()
    }
    fn dim_out(&self) -> usize {
        self.chart.leaf_dim().pow(3)
    }
    fn eval<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let x = self.chart.embed(y);
        let n = x.len();
        let l = n - 1;
        let lf = LiftField {
            horizontal: ConnectionHorizontal { connection: self.connection.clone(), k: self.k.clone() },
            chart: self.chart,
        };
        let (xi, dxi) = value_and_partials(&lf, &x);
        let g = self.connection.eval(&x);
        let len = n * l;
        let mut out = vec![S::zero(); l * l * l];
        for i in 0..l {
            for j in 0..l {
                let mut v = vec![S::zero(); n];
                for (a, va) in v.iter_mut().enumerate() {
                    let mut s = S::zero();
                    for b in 0..n {
                        s = s + xi[i * n + b] * dxi[b * len + j * n + a];
                        for c in 0..n {
                            s = s + g[(a * n + b) * n + c] * xi[i * n + b] * xi[j * n + c];
                        }
                    }
                    *va = s;
                }
                for (kk, w) in self.chart.push(&v).into_iter().enumerate() {
                    out[(kk * l + i) * l + j] = w;
                }
            }
        }
        out
    }
}

/// Residuals `(Γ̃′ − c-projective change of Γ̃ by Υ̃, J̃′ − J̃)` at a leaf point, where
/// `changed = base + Υ` with `Υ` the pullback of the leaf 1-form `Υ̃` (so `Υ(k) = 0`).
/// The c-projective change is `Γ̃ + δΥ̃ + δΥ̃ − (Υ̃∘J̃)J̃ − (Υ̃∘J̃)J̃`.
pub fn c_projective_residual<G: Field + Clone, H: Field + Clone, K: Field + Clone>(
    base: &G,
    changed: &H,
    k: &K,
    chart: LeafChart,
    upsilon: &[f64],
    y: &[f64],
) -> (f64, f64) {
    let l = chart.leaf_dim();
    let j = LeafComplexStructure { connection: base.clone(), k: k.clone(), chart }.eval(y);
    let j2 = LeafComplexStructure { connection: changed.clone(), k: k.clone(), chart }.eval(y);
    let g1 = LeafConnection { connection: base.clone(), k: k.clone(), chart }.eval(y);
    let g2 = LeafConnection { connection: changed.clone(), k: k.clone(), chart }.eval(y);
    let uj: Vec<f64> = (0..l).map(|b| (0..l).map(|c| upsilon[c] * j[c * l + b]).sum()).collect();
    let d = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
    let mut worst = 0.0f64;
    for kk in 0..l {
        for a in 0..l {
            for b in 0..l {
                let want = g1[(kk * l + a) * l + b] + upsilon[a] * d(kk, b) + upsilon[b] * d(kk, a)
                    - uj[a] * j[kk * l + b]
                    - uj[b] * j[kk * l + a];
                worst = worst.max((g2[(kk * l + a) * l + b] - want).abs());
            }
        }
    }
    (worst, linalg::max_abs_diff(&j, &j2))
}

/// `g̃_ij = g(ξ_i, ξ_j)` with lifts into `ker g(k, ·)`.
#[derive(Clone, Debug)]
pub struct InducedMetric<M, K> {
    pub metric: M,
    pub k: K,
    pub chart: LeafChart,
}

impl<M: Field + Clone, K: Field + Clone> Field for InducedMetric<M, K> {
    fn dim_in(&self) -> usize {
        self.chart.leaf_dim()
    }
    fn dim_out(&self) -> usize {
        self.chart.leaf_dim().pow(2)
    }
    fn eval<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let x = self.chart.embed(y);
        let n = x.len();
        let l = n - 1;
        let h = MetricHorizontal { metric: self.metric.clone(), k: self.k.clone() };
        let (nu, k) = h.nu_and_k(&x);
        let xi = lifts(&self.chart, &nu, &k);
        let g = self.metric.eval(&x);
        let mut out = vec![S::zero(); l * l];
        for i in 0..l {
            for j in 0..l {
                let mut s = S::zero();
                for a in 0..n {
                    for b in 0..n {
                        s = s + g[a * n + b] * xi[i][a] * xi[j][b];
                    }
                }
                out[i * l + j] = s;
            }
        }
        out
    }
}

/// `ω̃_ij = g̃_ik J̃^k_j` as a field on the slice.
#[derive(Clone, Debug)]
pub struct InducedKahlerForm<M, K> {
    pub metric: M,
    pub k: K,
    pub chart: LeafChart,
}

impl<M: Field + Clone, K: Field + Clone> Field for InducedKahlerForm<M, K> {
    fn dim_in(&self) -> usize {
        self.chart.leaf_dim()
    }
    fn dim_out(&self) -> usize {
        self.chart.leaf_dim().pow(2)
    }
    fn eval<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let l = y.len();
        let g = InducedMetric { metric: self.metric.clone(), k: self.k.clone(), chart: self.chart }.eval(y);
        let j = LeafComplexStructure { connection: LeviCivita(self.metric.clone()), k: self.k.clone(), chart: self.chart }
            .eval(y);
        let mut out = vec![S::zero(); l * l];
        for a in 0..l {
            for b in 0..l {
                let mut s = S::zero();
                for c in 0..l {
                    s = s + g[a * l + c] * j[c * l + b];
                }
                out[a * l + b] = s;
            }
        }
        out
    }
}

/// `∇_c k^c` for a vector field jet.
pub fn k_adapted_residual(c: &ConnectionJet, k: &Jet) -> f64 {
    let n = c.n;
    (0..n).map(|a| k.d1(a, a) + (0..n).map(|b| c.g(a, a, b) * k.value[b]).sum::<f64>()).sum()
}

/// `TM = ⟨k⟩ ⊕ ker ν` data at one point.
#[derive(Clone, Debug)]
pub struct LeafSplit {
    pub nu: Vec<f64>,
    /// Orthonormal basis of `H = ker ν`.
    pub h_basis: Vec<Vec<f64>>,
    /// `∇_b k^a`, `[a][b]`.
    pub j: Vec<f64>,
    /// Residuals of `k^c∇_ck^a = 0`, `∇_ck^a∇_bk^c − k^aP_bck^c = −δ`,
    /// `P_cdk^ck^d = 1`, `P_cdk^d∇_bk^c = 0`.
    pub system: [f64; 4],
    /// `J_H² + id` on `H`.
    pub j_square: f64,
}

impl LeafSplit {
    /// Projection onto `H` along `k`: `v − (ν(v)/ν(k)) k`.
    pub fn to_h(&self, v: &[f64], k: &[f64]) -> Vec<f64> {
        let nk: f64 = self.nu.iter().zip(k).map(|(a, b)| a * b).sum();
        let nv: f64 = self.nu.iter().zip(v).map(|(a, b)| a * b).sum();
        v.iter().zip(k).map(|(vi, ki)| vi - nv / nk * ki).collect()
    }
}

pub fn leaf_split(f: &TractorFrame, k: &Jet, tol: f64) -> Result<LeafSplit> {
    let n = f.dim();
    let div = k_adapted_residual(&f.conn, k);
    if div.abs() > tol {
        return Err(GeomError::NotAdapted(div));
    }
    let kv = &k.value;
    let mut j = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            j[a * n + b] = k.d1(b, a) + (0..n).map(|c| f.conn.g(a, b, c) * kv[c]).sum::<f64>();
        }
    }
    let pk: Vec<f64> = (0..n).map(|b| (0..n).map(|c| f.inv.p(b, c) * kv[c]).sum()).collect();
    let nu: Vec<f64> = pk.iter().map(|v| -v).collect();
    let pkk: f64 = pk.iter().zip(kv).map(|(a, b)| a * b).sum();
    let scale = linalg::max_abs(kv).powi(2).max(1e-300);
    if pkk.abs() <= 1e-8 * scale {
        return Err(GeomError::DegenerateNu);
    }
    let mut sys = [0.0f64; 4];
    for a in 0..n {
        let v: f64 = (0..n).map(|c| kv[c] * j[a * n + c]).sum();
        sys[0] = sys[0].max(v.abs());
        for b in 0..n {
            let s: f64 = (0..n).map(|c| j[a * n + c] * j[c * n + b]).sum::<f64>() - kv[a] * pk[b];
            sys[1] = sys[1].max((s + (a == b) as u8 as f64).abs());
        }
    }
    sys[2] = (pkk - 1.0).abs();
    for b in 0..n {
        let v: f64 = (0..n).map(|c| pk[c] * j[c * n + b]).sum();
        sys[3] = sys[3].max(v.abs());
    }
    let h_basis = linalg::null_space(&nu, 1, n, 1e-12);
    let mut j_square = 0.0f64;
    for v in &h_basis {
        let jv = linalg::matvec(&j, v, n);
        let jjv = linalg::matvec(&j, &jv, n);
        j_square = j_square.max(jjv.iter().zip(v).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max));
    }
    Ok(LeafSplit { nu, h_basis, j, system: sys, j_square })
}

/// Solve `Ric(ξ,η) = 2m ρ(ξ,η) + 2ρ(Jξ,Jη)` for `ρ`. The `J`-anti-invariant part
/// is divided by `2m − 2`, so `m = 1` is rejected unless that part vanishes.
pub fn cproj_rho(ric: &[f64], j: &[f64], m: usize) -> Result<Vec<f64>> {
    let l = 2 * m;
    let jt = linalg::transpose(j, l);
    let a = linalg::matmul(&jt, &linalg::matmul(ric, j, l), l);
    let plus: Vec<f64> = ric.iter().zip(&a).map(|(r, a)| 0.5 * (r + a)).collect();
    let minus: Vec<f64> = ric.iter().zip(&a).map(|(r, a)| 0.5 * (r - a)).collect();
    let mf = m as f64;
    if m == 1 {
        if linalg::max_abs(&minus) > 1e-12 * linalg::max_abs(ric).max(1.0) {
            return Err(GeomError::DimensionTooSmall(
                "the J-anti-invariant part of Ric cannot be solved for when m = 1".into(),
            ));
        }
        return Ok(plus.iter().map(|v| v / (2.0 * mf + 2.0)).collect());
    }
    Ok(plus.iter().zip(&minus).map(|(p, q)| p / (2.0 * mf + 2.0) + q / (2.0 * mf - 2.0)).collect())
}

/// Kähler data induced on a leaf chart by a Sasaki structure `(g, k)`.
#[derive(Clone, Debug)]
pub struct LeafKahlerData {
    pub m: usize,
    pub y: Vec<f64>,
    pub g: Vec<f64>,
    pub j: Vec<f64>,
    pub omega: Vec<f64>,
    /// Levi-Civita connection of `g̃`, `Γ̃^k_ij` at `[k][i][j]`.
    pub gamma: Vec<f64>,
    pub ric: Vec<f64>,
    pub rho: Vec<f64>,
    pub residuals: KahlerResiduals,
}

/// Max-norm residuals of the Kähler–Einstein identities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KahlerResiduals {
    pub j_square: f64,
    pub hermitian: f64,
    /// `dω̃`, by central differences.
    pub d_omega: f64,
    pub nijenhuis: f64,
    /// `∇̃J̃` for the Levi-Civita connection of `g̃`.
    pub parallel_j: f64,
    /// `R̃ic − (2m+2)g̃`.
    pub einstein: f64,
}

pub fn induced_kahler<M: Field + Clone, K: Field + Clone>(
    metric: &M,
    k: &K,
    chart: &LeafChart,
    y: &[f64],
    fd_step: f64,
) -> Result<LeafKahlerData> {
    let x = chart.embed(y);
    chart.check(&k.eval(&x))?;
    let l = chart.leaf_dim();
    if l % 2 != 0 {
        return Err(GeomError::DimensionTooSmall(format!("leaf dimension {l} is odd")));
    }
    let m = l / 2;
    let gm = InducedMetric { metric: metric.clone(), k: k.clone(), chart: *chart };
    let jf = LeafComplexStructure { connection: LeviCivita(metric.clone()), k: k.clone(), chart: *chart };
    let of = InducedKahlerForm { metric: metric.clone(), k: k.clone(), chart: *chart };
    let g = gm.eval(y);
    let jj = eval_jet(&jf, y, 1, None)?;
    let j = jj.value.clone();
    let omega = of.eval(y);
    let conn = ConnectionJet::from_field(&LeviCivita(gm), y, 1, None)?;
    let ric = curvature(&conn)?.ric;
    let rho = cproj_rho(&ric, &j, m)?;

    let jsq = linalg::matmul(&j, &j, l);
    let j_square = (0..l * l).map(|q| (jsq[q] + (q / l == q % l) as u8 as f64).abs()).fold(0.0, f64::max);
    let jt = linalg::transpose(&j, l);
    let herm = linalg::matmul(&jt, &linalg::matmul(&g, &j, l), l);
    let hermitian = linalg::max_abs_diff(&herm, &g);

    let dom = fd_derivative(&of, y, fd_step, None)?;
    let ll = l * l;
    let mut d_omega = 0.0f64;
    for a in 0..l {
        for b in 0..l {
            for c in 0..l {
                let v = dom[a * ll + b * l + c] + dom[b * ll + c * l + a] + dom[c * ll + a * l + b];
                d_omega = d_omega.max(v.abs());
            }
        }
    }
    // N^k_ab = J^c_a ∂_c J^k_b − J^c_b ∂_c J^k_a − J^k_c(∂_a J^c_b − ∂_b J^c_a)
    let dj = |c: usize, k: usize, b: usize| jj.d1(c, k * l + b);
    let mut nijenhuis = 0.0f64;
    let mut parallel_j = 0.0f64;
    for a in 0..l {
        for b in 0..l {
            for kk in 0..l {
                let mut s = 0.0;
                for c in 0..l {
                    s += j[c * l + a] * dj(c, kk, b) - j[c * l + b] * dj(c, kk, a);
                    s -= j[kk * l + c] * (dj(a, c, b) - dj(b, c, a));
                }
                nijenhuis = nijenhuis.max(s.abs());
                // (∇̃_a J)^k_b
                let mut p = dj(a, kk, b);
                for c in 0..l {
                    p += conn.g(kk, a, c) * j[c * l + b] - conn.g(c, a, b) * j[kk * l + c];
                }
                parallel_j = parallel_j.max(p.abs());
            }
        }
    }
    let einstein = (0..ll).map(|q| (ric[q] - (2 * m + 2) as f64 * g[q]).abs()).fold(0.0, f64::max);
    Ok(LeafKahlerData {
        m,
        y: y.to_vec(),
        g,
        j,
        omega,
        gamma: conn.gamma.clone(),
        ric,
        rho,
        residuals: KahlerResiduals { j_square, hermitian, d_omega, nijenhuis, parallel_j, einstein },
    })
}

/// Residuals of the Fefferman-type connection equations and Schouten identities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeffermanResiduals {
    /// `∇_k k`.
    pub kk: f64,
    /// `∇_k ξ − Jξ`.
    pub k_xi: f64,
    /// `∇_η k − Jη`.
    pub xi_k: f64,
    /// `∇_η ξ − Φ⁻¹(∇̃_η̃ ξ̃) − ρ̃(η, Jξ) k`.
    pub xi_xi: f64,
    /// `P(k, k) − 1`.
    pub p_kk: f64,
    /// `P(k, ξ)`.
    pub p_k_xi: f64,
    /// `P(ξ, η) − ρ̃(ξ, η)`.
    pub p_xi_xi: f64,
}

impl FeffermanResiduals {
    pub fn max(&self) -> f64 {
        [self.kk, self.k_xi, self.xi_k, self.xi_xi, self.p_kk, self.p_k_xi, self.p_xi_xi].into_iter().fold(0.0, f64::max)
    }
}

/// Check the connection of `s` against the Fefferman-type construction from `leaf`
/// at `x`; `leaf` must be evaluated at the projection of `x`. Residuals that need
/// the complement `H` are infinite when `ν(k)` vanishes.
pub fn fefferman_connection_residual<G: Field + Clone, K: Field + Clone>(
    s: &TractorSplitting<G>,
    k: &K,
    chart: &LeafChart,
    leaf: &LeafKahlerData,
    x: &[f64],
) -> Result<FeffermanResiduals> {
    let n = x.len();
    let l = n - 1;
    let f = s.frame(x)?;
    let kj = eval_jet(k, x, 1, None)?;
    let kv = &kj.value;
    let p = |a: usize, b: usize| f.inv.p(a, b);
    let pkk: f64 = (0..n).map(|a| (0..n).map(|b| p(a, b) * kv[a] * kv[b]).sum::<f64>()).sum();
    let mut out = FeffermanResiduals {
        kk: 0.0,
        k_xi: f64::INFINITY,
        xi_k: f64::INFINITY,
        xi_xi: f64::INFINITY,
        p_kk: (pkk - 1.0).abs(),
        p_k_xi: f64::INFINITY,
        p_xi_xi: f64::INFINITY,
    };
    // ∇_u v for v a field with jet (value vv, partials dv[b][a])
    let cov = |u: &[f64], vv: &[f64], dv: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
        (0..n)
            .map(|a| {
                let mut t = 0.0;
                for b in 0..n {
                    t += u[b] * dv(b, a);
                    for c in 0..n {
                        t += f.conn.g(a, b, c) * u[b] * vv[c];
                    }
                }
                t
            })
            .collect()
    };
    let nkk = cov(kv, kv, &|b, a| kj.d1(b, a));
    out.kk = linalg::max_abs(&nkk);
    if pkk.abs() < 1e-10 {
        return Ok(out);
    }
    let chart_here = LeafChart { value: x[chart.coord], ..*chart };
    let lf = LiftField { horizontal: ConnectionHorizontal { connection: s.connection.clone(), k: k.clone() }, chart: chart_here };
    let xj = &eval_jet(&lf, x, 1, None)?;
    let xi = |i: usize| &xj.value[i * n..(i + 1) * n];
    let dxi = |i: usize| move |b: usize, a: usize| xj.d1(b, i * n + a);
    let comb = |coef: &dyn Fn(usize) -> f64| -> Vec<f64> {
        let mut v = vec![0.0; n];
        for q in 0..l {
            let c = coef(q);
            for a in 0..n {
                v[a] += c * xi(q)[a];
            }
        }
        v
    };
    let (j, gam, rho) = (&leaf.j, &leaf.gamma, &leaf.rho);
    let (mut k_xi, mut xi_k, mut xi_xi, mut p_k_xi, mut p_xi_xi) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..l {
        let jxi = comb(&|q| j[q * l + i]);
        let d = dxi(i);
        let a1 = cov(kv, xi(i), &d);
        k_xi = k_xi.max(linalg::max_abs_diff(&a1, &jxi));
        let a2 = cov(xi(i), kv, &|b, a| kj.d1(b, a));
        xi_k = xi_k.max(linalg::max_abs_diff(&a2, &jxi));
        let pk: f64 = (0..n).map(|a| (0..n).map(|b| p(a, b) * kv[a] * xi(i)[b]).sum::<f64>()).sum();
        p_k_xi = p_k_xi.max(pk.abs());
        for jj in 0..l {
            let d = dxi(jj);
            let lhs = cov(xi(i), xi(jj), &d);
            let mut rhs = comb(&|q| gam[(q * l + i) * l + jj]);
            let rj: f64 = (0..l).map(|q| rho[i * l + q] * j[q * l + jj]).sum();
            for a in 0..n {
                rhs[a] += rj * kv[a];
            }
            xi_xi = xi_xi.max(linalg::max_abs_diff(&lhs, &rhs));
            let pij: f64 = (0..n).map(|a| (0..n).map(|b| p(a, b) * xi(i)[a] * xi(jj)[b]).sum::<f64>()).sum();
            p_xi_xi = p_xi_xi.max((pij - rho[i * l + jj]).abs());
        }
    }
    out.k_xi = k_xi;
    out.xi_k = xi_k;
    out.xi_xi = xi_xi;
    out.p_k_xi = p_k_xi;
    out.p_xi_xi = p_xi_xi;
    Ok(out)
}

/// `ν` and `∇k` as fields on the total space, for Lie-derivative checks.
#[derive(Clone, Debug)]
pub struct SplitFields<G, K> {
    pub connection: G,
    pub k: K,
}

impl<G: Field + Clone, K: Field + Clone> Field for SplitFields<G, K> {
    fn dim_in(&self) -> usize {
        self.k.dim_in()
    }
    fn dim_out(&self) -> usize {
        let n = self.k.dim_in();
        n + n * n
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let h = ConnectionHorizontal { connection: self.connection.clone(), k: self.k.clone() };
        let (mut nu, _) = h.nu_and_k(x);
        nu.extend(nabla_k(&self.connection, &self.k, x));
        nu
    }
}

/// `(𝓛_k ν, 𝓛_k ∇k)` as max norms at `x`.
pub fn lie_derivative_residuals<G: Field + Clone, K: Field + Clone>(connection: &G, k: &K, x: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    let sf = SplitFields { connection: connection.clone(), k: k.clone() };
    let fj = eval_jet(&sf, x, 1, None)?;
    let kj = eval_jet(k, x, 1, None)?;
    let kv = &kj.value;
    let mut lnu = 0.0f64;
    for b in 0..n {
        let v: f64 = (0..n).map(|c| kv[c] * fj.d1(c, b) + fj.value[c] * kj.d1(b, c)).sum();
        lnu = lnu.max(v.abs());
    }
    let jv = |a: usize, b: usize| fj.value[n + a * n + b];
    let mut lj = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let v: f64 = (0..n)
                .map(|c| kv[c] * fj.d1(c, n + a * n + b) - jv(c, b) * kj.d1(c, a) + jv(a, c) * kj.d1(b, c))
                .sum();
            lj = lj.max(v.abs());
        }
    }
    Ok((lnu, lj))
}
