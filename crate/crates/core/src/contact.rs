//! Contact forms from weight-2 1-forms, Reeb data, compatibility of a
//! connection with the contact distribution, the torsion invariant, the
//! extension tensor `E`, and residual checks for symplectic holonomy.
//!
//! Horizontal objects are stored as full tensors annihilated by `t` and `θ`.
//! Layouts: 2-tensors `[a][b]`, 3-tensors `[a][b][c]`, `∂ω` as `[c][a][b]`.

use crate::affine::{i3, nabla, ConnectionJet, Idx, TensorJet};
use crate::bgg::{bgg_killing, killing_normality_residual};
use crate::error::{GeomError, Result};
use crate::hermitian::parallel_residual;
use crate::jets::{eval_jet, Field, Jet, Point, Scalar};
use crate::linalg;
use crate::report::{CheckReport, Residual};
use crate::tractor::{TractorFrame, TractorKind, TractorSplitting};

/// `θ = k/τ` as a field.
struct Quotient<'a, K, T> {
    k: &'a K,
    tau: &'a T,
}

impl<K: Field, T: Field> Field for Quotient<'_, K, T> {
    fn dim_in(&self) -> usize {
        self.k.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.k.dim_out()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let t = self.tau.eval(x)[0];
        self.k.eval(x).into_iter().map(|v| v / t).collect()
    }
}

/// Contact data of a scale `τ` at one point.
#[derive(Clone, Debug)]
pub struct ContactData {
    pub n: usize,
    pub m: usize,
    pub x: Vec<f64>,
    pub tau: f64,
    pub dtau: Vec<f64>,
    /// Weight-2 form `k` and its partials `[e][b]`.
    pub k: Vec<f64>,
    pub dk: Vec<f64>,
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
    pub domega: Vec<f64>,
    pub reeb: Vec<f64>,
    pub omega_inv: Vec<f64>,
    /// `Π_a^d = δ_a^d − θ_a t^d`, `[a][d]`.
    pub proj: Vec<f64>,
}

impl ContactData {
    /// `𝓛_ab = τω_ab`.
    pub fn l_lower(&self) -> Vec<f64> {
        self.omega.iter().map(|v| self.tau * v).collect()
    }

    /// `𝓛^{ab} = ω^{ab}/τ`.
    pub fn l_upper(&self) -> Vec<f64> {
        self.omega_inv.iter().map(|v| v / self.tau).collect()
    }

    /// Restrict every lower index of a covariant tensor to `H`.
    pub fn project_lower(&self, t: &[f64], rank: usize) -> Vec<f64> {
        let n = self.n;
        let mut cur = t.to_vec();
        for r in 0..rank {
            let stride = n.pow((rank - 1 - r) as u32);
            let mut next = vec![0.0; cur.len()];
            for (q, out) in next.iter_mut().enumerate() {
                let a = (q / stride) % n;
                let base = q - a * stride;
                *out = (0..n).map(|d| self.proj[a * n + d] * cur[base + d * stride]).sum();
            }
            cur = next;
        }
        cur
    }

    /// `θ(t) − 1`, `t⌟ω` and `ω^{ab}ω_bc + δ − θ_c t^a`, as max norms.
    pub fn identity_residuals(&self) -> (f64, f64, f64) {
        let n = self.n;
        let th: f64 = (0..n).map(|a| self.theta[a] * self.reeb[a]).sum::<f64>() - 1.0;
        let tw = (0..n).map(|b| (0..n).map(|a| self.reeb[a] * self.omega[a * n + b]).sum::<f64>().abs()).fold(0.0, f64::max);
        let mut inv = 0.0f64;
        for a in 0..n {
            for c in 0..n {
                let s: f64 = (0..n).map(|b| self.omega_inv[a * n + b] * self.omega[b * n + c]).sum();
                let want = -((a == c) as u8 as f64) + self.theta[c] * self.reeb[a];
                inv = inv.max((s - want).abs());
            }
        }
        (th.abs(), tw, inv)
    }
}

/// Contact data for `θ = k/τ`; fails with `NotContact` where `θ∧(dθ)^m` vanishes.
pub fn contact_data<K: Field, T: Field>(k: &K, tau: &T, x: &[f64]) -> Result<ContactData> {
    let n = x.len();
    if n % 2 == 0 || n < 3 {
        return Err(GeomError::DimensionTooSmall(format!("contact structures need odd dimension ≥ 3, got {n}")));
    }
    let m = (n - 1) / 2;
    let th = eval_jet(&Quotient { k, tau }, x, 2, None)?;
    let kj = eval_jet(k, x, 1, None)?;
    let tj = eval_jet(tau, x, 1, None)?;
    let tau0 = tj.value[0];
    if tau0 <= 0.0 {
        return Err(GeomError::InvalidArgument("scale must be positive".into()));
    }
    let mut omega = vec![0.0; n * n];
    let mut domega = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            omega[a * n + b] = th.d1(a, b) - th.d1(b, a);
            for c in 0..n {
                domega[i3(n, c, a, b)] = th.d2(c, a, b) - th.d2(c, b, a);
            }
        }
    }
    let theta = th.value.clone();

    // [[0, θ], [−θᵀ, ω]] is nonsingular exactly when θ∧(dθ)^m ≠ 0
    let r = n + 1;
    let mut aug = vec![0.0; r * r];
    for a in 0..n {
        aug[1 + a] = theta[a];
        aug[(1 + a) * r] = -theta[a];
        for b in 0..n {
            aug[(1 + a) * r + 1 + b] = omega[a * n + b];
        }
    }
    let scale = linalg::max_abs(&aug).max(1e-300);
    if linalg::det(&aug, r).abs() <= 1e-12 * scale.powi(r as i32) {
        return Err(GeomError::NotContact);
    }

    // Reeb system θ(t) = 1, ω_ab t^b = λθ_a; contracting with t forces λ = 0
    let mut rhs = vec![0.0; r];
    rhs[0] = 1.0;
    let sol = linalg::solve(&aug, r, &rhs).ok_or(GeomError::NotContact)?;
    let reeb = sol[1..].to_vec();

    // invert ω on ker θ: ω^{ab} = E(−ω_H⁻¹)Eᵀ
    let e = linalg::null_space(&theta, 1, n, 1e-12);
    if e.len() != 2 * m {
        return Err(GeomError::NotContact);
    }
    let h = 2 * m;
    let mut wh = vec![0.0; h * h];
    for i in 0..h {
        for j in 0..h {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += e[i][a] * omega[a * n + b] * e[j][b];
                }
            }
            wh[i * h + j] = s;
        }
    }
    let whi = linalg::inverse(&wh, h).ok_or(GeomError::NotContact)?;
    let mut omega_inv = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for i in 0..h {
                for j in 0..h {
                    s -= e[i][a] * whi[i * h + j] * e[j][b];
                }
            }
            omega_inv[a * n + b] = s;
        }
    }
    let mut proj = linalg::identity(n);
    for a in 0..n {
        for d in 0..n {
            proj[a * n + d] -= theta[a] * reeb[d];
        }
    }
    Ok(ContactData {
        n,
        m,
        x: x.to_vec(),
        tau: tau0,
        dtau: tj.d1.clone(),
        k: kj.value.clone(),
        dk: kj.d1.clone(),
        theta,
        omega,
        domega,
        reeb,
        omega_inv,
        proj,
    })
}

/// `∇_a k_b` for a weight-2 form from its value and partials `[e][b]`.
fn nabla_k(c: &ConnectionJet, k: &[f64], dk: &[f64]) -> Vec<f64> {
    let n = c.n;
    let t = TensorJet { n, pattern: vec![Idx::Down], weight: 2.0, v: k.to_vec(), d1: Some(dk.to_vec()), d2: None };
    nabla(c, &t).expect("first partials supplied").v
}

/// Least-squares fit of `∇_(a k_b) = k_(a η_b)`; returns the max misfit and `η`.
pub fn compatibility_eta(c: &ConnectionJet, k: &Jet) -> (f64, Vec<f64>) {
    compatibility_from(c, &k.value, &k.d1)
}

fn compatibility_from(c: &ConnectionJet, k: &[f64], dk: &[f64]) -> (f64, Vec<f64>) {
    let n = c.n;
    let nk = nabla_k(c, k, dk);
    let mut a = vec![0.0; n * n * n];
    let mut rhs = vec![0.0; n * n];
    for p in 0..n {
        for q in 0..n {
            let row = p * n + q;
            rhs[row] = 0.5 * (nk[p * n + q] + nk[q * n + p]);
            a[row * n + q] += 0.5 * k[p];
            a[row * n + p] += 0.5 * k[q];
        }
    }
    let eta = linalg::lstsq(&a, n * n, n, &rhs);
    let mut misfit = 0.0f64;
    for row in 0..n * n {
        let fit: f64 = (0..n).map(|j| a[row * n + j] * eta[j]).sum();
        misfit = misfit.max((fit - rhs[row]).abs());
    }
    (misfit, eta)
}

/// Torsion data: `ν̄_abc = Π(∇_c ω_ab)`, `λ_b`, `ν°`, `T_ab^c`.
#[derive(Clone, Debug)]
pub struct ContactTorsion {
    pub n: usize,
    pub nu: Vec<f64>,
    pub lambda: Vec<f64>,
    pub nu0: Vec<f64>,
    pub t: Vec<f64>,
}

impl ContactTorsion {
    /// `T_abc = T_ab^e 𝓛_ec`.
    pub fn lowered(&self, data: &ContactData) -> Vec<f64> {
        let n = self.n;
        let l = data.l_lower();
        let mut out = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    out[i3(n, a, b, c)] = (0..n).map(|e| self.t[i3(n, a, b, e)] * l[e * n + c]).sum();
                }
            }
        }
        out
    }

    /// `T^{abc} = 𝓛^{ad}𝓛^{be}T_de^c`.
    pub fn raised(&self, data: &ContactData) -> Vec<f64> {
        let n = self.n;
        let l = data.l_upper();
        let mut half = vec![0.0; n * n * n];
        for d in 0..n {
            for b in 0..n {
                for c in 0..n {
                    half[i3(n, d, b, c)] = (0..n).map(|e| l[b * n + e] * self.t[i3(n, d, e, c)]).sum();
                }
            }
        }
        let mut out = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    out[i3(n, a, b, c)] = (0..n).map(|d| l[a * n + d] * half[i3(n, d, b, c)]).sum();
                }
            }
        }
        out
    }

    /// `T(u, v)` for vectors `u, v`.
    pub fn apply(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|c| {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += self.t[i3(n, a, b, c)] * u[a] * v[b];
                    }
                }
                s
            })
            .collect()
    }
}

/// Residuals of `T_[ab]c = T_abc`, `T_[abc] = 0`, `𝓛^{ab}T_abc = 0`, and the
/// annihilation of `T_ab^c` by `t` (inputs) and `θ` (output).
pub fn torsion_symmetry_residuals(t: &ContactTorsion, data: &ContactData) -> [f64; 4] {
    let n = t.n;
    let tl = t.lowered(data);
    let lu = data.l_upper();
    let mut out = [0.0f64; 4];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let v = tl[i3(n, a, b, c)];
                out[0] = out[0].max((0.5 * (v - tl[i3(n, b, a, c)]) - v).abs());
                out[1] = out[1].max((v + tl[i3(n, b, c, a)] + tl[i3(n, c, a, b)]).abs());
            }
        }
    }
    for c in 0..n {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += lu[a * n + b] * tl[i3(n, a, b, c)];
            }
        }
        out[2] = out[2].max(s.abs());
    }
    for a in 0..n {
        for c in 0..n {
            let tin: f64 = (0..n).map(|b| data.reeb[b] * t.t[i3(n, a, b, c)]).sum();
            out[3] = out[3].max(tin.abs());
        }
    }
    for a in 0..n {
        for b in 0..n {
            let th: f64 = (0..n).map(|c| data.theta[c] * t.t[i3(n, a, b, c)]).sum();
            out[3] = out[3].max(th.abs());
        }
    }
    out
}

/// `∇_c ω_ab`, stored `[a][b][c]`.
fn nabla_omega(c: &ConnectionJet, data: &ContactData) -> Vec<f64> {
    let n = data.n;
    let mut nu = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for e in 0..n {
                let mut s = data.domega[i3(n, e, a, b)];
                for d in 0..n {
                    s -= c.g(d, e, a) * data.omega[d * n + b] + c.g(d, e, b) * data.omega[a * n + d];
                }
                nu[i3(n, a, b, e)] = s;
            }
        }
    }
    nu
}

/// The torsion `T_ab^c = −2ω^{ce}ν°_abe` of the contact projective structure
/// containing `c`. `tol` bounds the compatibility misfit.
pub fn contact_torsion(c: &ConnectionJet, data: &ContactData, tol: f64) -> Result<ContactTorsion> {
    let (misfit, _) = compatibility_from(c, &data.k, &data.dk);
    if misfit > tol {
        return Err(GeomError::IncompatibleConnection(misfit));
    }
    let (n, m) = (data.n, data.m);
    let nu = data.project_lower(&nabla_omega(c, data), 3);
    let w = &data.omega;
    let wi = &data.omega_inv;
    let lambda: Vec<f64> = (0..n)
        .map(|b| {
            let mut s = 0.0;
            for a in 0..n {
                for cc in 0..n {
                    s += wi[cc * n + a] * nu[i3(n, a, b, cc)];
                }
            }
            s
        })
        .collect();
    let f = 1.0 / (2 * m + 1) as f64;
    let mut nu0 = nu.clone();
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                nu0[i3(n, a, b, cc)] +=
                    f * (lambda[b] * w[a * n + cc] - lambda[a] * w[b * n + cc] + 2.0 * lambda[cc] * w[a * n + b]);
            }
        }
    }
    let mut t = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                t[i3(n, a, b, cc)] = -2.0 * (0..n).map(|e| wi[cc * n + e] * nu0[i3(n, a, b, e)]).sum::<f64>();
            }
        }
    }
    Ok(ContactTorsion { n, nu, lambda, nu0, t })
}

/// `U^{ab} = ∇_cT^{c(ab)}`, `V^{ab} = ∇_cT^{abc}`, `W^a = ∇_b∇_cT^{bac} + (2m+1)P_bcT^{bac}`.
#[derive(Clone, Debug)]
pub struct TorsionDerivatives {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn torsion_derivatives(f: &TractorFrame, m: usize, t_up: &TensorJet) -> Result<TorsionDerivatives> {
    let n = f.dim();
    let nt = nabla(&f.conn, t_up)?;
    let nnt = nabla(&f.conn, &nt)?;
    let n3 = n * n * n;
    let mut u = vec![0.0; n * n];
    let mut v = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                u[a * n + b] += 0.5 * (nt.v[c * n3 + i3(n, c, a, b)] + nt.v[c * n3 + i3(n, c, b, a)]);
                v[a * n + b] += nt.v[c * n3 + i3(n, a, b, c)];
            }
        }
    }
    let mut w = vec![0.0; n];
    for (a, wa) in w.iter_mut().enumerate() {
        for b in 0..n {
            for c in 0..n {
                *wa += nnt.v[(b * n + c) * n3 + i3(n, b, a, c)]
                    + (2 * m + 1) as f64 * f.inv.p(b, c) * t_up.v[i3(n, b, a, c)];
            }
        }
    }
    Ok(TorsionDerivatives { u, v, w })
}

/// The extension tensor `E_abc` built from a torsion field `T^{abc}` of weight −4
/// (jets of order 2), the scale in `data` and the connection in `f`.
pub fn extension_tensor(f: &TractorFrame, data: &ContactData, t_up: &TensorJet) -> Result<Vec<f64>> {
    let (n, m) = (data.n, data.m);
    if t_up.d2.is_none() {
        return Err(GeomError::InvalidArgument("torsion field needs second partials".into()));
    }
    let d = torsion_derivatives(f, m, t_up)?;
    let l = data.l_lower();
    let k = &data.k;
    let t = &t_up.v;
    let (p, q) = ((2 * m + 1) as f64, (2 * m - 1) as f64);

    // 𝓛_e[b k_a] as [e][a][b]
    let mut lk = vec![0.0; n * n * n];
    for e in 0..n {
        for a in 0..n {
            for b in 0..n {
                lk[i3(n, e, a, b)] = 0.5 * (l[e * n + b] * k[a] - l[e * n + a] * k[b]);
            }
        }
    }
    // T^{efg}𝓛_gc and then 𝓛_ea𝓛_fb
    let mut tl = vec![0.0; n * n * n];
    for e in 0..n {
        for fi in 0..n {
            for c in 0..n {
                tl[i3(n, e, fi, c)] = (0..n).map(|g| t[i3(n, e, fi, g)] * l[g * n + c]).sum();
            }
        }
    }
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                for e in 0..n {
                    for fi in 0..n {
                        let lab = l[e * n + a] * l[fi * n + b];
                        s += tl[i3(n, e, fi, c)] * lab;
                        s -= 2.0 / p * d.v[e * n + fi] * lab * k[c];
                        let lfc = l[fi * n + c] * lk[i3(n, e, a, b)];
                        s += 2.0 / p * d.v[e * n + fi] * lfc;
                        s -= 4.0 / q * d.u[e * n + fi] * lfc;
                    }
                    s += 8.0 / (q * p) * d.w[e] * lk[i3(n, e, a, b)] * k[c];
                }
                out[i3(n, a, b, c)] = s;
            }
        }
    }
    Ok(out)
}

/// Residuals of `E_[ab]c = E_abc`, `E_[abc] = 0`, `E_abc𝓛^{ab} = 0` and of
/// `E|_H = T_abc` for the algebraic torsion `T^{abc}` (value only).
pub fn extension_symmetry_residuals(data: &ContactData, e: &[f64], t_up: &[f64]) -> [f64; 4] {
    let n = data.n;
    let l = data.l_lower();
    let lu = data.l_upper();
    let mut out = [0.0f64; 4];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let v = e[i3(n, a, b, c)];
                out[0] = out[0].max((0.5 * (v - e[i3(n, b, a, c)]) - v).abs());
                out[1] = out[1].max((v + e[i3(n, b, c, a)] + e[i3(n, c, a, b)]).abs());
            }
        }
    }
    for c in 0..n {
        let s: f64 = (0..n * n).map(|ab| lu[ab] * e[ab * n + c]).sum();
        out[2] = out[2].max(s.abs());
    }
    let mut tl = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                for x in 0..n {
                    for y in 0..n {
                        for z in 0..n {
                            s += t_up[i3(n, x, y, z)] * l[x * n + a] * l[y * n + b] * l[z * n + c];
                        }
                    }
                }
                tl[i3(n, a, b, c)] = s;
            }
        }
    }
    let eh = data.project_lower(e, 3);
    out[3] = linalg::max_abs_diff(&eh, &tl);
    out
}

/// Residuals of the distinguished-connection conditions and their consequences.
#[derive(Clone, Debug, PartialEq)]
pub struct DistinguishedResiduals {
    /// `∇_aτ`.
    pub a: f64,
    /// `∇_(a k_b)`.
    pub b: f64,
    /// `W_ab^d_c k_d + ¼E_abc`.
    pub c: f64,
    /// `ω^{bc}∇_aω_bc`.
    pub omega_trace: f64,
    /// `𝓛^{ab}W_ab^d_c k_d`.
    pub weyl_trace: f64,
}

/// Evaluate the three conditions for the connection in `f`; `e = None` means `E = 0`.
pub fn distinguished_connection_residual(f: &TractorFrame, data: &ContactData, e: Option<&[f64]>) -> DistinguishedResiduals {
    let n = data.n;
    let gt = f.conn.gamma_trace();
    let a = (0..n).map(|i| (data.dtau[i] + 2.0 * gt[i] * data.tau).abs()).fold(0.0, f64::max);
    let nk = nabla_k(&f.conn, &data.k, &data.dk);
    let b = (0..n * n).map(|q| (0.5 * (nk[q] + nk[(q % n) * n + q / n])).abs()).fold(0.0, f64::max);
    let wk = killing_normality_residual(f, &data.k);
    let c = match e {
        Some(e) => wk.iter().zip(e).map(|(w, e)| (w + 0.25 * e).abs()).fold(0.0, f64::max),
        None => linalg::max_abs(&wk),
    };
    let no = nabla_omega(&f.conn, data);
    let omega_trace = (0..n)
        .map(|x| {
            let mut s = 0.0;
            for p in 0..n {
                for q in 0..n {
                    s += data.omega_inv[p * n + q] * no[i3(n, p, q, x)];
                }
            }
            s.abs()
        })
        .fold(0.0, f64::max);
    let lu = data.l_upper();
    let weyl_trace = (0..n).map(|cc| (0..n * n).map(|ab| lu[ab] * wk[ab * n + cc]).sum::<f64>().abs()).fold(0.0, f64::max);
    DistinguishedResiduals { a, b, c, omega_trace, weyl_trace }
}

/// Projecting part `k_b = Ω(X, W_b)` of a tractor 2-form field, weight 2.
#[derive(Clone, Debug)]
pub struct ProjectingPart<O> {
    pub omega: O,
}

impl<O: Field> Field for ProjectingPart<O> {
    fn dim_in(&self) -> usize {
        self.omega.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.omega.dim_in()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let o = self.omega.eval(x);
        (1..=x.len()).map(|b| o[b]).collect()
    }
    fn weight(&self) -> f64 {
        2.0
    }
}

/// Constant unit density of weight 2 in the chart trivialisation.
#[derive(Clone, Copy, Debug)]
pub struct UnitScale(pub usize);

impl Field for UnitScale {
    fn dim_in(&self) -> usize {
        self.0
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, _x: &[S]) -> Vec<S> {
        vec![S::one()]
    }
    fn weight(&self) -> f64 {
        2.0
    }
}

/// Largest condition number accepted as "nondegenerate".
pub const MAX_CONDITION: f64 = 1e8;

/// Checks that a tractor 2-form field is a parallel symplectic form and that
/// its projecting part defines a torsion-free contact projective structure.
pub fn symplectic_reduction_check<G: Field, O: Field>(
    s: &TractorSplitting<G>,
    omega: &O,
    points: &[Point],
    fd_step: f64,
    tol_d1: f64,
    tol_d2: f64,
) -> Result<Vec<CheckReport>> {
    let n = s.dim();
    let r = n + 1;
    let kf = ProjectingPart { omega };
    let mut par = Residual::new("contact.omega_parallel", tol_d1);
    let mut nondeg = Residual::new("contact.omega_nondegenerate", MAX_CONDITION);
    let mut knd = Residual::new("contact.k_contact", MAX_CONDITION);
    let mut kill = Residual::new("contact.killing_bgg", tol_d2);
    let mut norm = Residual::new("contact.normality", tol_d2);
    let mut tors = Residual::new("contact.torsion", tol_d2);
    let mut anti = Residual::new("contact.omega_antisymmetric", tol_d2);
    for p in points {
        let x = &p.coords;
        let (_, fd) = parallel_residual(s, omega, TractorKind::TwoForm, x, fd_step)?;
        par.push(fd, x);
        let o = omega.eval(x);
        let asym = (0..r * r).map(|q| (o[q] + o[(q % r) * r + q / r]).abs()).fold(0.0, f64::max);
        anti.push(asym, x);
        nondeg.push(linalg::condition(&o, r), x);

        let kj = eval_jet(&kf, x, 2, Some(&s.domain))?;
        let mut aug = vec![0.0; r * r];
        for a in 0..n {
            aug[1 + a] = kj.value[a];
            aug[(1 + a) * r] = -kj.value[a];
            for b in 0..n {
                aug[(1 + a) * r + 1 + b] = kj.d1(a, b) - kj.d1(b, a);
            }
        }
        knd.push(linalg::condition(&aug, r), x);

        let f = s.frame(x)?;
        kill.push_max(&bgg_killing(&f, &kj)?, x);
        norm.push_max(&killing_normality_residual(&f, &kj.value), x);
        match contact_data(&kf, &UnitScale(n), x).and_then(|d| contact_torsion(&f.conn, &d, tol_d2.max(1e-6))) {
            Ok(t) => tors.push_max(&t.t, x),
            Err(_) => tors.push(f64::INFINITY, x),
        }
    }
    Ok(vec![par.finish(), anti.finish(), nondeg.finish(), knd.finish(), kill.finish(), norm.finish(), tors.finish()])
}
