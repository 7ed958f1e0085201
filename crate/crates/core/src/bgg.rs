//! First BGG splitting operators for tractor 2-forms and adjoint tractors,
//! their normality conditions, and the projective-symmetry operator.
//!
//! Index layouts: a weight-2 1-form `k_b`; `S²T*M ⊗ TM` values are stored
//! `[a][b][c]` for `T_ab^c`.

use crate::affine::{i3, nabla, Idx, TensorJet};
use crate::error::{GeomError, Result};
use crate::jets::{value_and_partials, Field, Jet, Scalar};
use crate::tractor::TractorFrame;

fn one_form(k: &Jet) -> Result<TensorJet> {
    if k.order < 1 {
        return Err(GeomError::InvalidArgument("1-form jet needs first partials".into()));
    }
    Ok(TensorJet { n: k.n, pattern: vec![Idx::Down], weight: 2.0, v: k.value.clone(), d1: Some(k.d1.clone()), d2: None })
}

fn vector(xi: &Jet) -> Result<TensorJet> {
    if xi.order < 2 {
        return Err(GeomError::InvalidArgument("vector field jet needs second partials".into()));
    }
    Ok(TensorJet::from_jet(xi, vec![Idx::Up], 0.0))
}

/// `L(k) = (k_b, ∇_[a k_b])` as a tractor 2-form matrix.
pub fn split_two_form(f: &TractorFrame, k: &Jet) -> Result<Vec<f64>> {
    let n = f.dim();
    let r = n + 1;
    let nk = nabla(&f.conn, &one_form(k)?)?;
    let mut h = vec![0.0; r * r];
    for b in 0..n {
        h[1 + b] = k.value[b];
        h[(1 + b) * r] = -k.value[b];
        for c in 0..n {
            h[(1 + b) * r + 1 + c] = 0.5 * (nk.v[b * n + c] - nk.v[c * n + b]);
        }
    }
    Ok(h)
}

/// `∇_(a k_b)` for a weight-2 1-form, `[a][b]`.
pub fn bgg_killing(f: &TractorFrame, k: &Jet) -> Result<Vec<f64>> {
    let n = f.dim();
    let nk = nabla(&f.conn, &one_form(k)?)?;
    Ok((0..n * n).map(|q| 0.5 * (nk.v[q] + nk.v[(q % n) * n + q / n])).collect())
}

/// `W_ab^d_c k_d`, `[a][b][c]`.
pub fn killing_normality_residual(f: &TractorFrame, k: &[f64]) -> Vec<f64> {
    let n = f.dim();
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                out[i3(n, a, b, c)] = (0..n).map(|d| f.inv.w(a, b, d, c) * k[d]).sum();
            }
        }
    }
    out
}

/// `L^𝒜(ξ)`: `φ = ∇ξ − (divξ/(n+2))δ`, `ν_b = −(1/(n+2))∇_b divξ − P_bc ξ^c`,
/// corner `−divξ/(n+2)`; returned as the adjoint matrix.
pub fn split_adjoint(f: &TractorFrame, xi: &Jet) -> Result<Vec<f64>> {
    let n = f.dim();
    let r = n + 1;
    let xt = vector(xi)?;
    let nx = nabla(&f.conn, &xt)?;
    let nnx = nabla(&f.conn, &nx)?;
    let np2 = r as f64;
    let div: f64 = (0..n).map(|c| nx.v[c * n + c]).sum();
    let mut m = vec![0.0; r * r];
    m[0] = -div / np2;
    for b in 0..n {
        let ndiv: f64 = (0..n).map(|c| nnx.v[(b * n + c) * n + c]).sum();
        let pxi: f64 = (0..n).map(|c| f.inv.p(b, c) * xi.value[c]).sum();
        m[1 + b] = -ndiv / np2 - pxi;
        m[(1 + b) * r] = xi.value[b];
        for a in 0..n {
            // φ^a_b = ∇_b ξ^a
            m[(1 + a) * r + 1 + b] = nx.v[b * n + a] - if a == b { div / np2 } else { 0.0 };
        }
    }
    Ok(m)
}

/// Projecting part of an adjoint tractor: `ξ^a`.
pub fn project_adjoint(m: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|a| m[(1 + a) * (n + 1)]).collect()
}

/// Projecting part of a tractor 2-form: `k_b`.
pub fn project_two_form(h: &[f64], n: usize) -> Vec<f64> {
    h[1..=n].to_vec()
}

fn sym_second(f: &TractorFrame, xi: &Jet) -> Result<Vec<f64>> {
    let n = f.dim();
    let nnx = nabla(&f.conn, &nabla(&f.conn, &vector(xi)?)?)?;
    let mut s = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                s[i3(n, a, b, c)] = 0.5 * (nnx.v[i3(n, a, b, c)] + nnx.v[i3(n, b, a, c)])
                    + 0.5 * (f.inv.p(a, b) + f.inv.p(b, a)) * xi.value[c];
            }
        }
    }
    Ok(s)
}

/// `D^𝒜(ξ)_bc^a = S_bc^a − (1/(n+2))(S_bd^d δ^a_c + S_cd^d δ^a_b)` with
/// `S_bc^a = ∇_(b∇_c)ξ^a + P_(bc)ξ^a`; stored `[b][c][a]`.
pub fn bgg_adjoint(f: &TractorFrame, xi: &Jet) -> Result<Vec<f64>> {
    let n = f.dim();
    let s = sym_second(f, xi)?;
    let np2 = (n + 1) as f64;
    let tr: Vec<f64> = (0..n).map(|b| (0..n).map(|d| s[i3(n, b, d, d)]).sum()).collect();
    let mut out = s.clone();
    for b in 0..n {
        for c in 0..n {
            for a in 0..n {
                let mut t = 0.0;
                if a == c {
                    t += tr[b];
                }
                if a == b {
                    t += tr[c];
                }
                out[i3(n, b, c, a)] -= t / np2;
            }
        }
    }
    Ok(out)
}

/// `(W_ab^c_d ξ^d, C_abd ξ^d)` as `([a][b][c], [a][b])`.
pub fn adjoint_normality_residual(f: &TractorFrame, xi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = f.dim();
    let mut w = vec![0.0; n * n * n];
    let mut c = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            c[a * n + b] = (0..n).map(|d| f.inv.cotton(a, b, d) * xi[d]).sum();
            for cc in 0..n {
                w[i3(n, a, b, cc)] = (0..n).map(|d| f.inv.w(a, b, cc, d) * xi[d]).sum();
            }
        }
    }
    (w, c)
}

/// Totally trace-free part of `T_ab^c` symmetric in `(a, b)`.
pub fn trace_free(t: &[f64], n: usize) -> Vec<f64> {
    let tr: Vec<f64> = (0..n).map(|b| (0..n).map(|a| t[i3(n, a, b, a)]).sum()).collect();
    let mut out = t.to_vec();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                if c == a {
                    s += tr[b];
                }
                if c == b {
                    s += tr[a];
                }
                out[i3(n, a, b, c)] -= s / (n as f64 + 1.0);
            }
        }
    }
    out
}

/// `D^sym(ξ) = (∇_(a∇_b)ξ^c + P_(ab)ξ^c + W_d(a^c_b)ξ^d)₀`, `[a][b][c]`.
pub fn symmetry_residual(f: &TractorFrame, xi: &Jet) -> Result<Vec<f64>> {
    let n = f.dim();
    let mut s = sym_second(f, xi)?;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                s[i3(n, a, b, c)] +=
                    (0..n).map(|d| 0.5 * (f.inv.w(d, a, c, b) + f.inv.w(d, b, c, a)) * xi.value[d]).sum::<f64>();
            }
        }
    }
    Ok(trace_free(&s, n))
}

// ---------------------------------------------------------------------------
// Splitting operators as differentiable fields

/// Projective Schouten tensor from `Γ` and `∂Γ` on any scalar type.
pub fn schouten_generic<S: Scalar>(n: usize, g: &[S], dg: &[S]) -> Vec<S> {
    let n3 = n * n * n;
    let gm = |c: usize, a: usize, b: usize| g[(c * n + a) * n + b];
    let dgm = |e: usize, c: usize, a: usize, b: usize| dg[e * n3 + (c * n + a) * n + b];
    let mut ric = vec![S::zero(); n * n];
    for b in 0..n {
        for d in 0..n {
            let mut s = S::zero();
            for c in 0..n {
                s = s + dgm(c, c, b, d) - dgm(b, c, c, d);
                for e in 0..n {
                    s = s + gm(c, c, e) * gm(e, b, d) - gm(c, b, e) * gm(e, c, d);
                }
            }
            ric[b * n + d] = s;
        }
    }
    let nn = n as f64 - 1.0;
    (0..n * n).map(|q| (ric[q] * (nn + 1.0) + ric[(q % n) * n + q / n]) / (nn * (nn + 2.0))).collect()
}

/// `L^{Λ²𝒯*}(k)` as a field, for finite-difference parallelism checks.
#[derive(Clone, Debug)]
pub struct SplitTwoFormField<G, K> {
    pub connection: G,
    pub k: K,
}

impl<G: Field, K: Field> Field for SplitTwoFormField<G, K> {
    fn dim_in(&self) -> usize {
        self.k.dim_in()
    }
    fn dim_out(&self) -> usize {
        (self.k.dim_in() + 1).pow(2)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let r = n + 1;
        let (k, dk) = value_and_partials(&self.k, x);
        let w = self.k.weight();
        let gam = self.connection.eval(x);
        let gt: Vec<S> = (0..n)
            .map(|a| {
                let mut s = S::zero();
                for b in 0..n {
                    s = s + gam[(b * n + b) * n + a];
                }
                s / (n as f64 + 1.0)
            })
            .collect();
        let mut h = vec![S::zero(); r * r];
        for b in 0..n {
            h[1 + b] = k[b];
            h[(1 + b) * r] = -k[b];
            for c in 0..n {
                // Christoffel terms cancel in the antisymmetrisation
                let nbc = dk[b * n + c] + gt[b] * k[c] * w;
                let ncb = dk[c * n + b] + gt[c] * k[b] * w;
                h[(1 + b) * r + 1 + c] = (nbc - ncb) * 0.5;
            }
        }
        h
    }
}

/// `∇_a k_b` of a weighted 1-form as a field, `[a][b]`; the second slot of
/// the prolongation of a Killing form.
#[derive(Clone, Debug)]
pub struct CovariantOneForm<G, K> {
    pub connection: G,
    pub k: K,
}

impl<G: Field, K: Field> Field for CovariantOneForm<G, K> {
    fn dim_in(&self) -> usize {
        self.k.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.k.dim_in().pow(2)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let (k, dk) = value_and_partials(&self.k, x);
        let w = self.k.weight();
        let gam = self.connection.eval(x);
        let mut out = vec![S::zero(); n * n];
        for a in 0..n {
            let mut gt = S::zero();
            for b in 0..n {
                gt = gt + gam[(b * n + b) * n + a];
            }
            gt = gt / (n as f64 + 1.0);
            for b in 0..n {
                let mut s = dk[a * n + b] + gt * k[b] * w;
                for c in 0..n {
                    s = s - gam[(c * n + a) * n + b] * k[c];
                }
                out[a * n + b] = s;
            }
        }
        out
    }
    fn weight(&self) -> f64 {
        self.k.weight()
    }
}

/// `L^𝒜(ξ)` as a field.
#[derive(Clone, Debug)]
pub struct SplitAdjointField<G, V> {
    pub connection: G,
    pub xi: V,
}

struct Nabla1<'a, G, V> {
    connection: &'a G,
    xi: &'a V,
}

impl<G: Field, V: Field> Field for Nabla1<'_, G, V> {
    fn dim_in(&self) -> usize {
        self.xi.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.xi.dim_in().pow(2)
    }
    /// `∇_b ξ^a` stored `[b][a]`.
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let (v, d) = value_and_partials(self.xi, x);
        let gam = self.connection.eval(x);
        let mut out = vec![S::zero(); n * n];
        for b in 0..n {
            for a in 0..n {
                let mut s = d[b * n + a];
                for c in 0..n {
                    s = s + gam[(a * n + b) * n + c] * v[c];
                }
                out[b * n + a] = s;
            }
        }
        out
    }
}

impl<G: Field, V: Field> Field for SplitAdjointField<G, V> {
    fn dim_in(&self) -> usize {
        self.xi.dim_in()
    }
    fn dim_out(&self) -> usize {
        (self.xi.dim_in() + 1).pow(2)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let r = n + 1;
        let np2 = r as f64;
        let inner = Nabla1 { connection: &self.connection, xi: &self.xi };
        let (nx, dnx) = value_and_partials(&inner, x);
        let (gam, dgam) = value_and_partials(&self.connection, x);
        let xi = self.xi.eval(x);
        let p = schouten_generic(n, &gam, &dgam);
        let mut div = S::zero();
        for c in 0..n {
            div = div + nx[c * n + c];
        }
        let mut m = vec![S::zero(); r * r];
        m[0] = -div / np2;
        for b in 0..n {
            // ∇_b div ξ = ∂_b div ξ (weight 0 scalar)
            let mut ddiv = S::zero();
            for c in 0..n {
                ddiv = ddiv + dnx[b * n * n + c * n + c];
            }
            let mut pxi = S::zero();
            for c in 0..n {
                pxi = pxi + p[b * n + c] * xi[c];
            }
            m[1 + b] = -ddiv / np2 - pxi;
            m[(1 + b) * r] = xi[b];
            for a in 0..n {
                let mut v = nx[b * n + a];
                if a == b {
                    v = v - div / np2;
                }
                m[(1 + a) * r + 1 + b] = v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::FlatConnection;
    use crate::jets::{eval_jet, ChartBox};
    use crate::tractor::TractorSplitting;

    struct XdY;
    impl Field for XdY {
        fn dim_in(&self) -> usize {
            3
        }
        fn dim_out(&self) -> usize {
            3
        }
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![S::zero(), x[0], S::zero()]
        }
        fn weight(&self) -> f64 {
            2.0
        }
    }

    #[test]
    fn killing_operator_of_x0_dx1() {
        let s = TractorSplitting::new(FlatConnection(3), ChartBox::cube(3, 2.0));
        let f = s.frame(&[0.3, 0.1, -0.2]).unwrap();
        let k = eval_jet(&XdY, &f.x, 1, None).unwrap();
        let d = bgg_killing(&f, &k).unwrap();
        let mut want = vec![0.0; 9];
        want[1] = 0.5;
        want[3] = 0.5;
        assert_eq!(d, want);
    }

    #[test]
    fn trace_free_kills_traces() {
        let n = 3;
        let mut t = vec![0.0; 27];
        for (q, v) in t.iter_mut().enumerate() {
            *v = (q as f64 * 0.37).sin();
        }
        // symmetrise in (a,b)
        let mut s = t.clone();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    s[i3(n, a, b, c)] = 0.5 * (t[i3(n, a, b, c)] + t[i3(n, b, a, c)]);
                }
            }
        }
        let tf = trace_free(&s, n);
        for b in 0..n {
            let tr: f64 = (0..n).map(|a| tf[i3(n, a, b, a)]).sum();
            assert!(tr.abs() < 1e-14);
        }
    }
}
