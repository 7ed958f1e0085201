//! Small dense linear algebra on row-major `Vec`s.
//!
//! The generic routines run on any [`Scalar`] so they can sit inside
//! differentiated fields; pivoting looks at real parts only.

use nalgebra::{DMatrix, DVector};

use crate::jets::Scalar;

/// Gauss–Jordan inverse with partial pivoting. Returns `(inverse, det)`.
pub fn inverse_with_det<S: Scalar>(a: &[S], n: usize) -> Option<(Vec<S>, S)> {
    let mut m = a.to_vec();
    let mut inv = vec![S::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = S::one();
    }
    let mut det = S::one();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| {
            m[r * n + col].re().abs().partial_cmp(&m[s * n + col].re().abs()).unwrap()
        })?;
        if m[piv * n + col].re() == 0.0 || !m[piv * n + col].re().is_finite() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det = det * p;
        let pinv = p.recip();
        for k in 0..n {
            m[col * n + k] = m[col * n + k] * pinv;
            inv[col * n + k] = inv[col * n + k] * pinv;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                for k in 0..n {
                    m[r * n + k] = m[r * n + k] - f * m[col * n + k];
                    inv[r * n + k] = inv[r * n + k] - f * inv[col * n + k];
                }
            }
        }
    }
    Some((inv, det))
}

pub fn inverse<S: Scalar>(a: &[S], n: usize) -> Option<Vec<S>> {
    inverse_with_det(a, n).map(|(i, _)| i)
}

pub fn det<S: Scalar>(a: &[S], n: usize) -> S {
    let mut m = a.to_vec();
    let mut det = S::one();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| m[r * n + col].re().abs().partial_cmp(&m[s * n + col].re().abs()).unwrap())
            .unwrap();
        if m[piv * n + col].re() == 0.0 {
            return S::zero();
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det = det * p;
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            for k in col..n {
                m[r * n + k] = m[r * n + k] - f * m[col * n + k];
            }
        }
    }
    det
}

pub fn matmul<S: Scalar>(a: &[S], b: &[S], n: usize) -> Vec<S> {
    let mut c = vec![S::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] = c[i * n + j] + aik * b[k * n + j];
            }
        }
    }
    c
}

pub fn matvec(a: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect()
}

pub fn transpose<S: Scalar>(a: &[S], n: usize) -> Vec<S> {
    let mut t = a.to_vec();
    for i in 0..n {
        for j in 0..n {
            t[i * n + j] = a[j * n + i];
        }
    }
    t
}

pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let m = DMatrix::from_row_slice(n, n, a);
    let sym = (&m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// `(positive, negative)` eigenvalue counts with threshold `rel·‖a‖`.
/// Near-zero eigenvalues are counted in neither.
pub fn signature(a: &[f64], n: usize, rel: f64) -> (usize, usize) {
    let ev = sym_eigenvalues(a, n);
    let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let thr = rel * scale.max(f64::MIN_POSITIVE);
    (ev.iter().filter(|&&v| v > thr).count(), ev.iter().filter(|&&v| v < -thr).count())
}

/// Least-squares solution of `A x = b` for a `rows × cols` matrix.
pub fn lstsq(a: &[f64], rows: usize, cols: usize, b: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(rows, cols, a);
    let rhs = DVector::from_row_slice(b);
    let svd = m.svd(true, true);
    svd.solve(&rhs, 1e-13).map(|x| x.iter().copied().collect()).unwrap_or_else(|_| vec![0.0; cols])
}

/// Solve a square system; `None` if singular.
pub fn solve(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    m.lu().solve(&DVector::from_row_slice(b)).map(|x| x.iter().copied().collect())
}

/// Orthonormal basis of the null space of a `rows × cols` matrix.
pub fn null_space(a: &[f64], rows: usize, cols: usize, tol: f64) -> Vec<Vec<f64>> {
    let m = DMatrix::from_row_slice(rows, cols, a);
    let mtm = m.transpose() * &m;
    let eig = mtm.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev.abs() <= tol * scale {
            out.push((ev, eig.eigenvectors.column(k).iter().copied().collect()));
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out.into_iter().map(|(_, v)| v).collect()
}

/// Condition number `σ_max/σ_min` of a square matrix (∞ when singular).
pub fn condition(a: &[f64], n: usize) -> f64 {
    let sv = DMatrix::from_row_slice(n, n, a).singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo <= hi * 1e-300 { f64::INFINITY } else { hi / lo }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_det_of_small_matrix() {
        let a = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        let (inv, d) = inverse_with_det(&a, 3).unwrap();
        assert!((d - 18.0).abs() < 1e-12);
        assert!((det(&a, 3) - 18.0).abs() < 1e-12);
        let p = matmul(&a, &inv, 3);
        assert!(max_abs_diff(&p, &identity(3)) < 1e-14);
    }

    #[test]
    fn signature_counts() {
        assert_eq!(signature(&[2.0, 0.0, 0.0, -1.0], 2, 1e-8), (1, 1));
        assert_eq!(signature(&[1.0, 0.0, 0.0, 0.0], 2, 1e-8), (1, 0));
    }

    #[test]
    fn null_space_of_rank_one() {
        let ns = null_space(&[1.0, 1.0, 0.0], 1, 3, 1e-12);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!((v[0] + v[1]).abs() < 1e-12);
        }
    }
}
