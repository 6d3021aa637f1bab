//! Cyclic Jacobi eigenvalue iteration for small dense symmetric matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{Spectrum, SymMatrix};

const MAX_SWEEPS: usize = 100;

fn off_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn run(a: &SymMatrix, want_vectors: bool) -> Result<(Spectrum, Option<DMatrix<f64>>)> {
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = want_vectors.then(|| DMatrix::<f64>::identity(n, n));
    let target = 1e-12 * a.frobenius();

    let mut sweeps = 0;
    loop {
        let off = off_norm(&m);
        if off <= target {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::Convergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                // Rotation zeroing (p, q): tan(theta) = t is the smaller root of
                // t^2 + 2 tau t - 1 = 0.
                let tau = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;

                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = v.map(|v| DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]));
    Ok((Spectrum::from_unsorted(values), vectors))
}

/// Descending eigenvalues by cyclic Jacobi rotations. Iterates until the
/// off-diagonal Frobenius norm is below `1e-12 * |A|_F`.
pub fn sym_eigen(a: &SymMatrix) -> Result<Spectrum> {
    run(a, false).map(|(s, _)| s)
}

/// As [`sym_eigen`], also returning the accumulated rotation `V` with
/// `A = V diag(lambda) V^T`; column `k` belongs to `lambda(k + 1)`.
pub fn sym_eigen_vectors(a: &SymMatrix) -> Result<(Spectrum, DMatrix<f64>)> {
    run(a, true).map(|(s, v)| (s, v.expect("vectors requested")))
}
