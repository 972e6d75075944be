//! Symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Small dense symmetric matrices only (covariance matrices); accuracy over
//! speed.

use crate::error::{Error, Result};
use crate::numeric::matrix::DenseMatrix;

/// Eigenvalues (descending) and matching eigenvectors (rows) of a symmetric
/// matrix.
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    /// Row `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: DenseMatrix,
}

/// Jacobi eigendecomposition of a symmetric matrix.
pub fn symmetric_eigen(mat: &DenseMatrix) -> Result<SymmetricEigen> {
    let n = mat.rows();
    if mat.cols() != n {
        return Err(Error::shape(format!("{n}x{n} symmetric"), format!("{n}x{}", mat.cols())));
    }
    let mut a = mat.clone();
    // v starts as identity; accumulates rotations so columns become eigenvectors.
    let mut v = DenseMatrix::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }

    let off = |a: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a.get(i, j) * a.get(i, j);
            }
        }
        s
    };
    let scale: f64 = (0..n).map(|i| a.get(i, i).abs()).fold(1e-300, f64::max);
    let tol = 1e-30 * scale * scale;

    for _sweep in 0..100 {
        if off(&a) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Rotate rows/cols p and q of `a`.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a.get(i, i), i)).collect();
    // Descending by eigenvalue; index tie-break keeps the order deterministic.
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (out_row, &(val, col)) in pairs.iter().enumerate() {
        eigenvalues.push(val);
        for k in 0..n {
            eigenvectors.set(out_row, k, v.get(k, col));
        }
        // Deterministic sign: first entry with the largest magnitude is positive.
        let row = eigenvectors.row(out_row);
        let lead = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap().then(b.0.cmp(&a.0)))
            .map(|(_, &v)| v)
            .unwrap_or(1.0);
        if lead < 0.0 {
            for k in 0..n {
                let x = eigenvectors.get(out_row, k);
                eigenvectors.set(out_row, k, -x);
            }
        }
    }
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
    })
}
