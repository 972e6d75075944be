//! Principal component analysis over a sample covariance eigendecomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::eigen::symmetric_eigen;
use crate::numeric::matrix::{dot, ensure_finite, DenseMatrix, DenseVector};

/// Fitted PCA model: centering mean plus an orthonormal projection basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: DenseVector,
    /// `target_dim x input_dim`; rows are orthonormal principal directions.
    pub components: DenseMatrix,
    /// Covariance eigenvalues for the retained directions, non-increasing.
    pub explained_variance: Vec<f64>,
    /// Eigenvalues of the discarded directions, non-increasing.
    pub discarded_variance: Vec<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.components.cols()
    }

    pub fn target_dim(&self) -> usize {
        self.components.rows()
    }

    /// Project a point onto the principal directions.
    pub fn transform(&self, point: &[f64]) -> Result<DenseVector> {
        if point.len() != self.input_dim() {
            return Err(Error::shape(format!("{} dims", self.input_dim()), format!("{}", point.len())));
        }
        let centered: Vec<f64> = point.iter().zip(self.mean.iter()).map(|(x, m)| x - m).collect();
        Ok((0..self.target_dim()).map(|k| dot(self.components.row(k), &centered)).collect())
    }

    /// Map a reduced point back into the input space.
    pub fn reconstruct(&self, reduced: &[f64]) -> Result<DenseVector> {
        if reduced.len() != self.target_dim() {
            return Err(Error::shape(format!("{} dims", self.target_dim()), format!("{}", reduced.len())));
        }
        let mut out = self.mean.clone();
        for (k, &z) in reduced.iter().enumerate() {
            for (o, &c) in out.iter_mut().zip(self.components.row(k).iter()) {
                *o += z * c;
            }
        }
        Ok(out)
    }
}

/// Fit a PCA basis of `target_dim` maximal-variance directions.
///
/// Errors on fewer than two points, on `target_dim` exceeding the input
/// dimension, and on zero-variance (all points identical) input.
pub fn pca_fit(points: &[DenseVector], target_dim: usize) -> Result<PcaModel> {
    if points.len() < 2 {
        return Err(Error::invalid(format!("pca_fit needs at least 2 points, got {}", points.len())));
    }
    let dim = points[0].len();
    if target_dim == 0 || target_dim > dim {
        return Err(Error::invalid(format!(
            "target_dim {target_dim} out of range for input dim {dim}"
        )));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::shape(format!("{dim} dims"), format!("{}", p.len())));
        }
        ensure_finite(p, "pca input point")?;
    }

    let n = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, &x) in mean.iter_mut().zip(p.iter()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    // Sample covariance (1/(n-1) normalization).
    let mut cov = DenseMatrix::zeros(dim, dim);
    for p in points {
        let c: Vec<f64> = p.iter().zip(mean.iter()).map(|(x, m)| x - m).collect();
        cov.add_outer(&c, &c);
    }
    let denom = n - 1.0;
    cov.as_mut_slice().iter_mut().for_each(|v| *v /= denom);

    let total_variance: f64 = (0..dim).map(|i| cov.get(i, i)).sum();
    if total_variance <= 1e-24 {
        return Err(Error::Degenerate(
            "zero variance: all points are identical, no principal directions exist".into(),
        ));
    }

    let eig = symmetric_eigen(&cov)?;
    let mut components = DenseMatrix::zeros(target_dim, dim);
    for k in 0..target_dim {
        components.row_mut(k).copy_from_slice(eig.eigenvectors.row(k));
    }
    let explained_variance: Vec<f64> = eig.eigenvalues[..target_dim].to_vec();
    // Clamp tiny negative eigenvalues from roundoff.
    let discarded_variance: Vec<f64> = eig.eigenvalues[target_dim..]
        .iter()
        .map(|&v| v.max(0.0))
        .collect();

    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        discarded_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_points() -> Vec<DenseVector> {
        // Points on the line t * (1, 2, -1) + (0.5, 0, 0).
        (0..20)
            .map(|i| {
                let t = i as f64 * 0.37 - 3.0;
                vec![0.5 + t, 2.0 * t, -t]
            })
            .collect()
    }

    #[test]
    fn rank_one_data_recovers_line_direction() {
        let pts = line_points();
        let model = pca_fit(&pts, 1).unwrap();
        let dir = [1.0, 2.0, -1.0];
        let norm = (6.0_f64).sqrt();
        let unit: Vec<f64> = dir.iter().map(|v| v / norm).collect();
        let c = model.components.row(0);
        let cosine = dot(c, &unit).abs();
        assert!((cosine - 1.0).abs() < 1e-10, "component parallel to the line");
        assert!(model.explained_variance[0] > 0.0);
        let residual: f64 = model.discarded_variance.iter().sum();
        assert!(residual < 1e-8, "residual variance {residual}");
    }

    #[test]
    fn deterministic_on_identical_input() {
        let pts = line_points();
        let a = pca_fit(&pts, 2).unwrap();
        let b = pca_fit(&pts, 2).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.components, b.components);
        assert_eq!(a.explained_variance, b.explained_variance);
    }

    #[test]
    fn all_identical_points_error_names_zero_variance() {
        let pts = vec![vec![1.0, 2.0]; 5];
        let err = pca_fit(&pts, 1).unwrap_err();
        assert!(err.to_string().contains("zero variance"), "{err}");
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(pca_fit(&[vec![1.0, 2.0]], 1).is_err());
    }

    #[test]
    fn target_dim_above_input_rejected() {
        let pts = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]];
        assert!(pca_fit(&pts, 3).is_err());
    }

    #[test]
    fn explained_variance_non_increasing() {
        let pts = line_points()
            .into_iter()
            .enumerate()
            .map(|(i, mut p)| {
                p[1] += (i as f64 * 1.7).sin();
                p
            })
            .collect::<Vec<_>>();
        let model = pca_fit(&pts, 3).unwrap();
        for w in model.explained_variance.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }
}
