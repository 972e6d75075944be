//! Mean-Shift mode seeking with a flat kernel over a bandwidth sphere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::matrix::{sq_dist, DenseVector};

/// Kernel weighting the shift vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Kernel {
    /// Uniform weight over the points inside the bandwidth sphere; this is
    /// the plain shift vector `M_g(b) = mean(x_i in S_g) - b`.
    #[default]
    Flat,
    /// Gaussian weights over all points, scale = bandwidth.
    Gaussian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanShiftConfig {
    /// Sphere radius; `None` picks half the median pairwise distance.
    pub bandwidth: Option<f64>,
    pub kernel: Kernel,
    pub max_iter: usize,
    /// Stop iterating a point once the shift norm falls below this.
    pub tol: f64,
}

impl Default for MeanShiftConfig {
    fn default() -> Self {
        MeanShiftConfig {
            bandwidth: None,
            kernel: Kernel::Flat,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

/// Modes found by Mean-Shift plus the point-to-mode assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanShiftResult {
    pub modes: Vec<DenseVector>,
    /// `assignments[i]` is the mode index for input point `i`.
    pub assignments: Vec<usize>,
    /// The bandwidth actually used (resolved default included).
    pub bandwidth: f64,
}

impl MeanShiftResult {
    pub fn cluster_members(&self) -> Vec<Vec<usize>> {
        let mut clusters = vec![Vec::new(); self.modes.len()];
        for (i, &m) in self.assignments.iter().enumerate() {
            clusters[m].push(i);
        }
        clusters
    }
}

/// Median pairwise distance on a subsample, halved. Used when no bandwidth
/// is configured.
pub fn default_bandwidth(points: &[DenseVector]) -> f64 {
    let step = points.len().div_ceil(2000);
    let sample: Vec<&DenseVector> = points.iter().step_by(step.max(1)).collect();
    let mut dists = Vec::new();
    for i in 0..sample.len() {
        for j in (i + 1)..sample.len() {
            dists.push(sq_dist(sample[i], sample[j]).sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = dists[dists.len() / 2];
    if median > 0.0 {
        median * 0.5
    } else {
        1.0
    }
}

/// Iterate every point along its shift vector until convergence, then merge
/// converged positions within `bandwidth/2` into modes.
pub fn mean_shift(points: &[DenseVector], config: &MeanShiftConfig) -> Result<MeanShiftResult> {
    if points.is_empty() {
        return Err(Error::invalid("mean_shift needs at least one point"));
    }
    if let Some(b) = config.bandwidth {
        if b <= 0.0 || !b.is_finite() {
            return Err(Error::invalid(format!("bandwidth must be > 0, got {b}")));
        }
    }
    let dim = points[0].len();
    for p in points {
        if p.len() != dim {
            return Err(Error::shape(format!("{dim} dims"), format!("{}", p.len())));
        }
    }
    let bandwidth = config.bandwidth.unwrap_or_else(|| default_bandwidth(points));
    let sq_bw = bandwidth * bandwidth;
    let sq_tol = config.tol * config.tol;

    let mut converged: Vec<DenseVector> = Vec::with_capacity(points.len());
    for start in points {
        let mut b = start.clone();
        for _ in 0..config.max_iter {
            let mut target = vec![0.0; dim];
            let mut weight = 0.0;
            match config.kernel {
                Kernel::Flat => {
                    for x in points {
                        if sq_dist(x, &b) < sq_bw {
                            for (t, &xv) in target.iter_mut().zip(x.iter()) {
                                *t += xv;
                            }
                            weight += 1.0;
                        }
                    }
                }
                Kernel::Gaussian => {
                    for x in points {
                        let w = (-sq_dist(x, &b) / (2.0 * sq_bw)).exp();
                        for (t, &xv) in target.iter_mut().zip(x.iter()) {
                            *t += w * xv;
                        }
                        weight += w;
                    }
                }
            }
            if weight <= 0.0 {
                break; // isolated under Gaussian underflow; keep position
            }
            target.iter_mut().for_each(|t| *t /= weight);
            let shift_sq = sq_dist(&target, &b);
            b = target;
            if shift_sq < sq_tol {
                break;
            }
        }
        converged.push(b);
    }

    // Merge converged positions within bandwidth/2 of an existing mode.
    let merge_sq = (bandwidth * 0.5) * (bandwidth * 0.5);
    let mut modes: Vec<DenseVector> = Vec::new();
    let mut assignments = vec![0usize; points.len()];
    for (i, pos) in converged.iter().enumerate() {
        let found = modes.iter().position(|m| sq_dist(m, pos) <= merge_sq);
        match found {
            Some(k) => assignments[i] = k,
            None => {
                modes.push(pos.clone());
                assignments[i] = modes.len() - 1;
            }
        }
    }

    Ok(MeanShiftResult {
        modes,
        assignments,
        bandwidth,
    })
}
