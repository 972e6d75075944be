//! Shared numeric substrate: dense linear algebra, PCA, Mean-Shift,
//! circular statistics, Adam, and the finite-difference gradient oracle
//! used by every trainable module's tests.

pub mod adam;
pub mod circular;
pub mod eigen;
pub mod matrix;
pub mod mean_shift;
pub mod pca;

pub use adam::{adam_step, AdamState};
pub use circular::{circular_mean, wrap_angle};
pub use matrix::{dot, ensure_finite, sq_dist, DenseMatrix, DenseVector};
pub use mean_shift::{mean_shift, Kernel, MeanShiftConfig, MeanShiftResult};
pub use pca::{pca_fit, PcaModel};

use crate::error::{Error, Result};

/// Numerically stable `log(Σ exp(v))`.
///
/// Exact for a single element; shifts by the max so `[1000, 1000]` does not
/// overflow.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty(), "log_sum_exp of empty slice");
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        // All -inf (or a NaN/ +inf slipped in): the shift trick would produce
        // NaN, return the max itself.
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Gaussian error linear unit, tanh approximation.
pub fn gelu(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
    0.5 * x * (1.0 + (C * (x + 0.044715 * x * x * x)).tanh())
}

/// Derivative of [`gelu`].
pub fn gelu_prime(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4;
    let inner = C * (x + 0.044715 * x * x * x);
    let t = inner.tanh();
    let dinner = C * (1.0 + 3.0 * 0.044715 * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner
}

/// Central-difference gradient of a scalar function at `point`.
///
/// This is the universal test oracle for analytic gradients; it must stay
/// independent of any backprop code it is used to check.
pub fn finite_diff_grad<F>(mut f: F, point: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = point.to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + eps;
        let fp = f(&x);
        x[i] = orig - eps;
        let fm = f(&x);
        x[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Degenerate(format!(
                "function not finite near coordinate {i} (f+={fp}, f-={fm})"
            )));
        }
        grad[i] = (fp - fm) / (2.0 * eps);
    }
    Ok(grad)
}

/// Largest relative disagreement between an analytic and a reference
/// gradient: `|a - b| / max(1, |a|, |b|)` maximized over coordinates.
pub fn max_relative_error(analytic: &[f64], reference: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(reference.iter())
        .map(|(&a, &b)| (a - b).abs() / 1.0_f64.max(a.abs()).max(b.abs()))
        .fold(0.0, f64::max)
}
