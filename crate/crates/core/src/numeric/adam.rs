//! Bias-corrected Adam updates over flat parameter slices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Moment accumulators and hyperparameters for one parameter group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(len: usize, learning_rate: f64) -> Self {
        AdamState {
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update applied in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::shape(
            format!("{} params", state.first_moment.len()),
            format!("{} params / {} grads", params.len(), grads.len()),
        ));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.first_moment[i] / bc1;
        let v_hat = state.second_moment[i] / bc2;
        params[i] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        if !params[i].is_finite() {
            return Err(Error::Degenerate(format!("parameter {i} became non-finite")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = vec![0.3, -1.2, 4.5];
        let orig = p.clone();
        let mut st = AdamState::new(3, 0.1);
        for _ in 0..5 {
            adam_step(&mut p, &[0.0, 0.0, 0.0], &mut st).unwrap();
        }
        assert_eq!(p, orig);
        assert_eq!(st.step_count(), 5);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // With constant gradient 1.0 the bias-corrected first step is
        // lr * 1 / (1 + eps) ~ lr.
        let mut p = vec![1.0, 2.0];
        let mut st = AdamState::new(2, 0.1);
        adam_step(&mut p, &[1.0, 1.0], &mut st).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-6, "got {}", p[0]);
        assert!((p[1] - 1.9).abs() < 1e-6);
    }

    #[test]
    fn converges_on_quadratic_bowl() {
        let mut x = vec![3.0];
        let mut st = AdamState::new(1, 0.1);
        for _ in 0..200 {
            let g = vec![2.0 * x[0]];
            adam_step(&mut x, &g, &mut st).unwrap();
        }
        assert!(x[0].abs() < 1e-3, "x = {}", x[0]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = vec![1.0];
        let mut st = AdamState::new(2, 0.1);
        assert!(adam_step(&mut p, &[1.0], &mut st).is_err());
    }
}
