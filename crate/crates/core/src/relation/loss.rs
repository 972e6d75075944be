//! Classification and translation-embedding losses for the multitask
//! relation model.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::matrix::DenseMatrix;
use crate::relation::schema::RelationSchema;

/// Weight and margin of the translation-embedding auxiliary task.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MultitaskLossConfig {
    lambda: f64,
    gamma: f64,
}

impl MultitaskLossConfig {
    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be > 0, got {lambda}")));
        }
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be > 0, got {gamma}")));
        }
        Ok(MultitaskLossConfig { lambda, gamma })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Default for MultitaskLossConfig {
    fn default() -> Self {
        MultitaskLossConfig {
            lambda: 1e-5,
            gamma: 1.0,
        }
    }
}

/// Batch cross-entropy: `-Σ log P(y | F_final)` (sum convention).
pub fn ce_loss(distributions: &[Vec<f64>], gold: &[usize]) -> Result<f64> {
    if distributions.is_empty() || distributions.len() != gold.len() {
        return Err(Error::invalid(format!(
            "batch of {} distributions vs {} labels",
            distributions.len(),
            gold.len()
        )));
    }
    let mut total = 0.0;
    for (p, &y) in distributions.iter().zip(gold.iter()) {
        if y >= p.len() {
            return Err(Error::invalid(format!("gold label {y} out of range ({} classes)", p.len())));
        }
        total -= p[y].max(1e-300).ln();
    }
    Ok(total)
}

/// Mean-reduced cross-entropy, for reporting across batches.
pub fn ce_loss_mean(distributions: &[Vec<f64>], gold: &[usize]) -> Result<f64> {
    ce_loss(distributions, gold).map(|l| l / distributions.len() as f64)
}

/// L1 translation distance `‖F_ent1 + rel − F_ent2‖₁`.
pub fn l1_translation_distance(f_ent1: &[f64], rel: &[f64], f_ent2: &[f64]) -> f64 {
    f_ent1
        .iter()
        .zip(rel.iter())
        .zip(f_ent2.iter())
        .map(|((a, r), b)| (a + r - b).abs())
        .sum()
}

/// Margin hinge for one instance:
/// `[γ + d(F_ent1 + E(true), F_ent2) − d(F_ent1 + E(fake), F_ent2)]₊`.
pub fn translation_margin_loss(
    f_ent1: &[f64],
    f_ent2: &[f64],
    true_rel: usize,
    fake_rel: usize,
    gamma: f64,
    rel_embed: &DenseMatrix,
) -> Result<f64> {
    if true_rel == fake_rel {
        return Err(Error::invalid(format!(
            "degenerate contrast: true and fake relation are both {true_rel}"
        )));
    }
    if true_rel >= rel_embed.rows() || fake_rel >= rel_embed.rows() {
        return Err(Error::UnknownId(format!("relation index {true_rel} or {fake_rel}")));
    }
    if f_ent1.len() != rel_embed.cols() || f_ent2.len() != rel_embed.cols() {
        return Err(Error::shape(
            format!("{} dims", rel_embed.cols()),
            format!("{} / {}", f_ent1.len(), f_ent2.len()),
        ));
    }
    let d_true = l1_translation_distance(f_ent1, rel_embed.row(true_rel), f_ent2);
    let d_fake = l1_translation_distance(f_ent1, rel_embed.row(fake_rel), f_ent2);
    Ok((gamma + d_true - d_fake).max(0.0))
}

/// Uniform pseudo-relation draw over the substantive relations, excluding
/// the true label. An "Other" true label excludes nothing.
pub fn sample_fake_relation(
    schema: &RelationSchema,
    true_class: usize,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    let n = schema.relations.len();
    let pool: Vec<usize> = (0..n).filter(|&r| r != true_class).collect();
    if pool.is_empty() {
        return Err(Error::invalid(
            "cannot sample a pseudo relation: schema has only one substantive relation",
        ));
    }
    Ok(pool[rng.random_range(0..pool.len())])
}

/// Joint objective: `L = L1 + λ·L2`.
pub fn total_loss(l1: f64, l2: f64, lambda: f64) -> f64 {
    l1 + lambda * l2
}
