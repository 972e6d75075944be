//! RotatE training: margin-sigmoid loss with corrupted-head/tail negative
//! sampling, Adam, and halving learning-rate decay on stalled validation
//! MRR.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kge::eval::{eval_link_prediction, QuerySide, RotateScorer};
use crate::kge::rotate::{KgeTables, Norm};
use crate::kge::store::TripleStore;
use crate::numeric::matrix::DenseMatrix;
use crate::numeric::AdamState;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KgeTrainConfig {
    /// Embedding dimension `D` (complex coordinates per entity).
    pub dim: usize,
    /// Loss margin γ.
    pub margin: f64,
    /// Corrupted triples per positive.
    pub negatives: usize,
    pub learning_rate: f64,
    /// Halve the learning rate after this many non-improving validation
    /// evaluations.
    pub lr_decay_patience: usize,
    /// Weight negatives by softmax of their scores instead of uniformly.
    pub self_adversarial: bool,
    pub adversarial_temperature: f64,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs between validation MRR evaluations (0 disables decay).
    pub eval_every: usize,
    pub norm: Norm,
    /// Entities initialize uniformly in `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for KgeTrainConfig {
    fn default() -> Self {
        KgeTrainConfig {
            dim: 64,
            margin: 9.0,
            negatives: 8,
            learning_rate: 0.02,
            lr_decay_patience: 3,
            self_adversarial: false,
            adversarial_temperature: 1.0,
            seed: 0,
            epochs: 300,
            batch_size: 512,
            eval_every: 10,
            norm: Norm::L1,
            init_scale: 0.5,
        }
    }
}

impl KgeTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("embedding dimension must be >= 1"));
        }
        if self.margin <= 0.0 {
            return Err(Error::invalid(format!("margin must be > 0, got {}", self.margin)));
        }
        if self.negatives == 0 {
            return Err(Error::invalid("need at least one negative per positive"));
        }
        Ok(())
    }
}

/// One positive triple with its corrupted negatives.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub positive: [usize; 3],
    pub negatives: Vec<[usize; 3]>,
}

/// Gradients over the embedding tables.
pub struct KgeGrads {
    pub entity: DenseMatrix,
    pub relation: DenseMatrix,
}

impl KgeGrads {
    pub fn zeros(tables: &KgeTables) -> Self {
        KgeGrads {
            entity: DenseMatrix::zeros(tables.entity.rows(), tables.entity.cols()),
            relation: DenseMatrix::zeros(tables.relation.rows(), tables.relation.cols()),
        }
    }

    pub fn reset(&mut self) {
        self.entity.fill(0.0);
        self.relation.fill(0.0);
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Accumulate `coeff * d(distance)/d(params)` for one triple.
fn accumulate_distance_grad(
    tables: &KgeTables,
    triple: [usize; 3],
    coeff: f64,
    norm: Norm,
    grads: &mut KgeGrads,
) {
    let [h, r, t] = triple;
    let d = tables.dim;
    let (hre, him) = tables.entity_parts(h);
    let (tre, tim) = tables.entity_parts(t);
    let phases = tables.relation_phases(r);

    // For L2 the per-coordinate weight is 1/total distance.
    let total = match norm {
        Norm::L1 => 0.0,
        Norm::L2 => tables.triple_distance(h, r, t, Norm::L2),
    };

    for j in 0..d {
        let (s, c) = phases[j].sin_cos();
        let hr_re = hre[j] * c - him[j] * s;
        let hr_im = hre[j] * s + him[j] * c;
        let vre = hr_re - tre[j];
        let vim = hr_im - tim[j];
        let denom = match norm {
            Norm::L1 => (vre * vre + vim * vim).sqrt(),
            Norm::L2 => total,
        };
        if denom < 1e-12 {
            continue;
        }
        let ure = vre / denom;
        let uim = vim / denom;
        {
            let gh = grads.entity.row_mut(h);
            gh[j] += coeff * (ure * c + uim * s);
            gh[d + j] += coeff * (-ure * s + uim * c);
        }
        {
            let gt = grads.entity.row_mut(t);
            gt[j] -= coeff * ure;
            gt[d + j] -= coeff * uim;
        }
        grads.relation.row_mut(r)[j] += coeff * (-ure * hr_im + uim * hr_re);
    }
}

/// The RotatE training objective over a batch of examples:
/// `Σ [softplus(d_pos − γ) + Σ_i w_i softplus(γ − d_neg_i)]`
/// with uniform weights or detached self-adversarial weights.
pub fn rotate_loss(
    tables: &KgeTables,
    examples: &[TrainingExample],
    margin: f64,
    self_adversarial: bool,
    temperature: f64,
    norm: Norm,
) -> f64 {
    rotate_loss_impl(tables, examples, margin, self_adversarial, temperature, norm, None)
}

/// Same objective plus analytic gradients accumulated into `grads`.
pub fn rotate_loss_and_grads(
    tables: &KgeTables,
    examples: &[TrainingExample],
    margin: f64,
    self_adversarial: bool,
    temperature: f64,
    norm: Norm,
    grads: &mut KgeGrads,
) -> f64 {
    rotate_loss_impl(tables, examples, margin, self_adversarial, temperature, norm, Some(grads))
}

fn rotate_loss_impl(
    tables: &KgeTables,
    examples: &[TrainingExample],
    margin: f64,
    self_adversarial: bool,
    temperature: f64,
    norm: Norm,
    mut grads: Option<&mut KgeGrads>,
) -> f64 {
    let mut loss = 0.0;
    for ex in examples {
        let [h, r, t] = ex.positive;
        let d_pos = tables.triple_distance(h, r, t, norm);
        loss += softplus(d_pos - margin);
        if let Some(g) = grads.as_deref_mut() {
            accumulate_distance_grad(tables, ex.positive, sigmoid(d_pos - margin), norm, g);
        }
        if ex.negatives.is_empty() {
            continue;
        }
        let dists: Vec<f64> = ex
            .negatives
            .iter()
            .map(|&[nh, nr, nt]| tables.triple_distance(nh, nr, nt, norm))
            .collect();
        // Detached weights: constants w.r.t. the parameters.
        let weights: Vec<f64> = if self_adversarial {
            let logits: Vec<f64> = dists.iter().map(|&d| -temperature * d).collect();
            let lse = crate::numeric::log_sum_exp(&logits);
            logits.iter().map(|&l| (l - lse).exp()).collect()
        } else {
            vec![1.0 / ex.negatives.len() as f64; ex.negatives.len()]
        };
        for ((neg, &d_neg), &w) in ex.negatives.iter().zip(dists.iter()).zip(weights.iter()) {
            loss += w * softplus(margin - d_neg);
            if let Some(g) = grads.as_deref_mut() {
                accumulate_distance_grad(tables, *neg, -w * sigmoid(margin - d_neg), norm, g);
            }
        }
    }
    loss
}

/// Draw corrupted triples: a fair coin picks head or tail, replaced by a
/// uniform entity.
pub fn sample_negatives(
    positive: [usize; 3],
    n_entities: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<[usize; 3]> {
    (0..count)
        .map(|_| {
            let e = rng.random_range(0..n_entities);
            if rng.random::<bool>() {
                [e, positive[1], positive[2]]
            } else {
                [positive[0], positive[1], e]
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KgeTrainReport {
    pub epoch_losses: Vec<f64>,
    /// `(epoch, filtered validation MRR)` at each evaluation point.
    pub valid_mrr: Vec<(usize, f64)>,
    pub final_learning_rate: f64,
}

/// Train RotatE embeddings on the store's train partition.
pub fn train_rotate(store: &TripleStore, config: &KgeTrainConfig) -> Result<(KgeTables, KgeTrainReport)> {
    config.validate()?;
    if store.train.is_empty() {
        return Err(Error::invalid("train partition is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tables = KgeTables::init(
        store.entity_count(),
        store.relation_count(),
        config.dim,
        config.init_scale,
        &mut rng,
    );
    let mut grads = KgeGrads::zeros(&tables);
    let mut st_entity = AdamState::new(tables.entity.as_slice().len(), config.learning_rate);
    let mut st_relation = AdamState::new(tables.relation.as_slice().len(), config.learning_rate);

    let mut order: Vec<usize> = (0..store.train.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut valid_mrr = Vec::new();
    let mut best_mrr = f64::NEG_INFINITY;
    let mut stale = 0usize;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let examples: Vec<TrainingExample> = chunk
                .iter()
                .map(|&i| TrainingExample {
                    positive: store.train[i],
                    negatives: sample_negatives(store.train[i], store.entity_count(), config.negatives, &mut rng),
                })
                .collect();
            epoch_loss += rotate_loss_and_grads(
                &tables,
                &examples,
                config.margin,
                config.self_adversarial,
                config.adversarial_temperature,
                config.norm,
                &mut grads,
            );
            crate::numeric::adam_step(tables.entity.as_mut_slice(), grads.entity.as_slice(), &mut st_entity)?;
            crate::numeric::adam_step(tables.relation.as_mut_slice(), grads.relation.as_slice(), &mut st_relation)?;
            tables.wrap_phases();
            grads.reset();
        }
        epoch_losses.push(epoch_loss / store.train.len() as f64);

        let due = config.eval_every > 0 && (epoch + 1) % config.eval_every == 0;
        if due && !store.valid.is_empty() {
            let report = eval_link_prediction(
                store,
                &RotateScorer { tables: &tables, norm: config.norm },
                QuerySide::Both,
                true,
                EvalPartition::Valid,
            )?;
            valid_mrr.push((epoch + 1, report.mrr));
            if report.mrr > best_mrr + 1e-9 {
                best_mrr = report.mrr;
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.lr_decay_patience {
                    st_entity.learning_rate *= 0.5;
                    st_relation.learning_rate *= 0.5;
                    stale = 0;
                }
            }
        }
    }

    Ok((
        tables,
        KgeTrainReport {
            epoch_losses,
            valid_mrr,
            final_learning_rate: st_entity.learning_rate,
        },
    ))
}

pub use crate::kge::eval::EvalPartition;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{finite_diff_grad, max_relative_error};

    fn chain_store() -> TripleStore {
        // Small random-ish KG over 8 entities and 2 relations.
        let names: Vec<String> = (0..8).map(|i| format!("e{i}")).collect();
        let mut train = Vec::new();
        for i in 0..8usize {
            train.push((names[i].clone(), "r0".to_string(), names[(i + 1) % 8].clone()));
            train.push((names[i].clone(), "r1".to_string(), names[(i + 3) % 8].clone()));
        }
        TripleStore::from_triples(&train, &[], &[]).unwrap()
    }

    #[test]
    fn empty_train_rejected() {
        let store = TripleStore::from_triples(&[], &[], &[]).unwrap();
        assert!(train_rotate(&store, &KgeTrainConfig::default()).is_err());
    }

    #[test]
    fn config_invariants() {
        let mut c = KgeTrainConfig::default();
        c.margin = 0.0;
        assert!(c.validate().is_err());
        c = KgeTrainConfig::default();
        c.negatives = 0;
        assert!(c.validate().is_err());
        c = KgeTrainConfig::default();
        c.dim = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let store = chain_store();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut tables = KgeTables::init(store.entity_count(), store.relation_count(), 4, 0.5, &mut rng);
        let examples: Vec<TrainingExample> = store.train[..4]
            .iter()
            .map(|&p| TrainingExample {
                positive: p,
                negatives: sample_negatives(p, store.entity_count(), 3, &mut rng),
            })
            .collect();
        for self_adv in [false, true] {
            let mut grads = KgeGrads::zeros(&tables);
            let loss = rotate_loss_and_grads(&tables, &examples, 6.0, self_adv, 1.0, Norm::L1, &mut grads);
            assert!(loss.is_finite());

            let base_entity = tables.entity.as_slice().to_vec();
            let fd_entity = finite_diff_grad(
                |p: &[f64]| {
                    tables.entity.as_mut_slice().copy_from_slice(p);
                    rotate_loss(&tables, &examples, 6.0, self_adv, 1.0, Norm::L1)
                },
                &base_entity,
                1e-6,
            )
            .unwrap();
            tables.entity.as_mut_slice().copy_from_slice(&base_entity);
            // Self-adversarial weights are detached, so the analytic gradient
            // deliberately ignores their dependence on the parameters; compare
            // only in uniform mode.
            if !self_adv {
                assert!(
                    max_relative_error(grads.entity.as_slice(), &fd_entity) < 1e-6,
                    "entity grads"
                );
                let base_rel = tables.relation.as_slice().to_vec();
                let fd_rel = finite_diff_grad(
                    |p: &[f64]| {
                        tables.relation.as_mut_slice().copy_from_slice(p);
                        rotate_loss(&tables, &examples, 6.0, self_adv, 1.0, Norm::L1)
                    },
                    &base_rel,
                    1e-6,
                )
                .unwrap();
                tables.relation.as_mut_slice().copy_from_slice(&base_rel);
                assert!(
                    max_relative_error(grads.relation.as_slice(), &fd_rel) < 1e-6,
                    "relation grads"
                );
            }
        }
    }

    #[test]
    fn training_reduces_loss_and_fits_positives() {
        let store = chain_store();
        let config = KgeTrainConfig {
            dim: 16,
            margin: 4.0,
            negatives: 4,
            learning_rate: 0.05,
            epochs: 120,
            batch_size: 16,
            eval_every: 0,
            seed: 7,
            ..Default::default()
        };
        let (tables, report) = train_rotate(&store, &config).unwrap();
        assert!(report.epoch_losses.last().unwrap() < &report.epoch_losses[0]);
        // Positives should be far closer than random pairs.
        let mean_pos: f64 = store
            .train
            .iter()
            .map(|&[h, r, t]| tables.triple_distance(h, r, t, Norm::L1))
            .sum::<f64>()
            / store.train.len() as f64;
        assert!(mean_pos < config.margin, "mean positive distance {mean_pos}");
    }

    #[test]
    fn training_deterministic_under_seed() {
        let store = chain_store();
        let config = KgeTrainConfig {
            dim: 8,
            epochs: 10,
            batch_size: 8,
            eval_every: 0,
            seed: 3,
            ..Default::default()
        };
        let (t1, r1) = train_rotate(&store, &config).unwrap();
        let (t2, r2) = train_rotate(&store, &config).unwrap();
        assert_eq!(t1.entity, t2.entity);
        assert_eq!(t1.relation, t2.relation);
        assert_eq!(r1.epoch_losses, r2.epoch_losses);
    }
}
