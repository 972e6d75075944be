//! TransE baseline: relations as real-vector translations, trained with
//! the same margin-sigmoid objective as the rotational model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kge::eval::TripleScorer;
use crate::kge::rotate::Norm;
use crate::kge::store::TripleStore;
use crate::kge::train::{sample_negatives, KgeTrainConfig, TrainingExample};
use crate::numeric::matrix::DenseMatrix;
use crate::numeric::AdamState;
use rand::seq::SliceRandom;

/// Real-valued entity and relation translation tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranseTables {
    pub dim: usize,
    pub entity: DenseMatrix,
    pub relation: DenseMatrix,
}

impl TranseTables {
    pub fn init(n_entities: usize, n_relations: usize, dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut entity = DenseMatrix::zeros(n_entities, dim);
        for v in entity.as_mut_slice() {
            *v = rng.random_range(-scale..scale);
        }
        let mut relation = DenseMatrix::zeros(n_relations, dim);
        for v in relation.as_mut_slice() {
            *v = rng.random_range(-scale..scale);
        }
        TranseTables { dim, entity, relation }
    }

    /// `‖h + r − t‖` under the configured norm.
    pub fn triple_distance(&self, h: usize, r: usize, t: usize, norm: Norm) -> f64 {
        let (hv, rv, tv) = (self.entity.row(h), self.relation.row(r), self.entity.row(t));
        match norm {
            Norm::L1 => (0..self.dim).map(|j| (hv[j] + rv[j] - tv[j]).abs()).sum(),
            Norm::L2 => (0..self.dim)
                .map(|j| {
                    let v = hv[j] + rv[j] - tv[j];
                    v * v
                })
                .sum::<f64>()
                .sqrt(),
        }
    }
}

pub struct TranseScorer<'a> {
    pub tables: &'a TranseTables,
    pub norm: Norm,
}

impl TripleScorer for TranseScorer<'_> {
    fn score(&self, h: usize, r: usize, t: usize) -> f64 {
        -self.tables.triple_distance(h, r, t, self.norm)
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

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn accumulate(tables: &TranseTables, triple: [usize; 3], coeff: f64, norm: Norm, ge: &mut DenseMatrix, gr: &mut DenseMatrix) {
    let [h, r, t] = triple;
    let total = match norm {
        Norm::L1 => 0.0,
        Norm::L2 => tables.triple_distance(h, r, t, Norm::L2).max(1e-12),
    };
    for j in 0..tables.dim {
        let v = tables.entity.row(h)[j] + tables.relation.row(r)[j] - tables.entity.row(t)[j];
        let u = match norm {
            Norm::L1 => sign(v),
            Norm::L2 => v / total,
        };
        ge.row_mut(h)[j] += coeff * u;
        gr.row_mut(r)[j] += coeff * u;
        ge.row_mut(t)[j] -= coeff * u;
    }
}

/// The TransE training objective over a batch; same shape as the
/// rotational loss.
pub fn transe_loss(tables: &TranseTables, examples: &[TrainingExample], margin: f64, norm: Norm) -> f64 {
    let mut loss = 0.0;
    for ex in examples {
        let [h, r, t] = ex.positive;
        loss += softplus(tables.triple_distance(h, r, t, norm) - margin);
        let w = 1.0 / ex.negatives.len().max(1) as f64;
        for &[nh, nr, nt] in &ex.negatives {
            loss += w * softplus(margin - tables.triple_distance(nh, nr, nt, norm));
        }
    }
    loss
}

/// Train the TransE baseline on the store's train partition.
pub fn train_transe(store: &TripleStore, config: &KgeTrainConfig) -> Result<(TranseTables, Vec<f64>)> {
    config.validate()?;
    if store.train.is_empty() {
        return Err(Error::invalid("train partition is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tables = TranseTables::init(
        store.entity_count(),
        store.relation_count(),
        config.dim,
        config.init_scale,
        &mut rng,
    );
    let mut ge = DenseMatrix::zeros(tables.entity.rows(), tables.entity.cols());
    let mut gr = DenseMatrix::zeros(tables.relation.rows(), tables.relation.cols());
    let mut st_e = AdamState::new(tables.entity.as_slice().len(), config.learning_rate);
    let mut st_r = AdamState::new(tables.relation.as_slice().len(), config.learning_rate);

    let mut order: Vec<usize> = (0..store.train.len()).collect();
    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
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
            for ex in &examples {
                let [h, r, t] = ex.positive;
                let d = tables.triple_distance(h, r, t, config.norm);
                epoch_loss += softplus(d - config.margin);
                accumulate(&tables, ex.positive, sigmoid(d - config.margin), config.norm, &mut ge, &mut gr);
                let w = 1.0 / ex.negatives.len().max(1) as f64;
                for &neg in &ex.negatives {
                    let dn = tables.triple_distance(neg[0], neg[1], neg[2], config.norm);
                    epoch_loss += w * softplus(config.margin - dn);
                    accumulate(&tables, neg, -w * sigmoid(config.margin - dn), config.norm, &mut ge, &mut gr);
                }
            }
            crate::numeric::adam_step(tables.entity.as_mut_slice(), ge.as_slice(), &mut st_e)?;
            crate::numeric::adam_step(tables.relation.as_mut_slice(), gr.as_slice(), &mut st_r)?;
            ge.fill(0.0);
            gr.fill(0.0);
        }
        losses.push(epoch_loss / store.train.len() as f64);
    }
    Ok((tables, losses))
}
