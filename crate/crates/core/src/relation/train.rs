//! Joint training of the relation classifier and the translation-embedding
//! auxiliary task (Eq 12).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{ConvTokenEncoder, EncoderConfig, EncoderGrads, Vocab};
use crate::error::{Error, Result};
use crate::numeric::AdamState;
use crate::relation::head::{head_backward, head_forward, HeadGrads, RelationHeadParams};
use crate::relation::loss::{
    l1_translation_distance, sample_fake_relation, total_loss, MultitaskLossConfig,
};
use crate::relation::schema::{EntitySlot, RelationInstance, RelationSchema};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReConfig {
    /// Translation-task weight λ.
    pub lambda: f64,
    /// Translation-task margin γ.
    pub gamma: f64,
    /// Entity-type embedding width `d_e`.
    pub entity_type_dim: usize,
    /// Relation-label embedding width `d_r`; must equal the encoder's
    /// hidden width.
    pub relation_embed_dim: usize,
    /// Fusion width `d_f`.
    pub feature_dim: usize,
    pub batch_size: usize,
    pub grad_clip: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Pseudo-relation draws per instance; 0 disables the translation task.
    pub negatives_per_positive: usize,
    /// Give "Other"-labeled instances a translation term with the true
    /// distance dropped; off by default.
    pub include_other_in_translation: bool,
    pub encoder: EncoderConfig,
}

impl Default for TrainReConfig {
    fn default() -> Self {
        let encoder = EncoderConfig::default();
        TrainReConfig {
            lambda: 1e-5,
            gamma: 1.0,
            entity_type_dim: 128,
            relation_embed_dim: encoder.hidden_dim,
            feature_dim: encoder.hidden_dim,
            batch_size: 16,
            grad_clip: 2.0,
            weight_decay: 0.01,
            dropout: 0.1,
            learning_rate: 2e-5,
            epochs: 50,
            seed: 0,
            negatives_per_positive: 1,
            include_other_in_translation: false,
            encoder,
        }
    }
}

/// A trained relation extractor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReModel {
    pub encoder: ConvTokenEncoder,
    pub head: RelationHeadParams,
    pub schema: RelationSchema,
    pub loss_config: MultitaskLossConfig,
}

/// Instance with resolved indices, ready for the forward pass.
#[derive(Debug, Clone)]
pub struct PreparedInstance {
    pub tokens: Vec<String>,
    pub span1: (usize, usize),
    pub span2: (usize, usize),
    pub type1: usize,
    pub type2: usize,
    pub label: usize,
}

fn prepare_instances(
    instances: &[RelationInstance],
    schema: &RelationSchema,
) -> Result<Vec<PreparedInstance>> {
    if instances.is_empty() {
        return Err(Error::invalid("relation training set is empty"));
    }
    let mut bad = Vec::new();
    let mut out = Vec::new();
    for (idx, inst) in instances.iter().enumerate() {
        if let Err(e) = inst.validate(schema) {
            bad.push(format!("instance {idx}: {e}"));
            continue;
        }
        let Some(label) = &inst.label else {
            bad.push(format!("instance {idx}: missing gold label"));
            continue;
        };
        out.push(PreparedInstance {
            tokens: inst.tokens.clone(),
            span1: inst.e1.span,
            span2: inst.e2.span,
            type1: schema.entity_type_index(&inst.e1.entity_type)?,
            type2: schema.entity_type_index(&inst.e2.entity_type)?,
            label: schema.class_index(label)?,
        });
    }
    if !bad.is_empty() {
        let listed = bad.iter().take(10).cloned().collect::<Vec<_>>().join("; ");
        return Err(Error::Schema(format!(
            "{} instances violate the schema: {listed}",
            bad.len()
        )));
    }
    Ok(out)
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

impl ReModel {
    /// Class probabilities for one candidate pair.
    pub fn predict(&self, tokens: &[String], e1: &EntitySlot, e2: &EntitySlot) -> Result<(usize, Vec<f64>)> {
        let hidden = self.encoder.forward(tokens).0;
        let cache = head_forward(
            &hidden,
            e1.span,
            e2.span,
            self.schema.entity_type_index(&e1.entity_type)?,
            self.schema.entity_type_index(&e2.entity_type)?,
            &self.head,
        )?;
        let best = cache
            .probs
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc })
            .0;
        Ok((best, cache.probs))
    }

    /// Joint loss of one prepared instance with the pseudo relations fixed;
    /// the entry point used by the gradient oracle tests.
    pub fn instance_loss(&self, inst: &PreparedInstance, fakes: &[usize]) -> Result<f64> {
        let hidden = self.encoder.forward(&inst.tokens).0;
        let cache = head_forward(&hidden, inst.span1, inst.span2, inst.type1, inst.type2, &self.head)?;
        let l1 = -cache.probs[inst.label].max(1e-300).ln();
        let mut l2 = 0.0;
        for &fake in fakes {
            l2 += self.hinge(&cache.f_e1, &cache.f_e2, inst.label, fake)?.0;
        }
        Ok(total_loss(l1, l2, self.loss_config.lambda()))
    }

    fn hinge(&self, f_e1: &[f64], f_e2: &[f64], label: usize, fake: usize) -> Result<(f64, f64, f64)> {
        let gamma = self.loss_config.gamma();
        let other = self.schema.other_index();
        let d_true = if label == other {
            0.0
        } else {
            if label == fake {
                return Err(Error::invalid("degenerate contrast: fake equals true relation"));
            }
            l1_translation_distance(f_e1, self.head.rel_embed.row(label), f_e2)
        };
        let d_fake = l1_translation_distance(f_e1, self.head.rel_embed.row(fake), f_e2);
        Ok(((gamma + d_true - d_fake).max(0.0), d_true, d_fake))
    }

    /// Loss plus gradients into the provided accumulators.
    pub fn instance_loss_and_grads(
        &self,
        inst: &PreparedInstance,
        fakes: &[usize],
        enc_grads: &mut EncoderGrads,
        head_grads: &mut HeadGrads,
        dropout: Option<(f64, &mut ChaCha8Rng)>,
    ) -> Result<f64> {
        let (hidden_raw, cache_enc) = self.encoder.forward(&inst.tokens);
        let mut h = hidden_raw;
        let drop_mask = if let Some((rate, rng)) = dropout {
            if rate > 0.0 {
                let keep = 1.0 - rate;
                let mask: Vec<f64> = (0..h.0.as_slice().len())
                    .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                for (v, &m) in h.0.as_mut_slice().iter_mut().zip(mask.iter()) {
                    *v *= m;
                }
                Some(mask)
            } else {
                None
            }
        } else {
            None
        };

        let cache = head_forward(&h, inst.span1, inst.span2, inst.type1, inst.type2, &self.head)?;
        let l1 = -cache.probs[inst.label].max(1e-300).ln();

        let lambda = self.loss_config.lambda();
        let d_h = self.head.hidden_dim();
        let mut l2 = 0.0;
        let mut extra_d_e1 = vec![0.0; d_h];
        let mut extra_d_e2 = vec![0.0; d_h];
        let other = self.schema.other_index();
        for &fake in fakes {
            let (hinge, _, _) = self.hinge(&cache.f_e1, &cache.f_e2, inst.label, fake)?;
            l2 += hinge;
            if hinge <= 0.0 {
                continue;
            }
            if inst.label != other {
                let r_true = self.head.rel_embed.row(inst.label);
                for j in 0..d_h {
                    let s = sign(cache.f_e1[j] + r_true[j] - cache.f_e2[j]);
                    extra_d_e1[j] += lambda * s;
                    extra_d_e2[j] -= lambda * s;
                    let g = head_grads.rel_embed.row_mut(inst.label);
                    g[j] += lambda * s;
                }
            }
            let r_fake = self.head.rel_embed.row(fake);
            for j in 0..d_h {
                let s = sign(cache.f_e1[j] + r_fake[j] - cache.f_e2[j]);
                extra_d_e1[j] -= lambda * s;
                extra_d_e2[j] += lambda * s;
                let g = head_grads.rel_embed.row_mut(fake);
                g[j] -= lambda * s;
            }
        }

        let mut d_logits = cache.probs.clone();
        d_logits[inst.label] -= 1.0;
        let mut d_hidden = head_backward(&h, &cache, &d_logits, &extra_d_e1, &extra_d_e2, &self.head, head_grads)?;
        if let Some(mask) = &drop_mask {
            for (v, &m) in d_hidden.as_mut_slice().iter_mut().zip(mask.iter()) {
                *v *= m;
            }
        }
        self.encoder.backward(&cache_enc, &d_hidden, enc_grads);
        Ok(total_loss(l1, l2, lambda))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReTrainReport {
    pub epoch_losses: Vec<f64>,
}

struct Group<'a> {
    values: &'a mut [f64],
    grads: &'a mut [f64],
    state: &'a mut AdamState,
    decay: bool,
}

/// Train the multitask relation extractor.
pub fn train_re(
    instances: &[RelationInstance],
    schema: &RelationSchema,
    config: &TrainReConfig,
) -> Result<(ReModel, ReTrainReport)> {
    schema.validate()?;
    let loss_config = MultitaskLossConfig::new(config.lambda, config.gamma)?;
    let prepared = prepare_instances(instances, schema)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // Negative sampling runs on its own stream so the translation task does
    // not perturb shuffling or dropout.
    let mut neg_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);

    let vocab = Vocab::build(prepared.iter().flat_map(|i| i.tokens.iter().map(|s| s.as_str())));
    let encoder = ConvTokenEncoder::new(vocab, config.encoder.clone(), &mut rng)?;
    let head = RelationHeadParams::new(
        config.encoder.hidden_dim,
        config.feature_dim,
        config.entity_type_dim,
        config.relation_embed_dim,
        schema.entity_types.len(),
        schema.relations.len(),
        schema.class_count(),
        &mut rng,
    )?;
    let mut model = ReModel {
        encoder,
        head,
        schema: schema.clone(),
        loss_config,
    };

    let mut enc_grads = EncoderGrads::zeros(&model.encoder);
    let mut head_grads = HeadGrads::zeros(&model.head);

    let lr = config.learning_rate;
    let mut st = vec![
        AdamState::new(model.encoder.embedding.as_slice().len(), lr),
        AdamState::new(model.encoder.conv_weight.as_slice().len(), lr),
        AdamState::new(model.encoder.conv_bias.len(), lr),
        AdamState::new(model.head.w_sent.as_slice().len(), lr),
        AdamState::new(model.head.w_fused.as_slice().len(), lr),
        AdamState::new(model.head.b_fused.len(), lr),
        AdamState::new(model.head.w_final.as_slice().len(), lr),
        AdamState::new(model.head.type_embed.as_slice().len(), lr),
        AdamState::new(model.head.rel_embed.as_slice().len(), lr),
    ];

    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let other = schema.other_index();
    let can_sample = schema.relations.len() >= 2;

    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut batch_losses = Vec::new();
        for chunk in order.chunks(config.batch_size) {
            let mut batch_loss = 0.0;
            for &ii in chunk {
                let inst = &prepared[ii];
                let mut fakes = Vec::new();
                let wants_l2 = inst.label != other || config.include_other_in_translation;
                if wants_l2 && can_sample {
                    for _ in 0..config.negatives_per_positive {
                        fakes.push(sample_fake_relation(schema, inst.label, &mut neg_rng)?);
                    }
                }
                batch_loss += model.instance_loss_and_grads(
                    inst,
                    &fakes,
                    &mut enc_grads,
                    &mut head_grads,
                    Some((config.dropout, &mut rng)),
                )?;
            }
            batch_losses.push(batch_loss);

            let [st0, st1, st2, st3, st4, st5, st6, st7, st8] = &mut st[..] else {
                unreachable!("nine optimizer states");
            };
            let mut groups = [
                Group { values: model.encoder.embedding.as_mut_slice(), grads: enc_grads.embedding.as_mut_slice(), state: st0, decay: true },
                Group { values: model.encoder.conv_weight.as_mut_slice(), grads: enc_grads.conv_weight.as_mut_slice(), state: st1, decay: true },
                Group { values: &mut model.encoder.conv_bias, grads: &mut enc_grads.conv_bias, state: st2, decay: false },
                Group { values: model.head.w_sent.as_mut_slice(), grads: head_grads.w_sent.as_mut_slice(), state: st3, decay: true },
                Group { values: model.head.w_fused.as_mut_slice(), grads: head_grads.w_fused.as_mut_slice(), state: st4, decay: true },
                Group { values: &mut model.head.b_fused, grads: &mut head_grads.b_fused, state: st5, decay: false },
                Group { values: model.head.w_final.as_mut_slice(), grads: head_grads.w_final.as_mut_slice(), state: st6, decay: true },
                Group { values: model.head.type_embed.as_mut_slice(), grads: head_grads.type_embed.as_mut_slice(), state: st7, decay: true },
                Group { values: model.head.rel_embed.as_mut_slice(), grads: head_grads.rel_embed.as_mut_slice(), state: st8, decay: true },
            ];
            // Weight decay on weights only, then a global-norm clip.
            for g in groups.iter_mut() {
                if g.decay && config.weight_decay > 0.0 {
                    for (gr, &v) in g.grads.iter_mut().zip(g.values.iter()) {
                        *gr += config.weight_decay * v;
                    }
                }
            }
            let norm: f64 = groups
                .iter()
                .map(|g| g.grads.iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
                .sqrt();
            if config.grad_clip > 0.0 && norm > config.grad_clip {
                let scale = config.grad_clip / norm;
                for g in groups.iter_mut() {
                    g.grads.iter_mut().for_each(|v| *v *= scale);
                }
            }
            for g in groups.iter_mut() {
                crate::numeric::adam_step(g.values, g.grads, g.state)?;
                g.grads.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        epoch_losses.push(batch_losses.iter().sum::<f64>() / batch_losses.len().max(1) as f64);
    }

    Ok((model, ReTrainReport { epoch_losses }))
}
