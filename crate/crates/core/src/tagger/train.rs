//! Entity-tagger training: encoder + CRF (or softmax) head under Adam.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{ConvTokenEncoder, EncoderConfig, EncoderGrads, TokenEncoder, Vocab};
use crate::error::{Error, Result};
use crate::numeric::matrix::DenseMatrix;
use crate::numeric::{adam_step, log_sum_exp, AdamState};
use crate::tagger::crf::{nll, viterbi, CrfParams};
use crate::tagger::mentions::{decode_mentions, EntityMention};
use crate::tagger::tagset::{TagSet, TransitionMask};

/// Decoding head: constrained CRF or the per-token softmax baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DecoderKind {
    #[default]
    Crf,
    Softmax,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainNerConfig {
    /// Sentences longer than this are split at punctuation before training.
    pub max_len: usize,
    /// L2 coefficient on weight parameters; biases are not decayed.
    pub weight_decay: f64,
    /// Dropout on the top hidden layer during training.
    pub dropout: f64,
    pub batch_size: usize,
    /// Global gradient-norm clip threshold.
    pub grad_clip: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub decoder: DecoderKind,
    pub encoder: EncoderConfig,
}

impl Default for TrainNerConfig {
    fn default() -> Self {
        TrainNerConfig {
            max_len: 400,
            weight_decay: 0.01,
            dropout: 0.1,
            batch_size: 16,
            grad_clip: 2.0,
            learning_rate: 1e-5,
            epochs: 30,
            seed: 0,
            decoder: DecoderKind::Crf,
            encoder: EncoderConfig::default(),
        }
    }
}

impl TrainNerConfig {
    /// Defaults for the given decoder; only the learning rate differs
    /// (2e-5 for softmax decoding, 1e-5 for the CRF).
    pub fn for_decoder(decoder: DecoderKind) -> Self {
        let learning_rate = match decoder {
            DecoderKind::Crf => 1e-5,
            DecoderKind::Softmax => 2e-5,
        };
        TrainNerConfig {
            decoder,
            learning_rate,
            ..Default::default()
        }
    }
}

/// One training sentence in the JSON Lines corpus format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
}

pub fn read_ner_corpus(path: &Path) -> Result<Vec<LabeledSentence>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub fn write_ner_corpus(path: &Path, sentences: &[LabeledSentence]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for s in sentences {
        serde_json::to_writer(&mut file, s)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

/// A trained tagger: reference encoder plus CRF parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NerModel {
    pub encoder: ConvTokenEncoder,
    pub crf: CrfParams,
    pub decoder: DecoderKind,
}

impl NerModel {
    pub fn tagset(&self) -> &TagSet {
        &self.crf.tagset
    }

    /// Decode label indices for one sentence.
    pub fn predict_labels(&self, tokens: &[String]) -> Result<Vec<usize>> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let hidden = self.encoder.encode(tokens)?;
        let token_rows = token_hidden(&hidden.0);
        let p = self.crf.emissions(&token_rows)?;
        match self.decoder {
            DecoderKind::Crf => Ok(viterbi(&p, &self.crf.transitions)?.0),
            DecoderKind::Softmax => Ok((0..p.rows())
                .map(|i| {
                    let row = p.row(i);
                    row.iter()
                        .enumerate()
                        .fold((0usize, f64::NEG_INFINITY), |acc, (j, &v)| {
                            if v > acc.1 {
                                (j, v)
                            } else {
                                acc
                            }
                        })
                        .0
                })
                .collect()),
        }
    }

    pub fn predict_mentions(&self, tokens: &[String]) -> Result<Vec<EntityMention>> {
        let labels = self.predict_labels(tokens)?;
        decode_mentions(tokens, &labels, &self.crf.tagset)
    }
}

/// Per-epoch mean batch loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NerTrainReport {
    pub epoch_losses: Vec<f64>,
}

/// Drop the start slot: rows 1.. hold per-token hidden states.
fn token_hidden(h: &DenseMatrix) -> DenseMatrix {
    let n = h.rows() - 1;
    let mut out = DenseMatrix::zeros(n, h.cols());
    for i in 0..n {
        out.row_mut(i).copy_from_slice(h.row(i + 1));
    }
    out
}

const PUNCTUATION: [&str; 7] = [".", ",", ";", "!", "?", ":", "-"];

/// Split an over-long sentence in two at the punctuation token nearest the
/// midpoint, recursively; fall back to a hard split when no punctuation
/// exists.
fn split_long(tokens: &[String], labels: &[usize], max_len: usize, out: &mut Vec<(Vec<String>, Vec<usize>)>) {
    if tokens.len() <= max_len {
        out.push((tokens.to_vec(), labels.to_vec()));
        return;
    }
    let mid = tokens.len() / 2;
    let cut = tokens
        .iter()
        .enumerate()
        .take(tokens.len() - 1) // a trailing cut would not split anything
        .filter(|(_, t)| PUNCTUATION.contains(&t.as_str()))
        .min_by_key(|(i, _)| i.abs_diff(mid))
        .map(|(i, _)| i + 1)
        .unwrap_or(max_len);
    let (lt, rt) = tokens.split_at(cut);
    let (ll, rl) = labels.split_at(cut);
    split_long(lt, ll, max_len, out);
    split_long(rt, rl, max_len, out);
}

struct ParamGroup<'a> {
    values: &'a mut [f64],
    grads: &'a mut [f64],
    state: &'a mut AdamState,
    decay: bool,
}

fn apply_updates(groups: &mut [ParamGroup<'_>], weight_decay: f64, clip: f64, masked: Option<(&TransitionMask, usize)>) -> Result<()> {
    // Weight decay on non-bias groups. The transition group carries pinned
    // entries whose gradients were zeroed; re-zero after decay so they stay
    // put.
    for (gi, g) in groups.iter_mut().enumerate() {
        if g.decay && weight_decay > 0.0 {
            for (gr, &v) in g.grads.iter_mut().zip(g.values.iter()) {
                *gr += weight_decay * v;
            }
            if let Some((mask, idx)) = masked {
                if gi == idx {
                    let states = mask.states();
                    for from in 0..states {
                        for to in 0..states {
                            if !mask.allowed(from, to) {
                                g.grads[from * states + to] = 0.0;
                            }
                        }
                    }
                }
            }
        }
    }
    let norm_sq: f64 = groups
        .iter()
        .map(|g| g.grads.iter().map(|v| v * v).sum::<f64>())
        .sum();
    let norm = norm_sq.sqrt();
    if clip > 0.0 && norm > clip {
        let scale = clip / norm;
        for g in groups.iter_mut() {
            g.grads.iter_mut().for_each(|v| *v *= scale);
        }
    }
    for g in groups.iter_mut() {
        adam_step(g.values, g.grads, g.state)?;
        g.grads.iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(())
}

/// Validate and convert the gold corpus to label indices, splitting
/// over-long sentences.
fn prepare_corpus(
    corpus: &[LabeledSentence],
    tagset: &TagSet,
    mask: &TransitionMask,
    max_len: usize,
) -> Result<Vec<(Vec<String>, Vec<usize>)>> {
    if corpus.is_empty() {
        return Err(Error::invalid("training corpus is empty"));
    }
    let mut bad: Vec<String> = Vec::new();
    let mut prepared = Vec::new();
    for (idx, s) in corpus.iter().enumerate() {
        if s.tokens.is_empty() || s.tokens.len() != s.labels.len() {
            bad.push(format!("sentence {idx}: token/label length mismatch"));
            continue;
        }
        let mut ids = Vec::with_capacity(s.labels.len());
        let mut ok = true;
        for name in &s.labels {
            match tagset.parse_label(name) {
                Ok(l) => ids.push(l),
                Err(e) => {
                    bad.push(format!("sentence {idx}: {e}"));
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let mut prev = tagset.start();
        for (pos, &y) in ids.iter().enumerate() {
            if !mask.allowed(prev, y) {
                bad.push(format!(
                    "sentence {idx}: illegal transition {} -> {} at token {pos}",
                    tagset.label_name(prev),
                    tagset.label_name(y)
                ));
                ok = false;
                break;
            }
            prev = y;
        }
        if !ok {
            continue;
        }
        split_long(&s.tokens, &ids, max_len, &mut prepared);
    }
    if !bad.is_empty() {
        let listed = bad.iter().take(10).cloned().collect::<Vec<_>>().join("; ");
        return Err(Error::Schema(format!(
            "{} gold sentences violate the tag scheme: {listed}",
            bad.len()
        )));
    }
    Ok(prepared)
}

/// Train the tagger by minimizing the mean CRF negative log-likelihood
/// (or per-token cross-entropy for the softmax decoder).
pub fn train_ner(
    corpus: &[LabeledSentence],
    tagset: &TagSet,
    config: &TrainNerConfig,
) -> Result<(NerModel, NerTrainReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mask_check = crate::tagger::tagset::build_transition_mask(tagset);
    let prepared = prepare_corpus(corpus, tagset, &mask_check, config.max_len)?;

    let vocab = Vocab::build(prepared.iter().flat_map(|(t, _)| t.iter().map(|s| s.as_str())));
    let mut encoder = ConvTokenEncoder::new(vocab, config.encoder.clone(), &mut rng)?;
    let mut crf = CrfParams::new(tagset.clone(), config.encoder.hidden_dim, &mut rng);
    let mask = crf.mask();

    let mut enc_grads = EncoderGrads::zeros(&encoder);
    let mut d_emit_w = DenseMatrix::zeros(crf.emit_weight.rows(), crf.emit_weight.cols());
    let mut d_emit_b = vec![0.0; crf.emit_bias.len()];
    let mut d_trans = DenseMatrix::zeros(crf.transitions.rows(), crf.transitions.cols());

    let lr = config.learning_rate;
    let mut st_emb = AdamState::new(encoder.embedding.as_slice().len(), lr);
    let mut st_cw = AdamState::new(encoder.conv_weight.as_slice().len(), lr);
    let mut st_cb = AdamState::new(encoder.conv_bias.len(), lr);
    let mut st_ew = AdamState::new(crf.emit_weight.as_slice().len(), lr);
    let mut st_eb = AdamState::new(crf.emit_bias.len(), lr);
    let mut st_a = AdamState::new(crf.transitions.as_slice().len(), lr);

    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut batch_losses = Vec::new();
        for chunk in order.chunks(config.batch_size) {
            let mut batch_loss = 0.0;
            for &si in chunk {
                let (tokens, labels) = &prepared[si];
                let (hidden, cache) = encoder.forward(tokens);
                let mut h = hidden.0;
                // Inverted dropout on the top layer.
                let keep = 1.0 - config.dropout;
                let drop_mask: Option<Vec<f64>> = if config.dropout > 0.0 {
                    let m: Vec<f64> = (0..h.as_slice().len())
                        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    for (v, &m) in h.as_mut_slice().iter_mut().zip(m.iter()) {
                        *v *= m;
                    }
                    Some(m)
                } else {
                    None
                };
                let token_rows = token_hidden(&h);
                let p = crf.emissions(&token_rows)?;
                let (loss, d_p) = match config.decoder {
                    DecoderKind::Crf => {
                        let (loss, grads) = nll(&p, &crf.transitions, &mask, labels)?;
                        for i in 0..d_trans.as_slice().len() {
                            d_trans.as_mut_slice()[i] += grads.d_transitions.as_slice()[i];
                        }
                        (loss, grads.d_emissions)
                    }
                    DecoderKind::Softmax => {
                        let mut d_p = DenseMatrix::zeros(p.rows(), p.cols());
                        let mut loss = 0.0;
                        for i in 0..p.rows() {
                            let row = p.row(i);
                            let lse = log_sum_exp(row);
                            loss += lse - row[labels[i]];
                            for (j, d) in d_p.row_mut(i).iter_mut().enumerate() {
                                *d = (row[j] - lse).exp();
                            }
                            d_p.set(i, labels[i], d_p.get(i, labels[i]) - 1.0);
                        }
                        (loss, d_p)
                    }
                };
                batch_loss += loss;

                // Emission projection backward.
                let n = token_rows.rows();
                let mut d_hidden = DenseMatrix::zeros(h.rows(), h.cols());
                for i in 0..n {
                    let dp_row = d_p.row(i);
                    d_emit_w.add_outer(token_rows.row(i), dp_row);
                    for (b, &d) in d_emit_b.iter_mut().zip(dp_row.iter()) {
                        *b += d;
                    }
                    let dh = crf.emit_weight.mat_vec(dp_row)?;
                    d_hidden.row_mut(i + 1).copy_from_slice(&dh);
                }
                if let Some(m) = &drop_mask {
                    for (v, &mv) in d_hidden.as_mut_slice().iter_mut().zip(m.iter()) {
                        *v *= mv;
                    }
                }
                encoder.backward(&cache, &d_hidden, &mut enc_grads);
            }
            batch_losses.push(batch_loss);

            let mut groups = [
                ParamGroup {
                    values: encoder.embedding.as_mut_slice(),
                    grads: enc_grads.embedding.as_mut_slice(),
                    state: &mut st_emb,
                    decay: true,
                },
                ParamGroup {
                    values: encoder.conv_weight.as_mut_slice(),
                    grads: enc_grads.conv_weight.as_mut_slice(),
                    state: &mut st_cw,
                    decay: true,
                },
                ParamGroup {
                    values: &mut encoder.conv_bias,
                    grads: &mut enc_grads.conv_bias,
                    state: &mut st_cb,
                    decay: false,
                },
                ParamGroup {
                    values: crf.emit_weight.as_mut_slice(),
                    grads: d_emit_w.as_mut_slice(),
                    state: &mut st_ew,
                    decay: true,
                },
                ParamGroup {
                    values: &mut crf.emit_bias,
                    grads: &mut d_emit_b,
                    state: &mut st_eb,
                    decay: false,
                },
                ParamGroup {
                    values: crf.transitions.as_mut_slice(),
                    grads: d_trans.as_mut_slice(),
                    state: &mut st_a,
                    decay: true,
                },
            ];
            apply_updates(&mut groups, config.weight_decay, config.grad_clip, Some((&mask, 5)))?;
        }
        let mean = batch_losses.iter().sum::<f64>() / batch_losses.len().max(1) as f64;
        epoch_losses.push(mean);
    }

    Ok((
        NerModel {
            encoder,
            crf,
            decoder: config.decoder,
        },
        NerTrainReport { epoch_losses },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::mentions::span_f1;

    fn s(tokens: &[&str], labels: &[&str]) -> LabeledSentence {
        LabeledSentence {
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            labels: labels.iter().map(|l| l.to_string()).collect(),
        }
    }

    fn tiny_config() -> TrainNerConfig {
        TrainNerConfig {
            epochs: 40,
            learning_rate: 0.02,
            dropout: 0.0,
            weight_decay: 0.0,
            seed: 1,
            encoder: EncoderConfig {
                embed_dim: 16,
                hidden_dim: 16,
                conv_width: 3,
            },
            ..Default::default()
        }
    }

    #[test]
    fn empty_corpus_rejected() {
        let ts = TagSet::new(vec!["MV".into()]).unwrap();
        assert!(train_ner(&[], &ts, &TrainNerConfig::default()).is_err());
    }

    #[test]
    fn illegal_gold_labels_listed() {
        let ts = TagSet::new(vec!["MV".into()]).unwrap();
        let corpus = vec![s(&["a", "b"], &["O", "I-MV"])];
        let err = train_ner(&corpus, &ts, &TrainNerConfig::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sentence 0"), "{msg}");
        assert!(msg.contains("illegal transition"), "{msg}");
    }

    #[test]
    fn defaults_match_stated_hyperparameters() {
        let c = TrainNerConfig::default();
        assert_eq!(c.max_len, 400);
        assert_eq!(c.weight_decay, 0.01);
        assert_eq!(c.dropout, 0.1);
        assert_eq!(c.batch_size, 16);
        assert_eq!(c.grad_clip, 2.0);
        assert_eq!(c.learning_rate, 1e-5);
        assert_eq!(TrainNerConfig::for_decoder(DecoderKind::Softmax).learning_rate, 2e-5);
        assert_eq!(TrainNerConfig::for_decoder(DecoderKind::Crf).learning_rate, 1e-5);
    }

    #[test]
    fn split_long_cuts_at_punctuation() {
        let tokens: Vec<String> = ["a", "b", ",", "c", "d", "e"].iter().map(|t| t.to_string()).collect();
        let labels = vec![0usize; 6];
        let mut out = Vec::new();
        split_long(&tokens, &labels, 4, &mut out);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].0, vec!["a", "b", ","]);
        assert_eq!(out[1].0, vec!["c", "d", "e"]);
    }

    #[test]
    fn learns_template_entities() {
        // Tiny planted corpus: "NAME drove VEHICLE" patterns.
        let ts = TagSet::new(vec!["MV".into(), "NP".into()]).unwrap();
        let names = ["alice", "bob", "carol", "dave"];
        let vehicles = ["sedan", "truck", "bus", "van"];
        let mut corpus = Vec::new();
        for (i, n) in names.iter().enumerate() {
            for (j, v) in vehicles.iter().enumerate() {
                if (i + j) % 4 == 3 {
                    continue; // held out
                }
                corpus.push(s(&[n, "drove", "the", v, "."], &["B-NP", "O", "O", "B-MV", "O"]));
            }
        }
        let (model, report) = train_ner(&corpus, &ts, &tiny_config()).unwrap();
        assert!(
            report.epoch_losses.last().unwrap() < &report.epoch_losses[0],
            "loss should decrease"
        );
        // Held-out combination.
        let tokens: Vec<String> = ["alice", "drove", "the", "van", "."].iter().map(|t| t.to_string()).collect();
        let pred = model.predict_mentions(&tokens).unwrap();
        let gold = vec![
            EntityMention { start: 0, end: 1, entity_type: "NP".into(), text: "alice".into() },
            EntityMention { start: 3, end: 4, entity_type: "MV".into(), text: "van".into() },
        ];
        let scores = span_f1(&[gold], &[pred]).unwrap();
        assert!(scores.overall.f1 > 0.99, "f1 = {}", scores.overall.f1);
    }

    #[test]
    fn softmax_decoder_trains_and_predicts() {
        // The A/B baseline: per-token softmax without transition scores.
        let ts = TagSet::new(vec!["MV".into(), "NP".into()]).unwrap();
        let mut corpus = Vec::new();
        for v in ["sedan", "truck", "bus"] {
            corpus.push(s(&["alice", "drove", "the", v, "."], &["B-NP", "O", "O", "B-MV", "O"]));
            corpus.push(s(&["bob", "parked", "the", v, "."], &["B-NP", "O", "O", "B-MV", "O"]));
        }
        let mut cfg = tiny_config();
        cfg.decoder = DecoderKind::Softmax;
        cfg.learning_rate = 0.02;
        let (model, report) = train_ner(&corpus, &ts, &cfg).unwrap();
        assert!(report.epoch_losses.last().unwrap() < &report.epoch_losses[0]);
        let tokens: Vec<String> = ["alice", "drove", "the", "bus", "."].iter().map(|t| t.to_string()).collect();
        let mentions = model.predict_mentions(&tokens).unwrap();
        assert!(mentions.iter().any(|m| m.entity_type == "MV" && m.start == 3));
        assert!(mentions.iter().any(|m| m.entity_type == "NP" && m.start == 0));
    }

    #[test]
    fn training_is_deterministic_under_seed() {
        let ts = TagSet::new(vec!["MV".into()]).unwrap();
        let corpus = vec![
            s(&["the", "sedan", "stopped", "."], &["O", "B-MV", "O", "O"]),
            s(&["a", "truck", "turned", "."], &["O", "B-MV", "O", "O"]),
        ];
        let mut cfg = tiny_config();
        cfg.epochs = 5;
        cfg.dropout = 0.1;
        let (m1, r1) = train_ner(&corpus, &ts, &cfg).unwrap();
        let (m2, r2) = train_ner(&corpus, &ts, &cfg).unwrap();
        assert_eq!(r1.epoch_losses, r2.epoch_losses);
        assert_eq!(m1.crf.transitions, m2.crf.transitions);
        assert_eq!(m1.encoder.embedding, m2.encoder.embedding);
    }
}
