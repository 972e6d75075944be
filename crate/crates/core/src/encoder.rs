//! Pluggable token encoder contract and the trainable reference encoder.
//!
//! The reference encoder is a token embedding table followed by one
//! width-5 convolutional mixing layer with gelu. A synthetic `<bos>` token
//! is prepended so that row 0 of the hidden states is a trained
//! sequence-start slot usable as a whole-sentence feature.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::matrix::DenseMatrix;
use crate::numeric::{gelu, gelu_prime};

/// Reserved id for out-of-vocabulary tokens.
pub const UNK_ID: usize = 0;
/// Reserved id for the sequence-start slot.
pub const BOS_ID: usize = 1;

/// Token-to-id mapping with reserved `<unk>` and `<bos>` entries.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    #[serde(skip)]
    lookup: HashMap<String, usize>,
}

impl Vocab {
    /// Build from a token stream; ids are assigned in sorted order so the
    /// vocabulary is independent of corpus order.
    pub fn build<'a, I: IntoIterator<Item = &'a str>>(tokens: I) -> Vocab {
        let mut unique: Vec<String> = tokens
            .into_iter()
            .filter(|t| *t != "<unk>" && *t != "<bos>")
            .map(|t| t.to_string())
            .collect();
        unique.sort();
        unique.dedup();
        let mut all = vec!["<unk>".to_string(), "<bos>".to_string()];
        all.extend(unique);
        Vocab::from_tokens(all)
    }

    fn from_tokens(tokens: Vec<String>) -> Vocab {
        let lookup = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocab { tokens, lookup }
    }

    /// Rebuild the lookup table after deserialization.
    pub fn rebuild_lookup(&mut self) {
        self.lookup = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn id(&self, token: &str) -> usize {
        self.lookup.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Hidden states for one sentence; row 0 is the sequence-start slot, row
/// `i + 1` corresponds to token `i`.
#[derive(Debug, Clone)]
pub struct HiddenStates(pub DenseMatrix);

impl HiddenStates {
    pub fn token_count(&self) -> usize {
        self.0.rows() - 1
    }

    pub fn start_slot(&self) -> &[f64] {
        self.0.row(0)
    }

    pub fn token_row(&self, token_idx: usize) -> &[f64] {
        self.0.row(token_idx + 1)
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }
}

/// The encoder contract: tokens in, hidden states out, deterministic in
/// inference mode.
pub trait TokenEncoder {
    fn hidden_dim(&self) -> usize;
    fn encode(&self, tokens: &[String]) -> Result<HiddenStates>;
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EncoderConfig {
    /// Token embedding width.
    pub embed_dim: usize,
    /// Output (hidden) width `d_h`.
    pub hidden_dim: usize,
    /// Convolution window; must be odd.
    pub conv_width: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            embed_dim: 64,
            hidden_dim: 768,
            conv_width: 5,
        }
    }
}

/// Trainable reference encoder: embedding table + one convolutional mixing
/// layer with gelu.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvTokenEncoder {
    pub vocab: Vocab,
    pub config: EncoderConfig,
    /// `vocab_len x embed_dim`.
    pub embedding: DenseMatrix,
    /// `hidden_dim x (conv_width * embed_dim)`.
    pub conv_weight: DenseMatrix,
    pub conv_bias: Vec<f64>,
}

/// Intermediate activations kept for backpropagation.
pub struct EncoderCache {
    ids: Vec<usize>,
    /// Embedded inputs, `(n+1) x embed_dim`.
    x: DenseMatrix,
    /// Pre-activation conv outputs, `(n+1) x hidden_dim`.
    pre: DenseMatrix,
}

/// Gradient accumulators matching [`ConvTokenEncoder`] parameters.
pub struct EncoderGrads {
    pub embedding: DenseMatrix,
    pub conv_weight: DenseMatrix,
    pub conv_bias: Vec<f64>,
}

impl EncoderGrads {
    pub fn zeros(enc: &ConvTokenEncoder) -> Self {
        EncoderGrads {
            embedding: DenseMatrix::zeros(enc.embedding.rows(), enc.embedding.cols()),
            conv_weight: DenseMatrix::zeros(enc.conv_weight.rows(), enc.conv_weight.cols()),
            conv_bias: vec![0.0; enc.conv_bias.len()],
        }
    }

    pub fn reset(&mut self) {
        self.embedding.fill(0.0);
        self.conv_weight.fill(0.0);
        self.conv_bias.iter_mut().for_each(|v| *v = 0.0);
    }
}

impl ConvTokenEncoder {
    pub fn new(vocab: Vocab, config: EncoderConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        if config.conv_width % 2 == 0 || config.conv_width == 0 {
            return Err(Error::invalid("conv_width must be odd and positive"));
        }
        let v = vocab.len();
        let (e, h, w) = (config.embed_dim, config.hidden_dim, config.conv_width);
        let mut embedding = DenseMatrix::zeros(v, e);
        for val in embedding.as_mut_slice() {
            *val = rng.random_range(-0.1..0.1);
        }
        let fan_in = (w * e) as f64;
        let fan_out = h as f64;
        let bound = (6.0 / (fan_in + fan_out)).sqrt();
        let mut conv_weight = DenseMatrix::zeros(h, w * e);
        for val in conv_weight.as_mut_slice() {
            *val = rng.random_range(-bound..bound);
        }
        Ok(ConvTokenEncoder {
            vocab,
            config,
            embedding,
            conv_weight,
            conv_bias: vec![0.0; h],
        })
    }

    fn window(&self, x: &DenseMatrix, center: usize) -> Vec<f64> {
        let (e, w) = (self.config.embed_dim, self.config.conv_width);
        let half = w / 2;
        let mut buf = vec![0.0; w * e];
        for k in 0..w {
            let pos = center as isize + k as isize - half as isize;
            if pos >= 0 && (pos as usize) < x.rows() {
                buf[k * e..(k + 1) * e].copy_from_slice(x.row(pos as usize));
            }
        }
        buf
    }

    /// Forward pass with cached activations for a later [`backward`].
    ///
    /// [`backward`]: ConvTokenEncoder::backward
    pub fn forward(&self, tokens: &[String]) -> (HiddenStates, EncoderCache) {
        let mut ids = Vec::with_capacity(tokens.len() + 1);
        ids.push(BOS_ID);
        ids.extend(tokens.iter().map(|t| self.vocab.id(t)));
        let n1 = ids.len();
        let (e, h) = (self.config.embed_dim, self.config.hidden_dim);

        let mut x = DenseMatrix::zeros(n1, e);
        for (row, &id) in ids.iter().enumerate() {
            x.row_mut(row).copy_from_slice(self.embedding.row(id));
        }

        let mut pre = DenseMatrix::zeros(n1, h);
        let mut out = DenseMatrix::zeros(n1, h);
        for i in 0..n1 {
            let win = self.window(&x, i);
            let row = pre.row_mut(i);
            for (o, r) in row.iter_mut().enumerate() {
                *r = self.conv_bias[o] + crate::numeric::dot(self.conv_weight.row(o), &win);
            }
            for (o, &p) in out.row_mut(i).iter_mut().zip(pre.row(i).iter()) {
                *o = gelu(p);
            }
        }
        (HiddenStates(out), EncoderCache { ids, x, pre })
    }

    /// Accumulate parameter gradients given `d_hidden = dL/dH`.
    pub fn backward(&self, cache: &EncoderCache, d_hidden: &DenseMatrix, grads: &mut EncoderGrads) {
        let n1 = cache.ids.len();
        let (e, w) = (self.config.embed_dim, self.config.conv_width);
        let half = w / 2;
        debug_assert_eq!(d_hidden.rows(), n1);

        let mut dx = DenseMatrix::zeros(n1, e);
        let mut d_pre_row = vec![0.0; self.config.hidden_dim];
        for i in 0..n1 {
            for (d, (&dh, &p)) in d_pre_row
                .iter_mut()
                .zip(d_hidden.row(i).iter().zip(cache.pre.row(i).iter()))
            {
                *d = dh * gelu_prime(p);
            }
            for (b, &d) in grads.conv_bias.iter_mut().zip(d_pre_row.iter()) {
                *b += d;
            }
            let win = self.window(&cache.x, i);
            grads.conv_weight.add_outer(&d_pre_row, &win);
            // d window = W^T d_pre; scatter back into dx.
            let dwin = self.conv_weight.vec_mul(&d_pre_row).expect("conv shape");
            for k in 0..w {
                let pos = i as isize + k as isize - half as isize;
                if pos >= 0 && (pos as usize) < n1 {
                    let row = dx.row_mut(pos as usize);
                    for (r, &d) in row.iter_mut().zip(dwin[k * e..(k + 1) * e].iter()) {
                        *r += d;
                    }
                }
            }
        }
        for (row, &id) in cache.ids.iter().enumerate() {
            let target = grads.embedding.row_mut(id);
            for (t, &d) in target.iter_mut().zip(dx.row(row).iter()) {
                *t += d;
            }
        }
    }
}

impl TokenEncoder for ConvTokenEncoder {
    fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }

    fn encode(&self, tokens: &[String]) -> Result<HiddenStates> {
        Ok(self.forward(tokens).0)
    }
}
