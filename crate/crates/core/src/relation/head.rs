//! Relation-head features: sentence pooling, entity averaging, fusion, and
//! type-aware classification.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::HiddenStates;
use crate::error::{Error, Result};
use crate::numeric::matrix::DenseMatrix;
use crate::numeric::{gelu, gelu_prime, log_sum_exp};

/// Trainable parameters of the relation head.
///
/// Dimensions: `d_h` hidden width, `d_f` fusion width, `d_e` entity-type
/// embedding width, `d_r` relation-label embedding width. The margin loss
/// adds relation embeddings to averaged entity features, so `d_r == d_h`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationHeadParams {
    /// `d_h x d_f` sentence pooler.
    pub w_sent: DenseMatrix,
    /// `(d_f + 2 d_h) x d_f` fusion weights.
    pub w_fused: DenseMatrix,
    pub b_fused: Vec<f64>,
    /// `(2 d_e + d_f) x n_classes` output projection.
    pub w_final: DenseMatrix,
    /// `n_entity_types x d_e` entity-type embeddings.
    pub type_embed: DenseMatrix,
    /// `n_substantive_relations x d_r` relation-label embeddings.
    pub rel_embed: DenseMatrix,
}

impl RelationHeadParams {
    pub fn new(
        hidden_dim: usize,
        feature_dim: usize,
        entity_type_dim: usize,
        relation_embed_dim: usize,
        n_entity_types: usize,
        n_relations: usize,
        n_classes: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if relation_embed_dim != hidden_dim {
            return Err(Error::invalid(format!(
                "relation embedding dim {relation_embed_dim} must equal hidden dim {hidden_dim}"
            )));
        }
        let mut init = |rows: usize, cols: usize| {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            let mut m = DenseMatrix::zeros(rows, cols);
            for v in m.as_mut_slice() {
                *v = rng.random_range(-bound..bound);
            }
            m
        };
        Ok(RelationHeadParams {
            w_sent: init(hidden_dim, feature_dim),
            w_fused: init(feature_dim + 2 * hidden_dim, feature_dim),
            b_fused: vec![0.0; feature_dim],
            w_final: init(2 * entity_type_dim + feature_dim, n_classes),
            type_embed: init(n_entity_types, entity_type_dim),
            rel_embed: init(n_relations, relation_embed_dim),
        })
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_sent.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.w_sent.cols()
    }

    pub fn entity_type_dim(&self) -> usize {
        self.type_embed.cols()
    }

    pub fn class_count(&self) -> usize {
        self.w_final.cols()
    }
}

/// Pooled sentence feature: `tanh(H_start · W_sent)`.
pub fn sentence_feature(start_slot: &[f64], w_sent: &DenseMatrix) -> Result<Vec<f64>> {
    if start_slot.len() != w_sent.rows() {
        return Err(Error::shape(
            format!("{} hidden dims", w_sent.rows()),
            format!("{}", start_slot.len()),
        ));
    }
    Ok(w_sent.vec_mul(start_slot)?.into_iter().map(f64::tanh).collect())
}

/// Entity feature: mean of the hidden rows covered by the token span.
pub fn entity_feature(hidden: &HiddenStates, span: (usize, usize)) -> Result<Vec<f64>> {
    let (s, e) = span;
    if s >= e || e > hidden.token_count() {
        return Err(Error::invalid(format!(
            "span {s}..{e} invalid for {} tokens",
            hidden.token_count()
        )));
    }
    let mut acc = vec![0.0; hidden.dim()];
    for i in s..e {
        for (a, &v) in acc.iter_mut().zip(hidden.token_row(i).iter()) {
            *a += v;
        }
    }
    let n = (e - s) as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Feature fusion: `gelu((F_sent ⊕ F_ent1 ⊕ F_ent2) · W_fused + b_fused)`.
pub fn fuse(
    f_sent: &[f64],
    f_ent1: &[f64],
    f_ent2: &[f64],
    w_fused: &DenseMatrix,
    b_fused: &[f64],
) -> Result<Vec<f64>> {
    let concat_len = f_sent.len() + f_ent1.len() + f_ent2.len();
    if concat_len != w_fused.rows() || b_fused.len() != w_fused.cols() {
        return Err(Error::shape(
            format!("{} x {}", w_fused.rows(), w_fused.cols()),
            format!("concat {} + bias {}", concat_len, b_fused.len()),
        ));
    }
    let mut u = Vec::with_capacity(concat_len);
    u.extend_from_slice(f_sent);
    u.extend_from_slice(f_ent1);
    u.extend_from_slice(f_ent2);
    let mut out = w_fused.vec_mul(&u)?;
    for (o, &b) in out.iter_mut().zip(b_fused.iter()) {
        *o = gelu(*o + b);
    }
    Ok(out)
}

/// Type-aware classification: softmax over
/// `(typeEmb(t1) ⊕ typeEmb(t2) ⊕ F_fused) · W_final`.
pub fn classify(
    f_fused: &[f64],
    type1: usize,
    type2: usize,
    params: &RelationHeadParams,
) -> Result<Vec<f64>> {
    if type1 >= params.type_embed.rows() || type2 >= params.type_embed.rows() {
        return Err(Error::UnknownId(format!("entity type index {type1} or {type2}")));
    }
    let logits = final_logits(f_fused, type1, type2, params)?;
    Ok(softmax(&logits))
}

pub(crate) fn final_feature(
    f_fused: &[f64],
    type1: usize,
    type2: usize,
    params: &RelationHeadParams,
) -> Result<Vec<f64>> {
    if f_fused.len() != params.feature_dim() {
        return Err(Error::shape(
            format!("{} fused dims", params.feature_dim()),
            format!("{}", f_fused.len()),
        ));
    }
    let mut f = Vec::with_capacity(2 * params.entity_type_dim() + f_fused.len());
    f.extend_from_slice(params.type_embed.row(type1));
    f.extend_from_slice(params.type_embed.row(type2));
    f.extend_from_slice(f_fused);
    Ok(f)
}

fn final_logits(
    f_fused: &[f64],
    type1: usize,
    type2: usize,
    params: &RelationHeadParams,
) -> Result<Vec<f64>> {
    let f = final_feature(f_fused, type1, type2, params)?;
    params.w_final.vec_mul(&f)
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|&v| (v - lse).exp()).collect()
}

/// Activations cached for the backward pass of one instance.
pub struct HeadCache {
    pub f_sent: Vec<f64>,
    pub f_e1: Vec<f64>,
    pub f_e2: Vec<f64>,
    pub concat_u: Vec<f64>,
    pub fused_pre: Vec<f64>,
    pub f_fused: Vec<f64>,
    pub f_final: Vec<f64>,
    pub probs: Vec<f64>,
    pub type1: usize,
    pub type2: usize,
    pub span1: (usize, usize),
    pub span2: (usize, usize),
}

/// Full head forward with caching; spans are token spans into `hidden`.
pub fn head_forward(
    hidden: &HiddenStates,
    span1: (usize, usize),
    span2: (usize, usize),
    type1: usize,
    type2: usize,
    params: &RelationHeadParams,
) -> Result<HeadCache> {
    let f_sent = sentence_feature(hidden.start_slot(), &params.w_sent)?;
    let f_e1 = entity_feature(hidden, span1)?;
    let f_e2 = entity_feature(hidden, span2)?;
    let mut concat_u = Vec::with_capacity(f_sent.len() + f_e1.len() + f_e2.len());
    concat_u.extend_from_slice(&f_sent);
    concat_u.extend_from_slice(&f_e1);
    concat_u.extend_from_slice(&f_e2);
    let mut fused_pre = params.w_fused.vec_mul(&concat_u)?;
    for (p, &b) in fused_pre.iter_mut().zip(params.b_fused.iter()) {
        *p += b;
    }
    let f_fused: Vec<f64> = fused_pre.iter().map(|&p| gelu(p)).collect();
    let f_final = final_feature(&f_fused, type1, type2, params)?;
    let logits = params.w_final.vec_mul(&f_final)?;
    let probs = softmax(&logits);
    Ok(HeadCache {
        f_sent,
        f_e1,
        f_e2,
        concat_u,
        fused_pre,
        f_fused,
        f_final,
        probs,
        type1,
        type2,
        span1,
        span2,
    })
}

/// Gradient accumulators for [`RelationHeadParams`].
pub struct HeadGrads {
    pub w_sent: DenseMatrix,
    pub w_fused: DenseMatrix,
    pub b_fused: Vec<f64>,
    pub w_final: DenseMatrix,
    pub type_embed: DenseMatrix,
    pub rel_embed: DenseMatrix,
}

impl HeadGrads {
    pub fn zeros(p: &RelationHeadParams) -> Self {
        HeadGrads {
            w_sent: DenseMatrix::zeros(p.w_sent.rows(), p.w_sent.cols()),
            w_fused: DenseMatrix::zeros(p.w_fused.rows(), p.w_fused.cols()),
            b_fused: vec![0.0; p.b_fused.len()],
            w_final: DenseMatrix::zeros(p.w_final.rows(), p.w_final.cols()),
            type_embed: DenseMatrix::zeros(p.type_embed.rows(), p.type_embed.cols()),
            rel_embed: DenseMatrix::zeros(p.rel_embed.rows(), p.rel_embed.cols()),
        }
    }
}

/// Backward through the classification path given `d_logits`, plus extra
/// gradients flowing directly into the entity features (from the
/// translation loss). Returns `dL/dH` over the full hidden matrix.
#[allow(clippy::too_many_arguments)]
pub fn head_backward(
    hidden: &HiddenStates,
    cache: &HeadCache,
    d_logits: &[f64],
    extra_d_e1: &[f64],
    extra_d_e2: &[f64],
    params: &RelationHeadParams,
    grads: &mut HeadGrads,
) -> Result<DenseMatrix> {
    let d_f = params.feature_dim();
    let d_h = params.hidden_dim();
    let d_e = params.entity_type_dim();

    grads.w_final.add_outer(&cache.f_final, d_logits);
    let d_final = params.w_final.mat_vec(d_logits)?;

    // Split d_final into the type embeddings and the fused feature.
    for (g, &d) in grads.type_embed.row_mut(cache.type1).iter_mut().zip(d_final[..d_e].iter()) {
        *g += d;
    }
    for (g, &d) in grads
        .type_embed
        .row_mut(cache.type2)
        .iter_mut()
        .zip(d_final[d_e..2 * d_e].iter())
    {
        *g += d;
    }
    let d_fused = &d_final[2 * d_e..];

    let d_fused_pre: Vec<f64> = d_fused
        .iter()
        .zip(cache.fused_pre.iter())
        .map(|(&d, &p)| d * gelu_prime(p))
        .collect();
    grads.w_fused.add_outer(&cache.concat_u, &d_fused_pre);
    for (b, &d) in grads.b_fused.iter_mut().zip(d_fused_pre.iter()) {
        *b += d;
    }
    let d_u = params.w_fused.mat_vec(&d_fused_pre)?;

    let d_sent = &d_u[..d_f];
    let mut d_e1: Vec<f64> = d_u[d_f..d_f + d_h].to_vec();
    let mut d_e2: Vec<f64> = d_u[d_f + d_h..].to_vec();
    for (d, &x) in d_e1.iter_mut().zip(extra_d_e1.iter()) {
        *d += x;
    }
    for (d, &x) in d_e2.iter_mut().zip(extra_d_e2.iter()) {
        *d += x;
    }

    // tanh backward into the pooler.
    let d_sent_pre: Vec<f64> = d_sent
        .iter()
        .zip(cache.f_sent.iter())
        .map(|(&d, &f)| d * (1.0 - f * f))
        .collect();
    grads.w_sent.add_outer(hidden.start_slot(), &d_sent_pre);
    let d_start = params.w_sent.mat_vec(&d_sent_pre)?;

    let mut d_hidden = DenseMatrix::zeros(hidden.0.rows(), hidden.0.cols());
    d_hidden.row_mut(0).copy_from_slice(&d_start);
    for (span, d_feat) in [(cache.span1, &d_e1), (cache.span2, &d_e2)] {
        let n = (span.1 - span.0) as f64;
        for i in span.0..span.1 {
            let row = d_hidden.row_mut(i + 1);
            for (r, &d) in row.iter_mut().zip(d_feat.iter()) {
                *r += d / n;
            }
        }
    }
    Ok(d_hidden)
}
