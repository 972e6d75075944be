//! Relation angle vectors: per-coordinate phase differences between the
//! tail and head entities of each training pair.

use crate::error::{Error, Result};
use crate::kge::rotate::{ComplexEmbedding, KgeTables};
use crate::kge::store::TripleStore;
use crate::numeric::wrap_angle;

/// The angle vectors of one relation, one row per training (head, tail)
/// pair, entries wrapped to `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleVectorSet {
    pub relation: usize,
    pub vectors: Vec<Vec<f64>>,
}

impl AngleVectorSet {
    pub fn pair_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }
}

/// Per coordinate `arg(t_j) − arg(h_j)`, wrapped to `(-pi, pi]`.
///
/// Errors on a zero-modulus coordinate, whose phase is undefined.
pub fn relation_angle_vector(h: &ComplexEmbedding, t: &ComplexEmbedding) -> Result<Vec<f64>> {
    if h.dim() != t.dim() {
        return Err(Error::shape(format!("{} dims", h.dim()), format!("{}", t.dim())));
    }
    let mut out = Vec::with_capacity(h.dim());
    for j in 0..h.dim() {
        for (name, e) in [("head", h), ("tail", t)] {
            if e.modulus(j) < 1e-15 {
                return Err(Error::Degenerate(format!(
                    "undefined phase: {name} coordinate {j} has zero modulus"
                )));
            }
        }
        let arg_t = t.im[j].atan2(t.re[j]);
        let arg_h = h.im[j].atan2(h.re[j]);
        out.push(wrap_angle(arg_t - arg_h));
    }
    Ok(out)
}

/// Angle vectors for every training pair of the relation, in train order.
pub fn collect_relation_angles(
    store: &TripleStore,
    tables: &KgeTables,
    relation: usize,
) -> Result<AngleVectorSet> {
    if relation >= store.relation_count() {
        return Err(Error::UnknownId(format!("relation index {relation}")));
    }
    let mut vectors = Vec::new();
    for &[h, r, t] in &store.train {
        if r != relation {
            continue;
        }
        let he = tables.entity_embedding(h);
        let te = tables.entity_embedding(t);
        vectors.push(relation_angle_vector(&he, &te)?);
    }
    if vectors.is_empty() {
        return Err(Error::invalid(format!(
            "relation '{}' has no training triples",
            store.relation_name(relation)
        )));
    }
    Ok(AngleVectorSet { relation, vectors })
}
