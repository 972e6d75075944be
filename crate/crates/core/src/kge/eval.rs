//! Filtered link-prediction evaluation and completion queries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kge::components::SemanticComponentSet;
use crate::kge::rotate::{KgeTables, Norm};
use crate::kge::store::TripleStore;

/// Plausibility scorer over indexed triples; higher is more plausible.
pub trait TripleScorer {
    fn score(&self, h: usize, r: usize, t: usize) -> f64;
}

/// Plain RotatE: negated rotation distance.
pub struct RotateScorer<'a> {
    pub tables: &'a KgeTables,
    pub norm: Norm,
}

impl TripleScorer for RotateScorer<'_> {
    fn score(&self, h: usize, r: usize, t: usize) -> f64 {
        -self.tables.triple_distance(h, r, t, self.norm)
    }
}

/// Multi-semantic scoring: the best component of the relation wins.
/// Relations without derived components fall back to the single trained
/// phase vector.
pub struct MsreScorer<'a> {
    pub tables: &'a KgeTables,
    pub components: &'a BTreeMap<usize, SemanticComponentSet>,
    pub norm: Norm,
}

impl TripleScorer for MsreScorer<'_> {
    fn score(&self, h: usize, r: usize, t: usize) -> f64 {
        match self.components.get(&r) {
            Some(set) => {
                crate::kge::components::msre_score_tables(self.tables, h, set, t, self.norm).0
            }
            None => -self.tables.triple_distance(h, r, t, self.norm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum QuerySide {
    #[default]
    Both,
    TailOnly,
    HeadOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum EvalPartition {
    #[default]
    Test,
    Valid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkPredictionReport {
    pub mrr: f64,
    pub hits_at_1: f64,
    pub hits_at_3: f64,
    pub hits_at_10: f64,
    pub query_count: usize,
}

/// Rank of the true entity among candidates; ties take the mean rank.
fn ranked_position(true_score: f64, others: impl Iterator<Item = f64>) -> f64 {
    let mut better = 0usize;
    let mut ties = 0usize;
    for s in others {
        if s > true_score {
            better += 1;
        } else if s == true_score {
            ties += 1;
        }
    }
    1.0 + better as f64 + ties as f64 / 2.0
}

/// Filtered MRR / Hits@k over one partition.
///
/// For each query the remaining known-true triples (any partition) are
/// removed from the candidate list before ranking.
pub fn eval_link_prediction(
    store: &TripleStore,
    scorer: &dyn TripleScorer,
    side: QuerySide,
    filtered: bool,
    partition: EvalPartition,
) -> Result<LinkPredictionReport> {
    let triples = match partition {
        EvalPartition::Test => &store.test,
        EvalPartition::Valid => &store.valid,
    };
    if triples.is_empty() {
        return Err(Error::invalid("evaluation partition is empty"));
    }
    let known = store.known_triples();
    let n = store.entity_count();

    let mut mrr = 0.0;
    let (mut h1, mut h3, mut h10) = (0.0, 0.0, 0.0);
    let mut queries = 0usize;

    let mut push_rank = |rank: f64| {
        mrr += 1.0 / rank;
        if rank <= 1.0 {
            h1 += 1.0;
        }
        if rank <= 3.0 {
            h3 += 1.0;
        }
        if rank <= 10.0 {
            h10 += 1.0;
        }
        queries += 1;
    };

    for &[h, r, t] in triples {
        if matches!(side, QuerySide::Both | QuerySide::TailOnly) {
            let true_score = scorer.score(h, r, t);
            let others = (0..n).filter_map(|e| {
                if e == t || (filtered && known.contains(&[h, r, e])) {
                    None
                } else {
                    Some(scorer.score(h, r, e))
                }
            });
            push_rank(ranked_position(true_score, others));
        }
        if matches!(side, QuerySide::Both | QuerySide::HeadOnly) {
            let true_score = scorer.score(h, r, t);
            let others = (0..n).filter_map(|e| {
                if e == h || (filtered && known.contains(&[e, r, t])) {
                    None
                } else {
                    Some(scorer.score(e, r, t))
                }
            });
            push_rank(ranked_position(true_score, others));
        }
    }

    let q = queries as f64;
    Ok(LinkPredictionReport {
        mrr: mrr / q,
        hits_at_1: h1 / q,
        hits_at_3: h3 / q,
        hits_at_10: h10 / q,
        query_count: queries,
    })
}

/// A completion query with one open slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CompletionQuery {
    Tail { head: String, relation: String },
    Head { relation: String, tail: String },
}

/// Score every entity for the open slot, descending.
///
/// With `filtered` set, entities already forming a known triple with the
/// fixed slots are dropped from the candidate list.
pub fn complete(
    store: &TripleStore,
    scorer: &dyn TripleScorer,
    query: &CompletionQuery,
    filtered: bool,
    top_k: usize,
) -> Result<Vec<(String, f64)>> {
    let known = store.known_triples();
    let n = store.entity_count();
    let mut scored: Vec<(usize, f64)> = match query {
        CompletionQuery::Tail { head, relation } => {
            let h = store.entity_index(head)?;
            let r = store.relation_index(relation)?;
            (0..n)
                .filter(|&e| !(filtered && known.contains(&[h, r, e])))
                .map(|e| (e, scorer.score(h, r, e)))
                .collect()
        }
        CompletionQuery::Head { relation, tail } => {
            let r = store.relation_index(relation)?;
            let t = store.entity_index(tail)?;
            (0..n)
                .filter(|&e| !(filtered && known.contains(&[e, r, t])))
                .map(|e| (e, scorer.score(e, r, t)))
                .collect()
        }
    };
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(top_k.max(1));
    Ok(scored
        .into_iter()
        .map(|(e, s)| (store.entity_name(e).to_string(), s))
        .collect())
}
