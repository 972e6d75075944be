//! BIO label sequences to entity mentions and back, plus span metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tagger::tagset::TagSet;

/// A typed token span; `end` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub start: usize,
    pub end: usize,
    pub entity_type: String,
    pub text: String,
}

impl EntityMention {
    pub fn span_key(&self) -> (usize, usize, &str) {
        (self.start, self.end, &self.entity_type)
    }
}

/// Turn a BIO label sequence into maximal mentions.
///
/// A stray `I-x` with no live `x` run is repaired to `B-x`; this cannot
/// come out of masked decoding, but external label sequences may carry it.
pub fn decode_mentions(tokens: &[String], labels: &[usize], tagset: &TagSet) -> Result<Vec<EntityMention>> {
    if tokens.len() != labels.len() {
        return Err(Error::shape(
            format!("{} labels", tokens.len()),
            format!("{}", labels.len()),
        ));
    }
    let mut mentions = Vec::new();
    let mut open: Option<(usize, usize)> = None; // (type_idx, start)
    let flush = |open: &mut Option<(usize, usize)>, end: usize, out: &mut Vec<EntityMention>| {
        if let Some((t, s)) = open.take() {
            out.push(EntityMention {
                start: s,
                end,
                entity_type: tagset.entity_types()[t].clone(),
                text: tokens[s..end].join(" "),
            });
        }
    };
    for (i, &y) in labels.iter().enumerate() {
        if let Some(t) = tagset.begin_type(y) {
            flush(&mut open, i, &mut mentions);
            open = Some((t, i));
        } else if let Some(t) = tagset.inside_type(y) {
            match open {
                Some((ot, _)) if ot == t => {} // continues the run
                _ => {
                    // Stray I-x: treat as B-x.
                    flush(&mut open, i, &mut mentions);
                    open = Some((t, i));
                }
            }
        } else if y == tagset.outside() {
            flush(&mut open, i, &mut mentions);
        } else {
            return Err(Error::invalid(format!("label {y} is not an emission label")));
        }
    }
    flush(&mut open, labels.len(), &mut mentions);
    Ok(mentions)
}

/// Inverse of [`decode_mentions`] for non-overlapping mentions.
pub fn encode_mentions(len: usize, mentions: &[EntityMention], tagset: &TagSet) -> Result<Vec<usize>> {
    let mut labels = vec![tagset.outside(); len];
    for m in mentions {
        if m.start >= m.end || m.end > len {
            return Err(Error::invalid(format!("bad span {}..{}", m.start, m.end)));
        }
        let t = tagset
            .entity_types()
            .iter()
            .position(|e| *e == m.entity_type)
            .ok_or_else(|| Error::Schema(format!("unknown entity type '{}'", m.entity_type)))?;
        for i in m.start..m.end {
            if labels[i] != tagset.outside() {
                return Err(Error::invalid(format!("overlapping mentions at token {i}")));
            }
            labels[i] = if i == m.start {
                tagset.begin_label(t)
            } else {
                tagset.inside_label(t)
            };
        }
    }
    Ok(labels)
}

/// Precision/recall/F1 with raw counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Prf {
    pub fn from_counts(tp: usize, predicted: usize, gold: usize) -> Prf {
        let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let recall = if gold == 0 { 0.0 } else { tp as f64 / gold as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
            true_positives: tp,
            predicted,
            gold,
        }
    }
}

/// Exact-span, exact-type mention scores, overall and per entity type.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpanScores {
    pub overall: Prf,
    pub per_type: BTreeMap<String, Prf>,
}

/// Score predicted mentions against gold over aligned documents.
pub fn span_f1(gold: &[Vec<EntityMention>], predicted: &[Vec<EntityMention>]) -> Result<SpanScores> {
    if gold.len() != predicted.len() {
        return Err(Error::shape(
            format!("{} documents", gold.len()),
            format!("{}", predicted.len()),
        ));
    }
    let mut tp_by: BTreeMap<String, usize> = BTreeMap::new();
    let mut pred_by: BTreeMap<String, usize> = BTreeMap::new();
    let mut gold_by: BTreeMap<String, usize> = BTreeMap::new();
    for (g_doc, p_doc) in gold.iter().zip(predicted.iter()) {
        for g in g_doc {
            *gold_by.entry(g.entity_type.clone()).or_default() += 1;
        }
        for p in p_doc {
            *pred_by.entry(p.entity_type.clone()).or_default() += 1;
            if g_doc.iter().any(|g| g.span_key() == p.span_key()) {
                *tp_by.entry(p.entity_type.clone()).or_default() += 1;
            }
        }
    }
    let mut types: Vec<String> = gold_by.keys().chain(pred_by.keys()).cloned().collect();
    types.sort();
    types.dedup();
    let mut per_type = BTreeMap::new();
    let (mut tp, mut pred, mut gold_n) = (0, 0, 0);
    for t in types {
        let (a, b, c) = (
            tp_by.get(&t).copied().unwrap_or(0),
            pred_by.get(&t).copied().unwrap_or(0),
            gold_by.get(&t).copied().unwrap_or(0),
        );
        tp += a;
        pred += b;
        gold_n += c;
        per_type.insert(t, Prf::from_counts(a, b, c));
    }
    Ok(SpanScores {
        overall: Prf::from_counts(tp, pred, gold_n),
        per_type,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts() -> TagSet {
        TagSet::new(vec!["MV".into(), "NP".into()]).unwrap()
    }

    fn toks(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn simple_run() {
        let tagset = ts();
        // [B-MV, I-MV, O]
        let labels = vec![tagset.begin_label(0), tagset.inside_label(0), 0];
        let m = decode_mentions(&toks(3), &labels, &tagset).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].start, 0);
        assert_eq!(m[0].end, 2);
        assert_eq!(m[0].entity_type, "MV");
        assert_eq!(m[0].text, "t0 t1");
    }

    #[test]
    fn all_outside_is_empty() {
        let tagset = ts();
        assert!(decode_mentions(&toks(2), &[0, 0], &tagset).unwrap().is_empty());
    }

    #[test]
    fn stray_inside_repaired() {
        let tagset = ts();
        // [I-NP, O, B-MV] -> NP at 0..1 and MV at 2..3.
        let labels = vec![tagset.inside_label(1), 0, tagset.begin_label(0)];
        let m = decode_mentions(&toks(3), &labels, &tagset).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].start, m[0].end, m[0].entity_type.as_str()), (0, 1, "NP"));
        assert_eq!((m[1].start, m[1].end, m[1].entity_type.as_str()), (2, 3, "MV"));
    }

    #[test]
    fn adjacent_begin_splits_runs() {
        let tagset = ts();
        let labels = vec![tagset.begin_label(0), tagset.begin_label(0)];
        let m = decode_mentions(&toks(2), &labels, &tagset).unwrap();
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn encode_then_decode_roundtrip() {
        let tagset = ts();
        let labels = vec![
            0,
            tagset.begin_label(1),
            tagset.inside_label(1),
            0,
            tagset.begin_label(0),
        ];
        let mentions = decode_mentions(&toks(5), &labels, &tagset).unwrap();
        let relabeled = encode_mentions(5, &mentions, &tagset).unwrap();
        assert_eq!(relabeled, labels);
    }

    #[test]
    fn span_f1_identical_sets() {
        let m = vec![EntityMention {
            start: 0,
            end: 2,
            entity_type: "MV".into(),
            text: "a b".into(),
        }];
        let s = span_f1(&[m.clone()], &[m]).unwrap();
        assert_eq!(s.overall.f1, 1.0);
        assert_eq!(s.overall.precision, 1.0);
        assert_eq!(s.overall.recall, 1.0);
    }

    #[test]
    fn span_f1_disjoint_sets() {
        let g = vec![EntityMention {
            start: 0,
            end: 1,
            entity_type: "MV".into(),
            text: "a".into(),
        }];
        let p = vec![EntityMention {
            start: 1,
            end: 2,
            entity_type: "MV".into(),
            text: "b".into(),
        }];
        let s = span_f1(&[g], &[p]).unwrap();
        assert_eq!(s.overall.f1, 0.0);
        assert_eq!(s.overall.precision, 0.0);
        assert_eq!(s.overall.recall, 0.0);
    }

    #[test]
    fn span_f1_hand_case() {
        // 3 gold, 2 predicted, 1 correct: P=0.5, R=1/3, F1=0.4.
        let mk = |s: usize, t: &str| EntityMention {
            start: s,
            end: s + 1,
            entity_type: t.into(),
            text: "x".into(),
        };
        let gold = vec![mk(0, "MV"), mk(1, "MV"), mk(2, "NP")];
        let pred = vec![mk(0, "MV"), mk(5, "NP")];
        let s = span_f1(&[gold], &[pred]).unwrap();
        assert!((s.overall.precision - 0.5).abs() < 1e-12);
        assert!((s.overall.recall - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.overall.f1 - 0.4).abs() < 1e-12);
    }
}
