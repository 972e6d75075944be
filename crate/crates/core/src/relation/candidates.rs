//! Candidate entity-pair generation under the schema's conceptual triples.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::relation::schema::{EntitySlot, RelationInstance, RelationSchema};
use crate::tagger::EntityMention;

/// A gold triple between mentions of one sentence, by mention index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldTriple {
    pub head_mention: usize,
    pub relation: String,
    pub tail_mention: usize,
}

/// Candidate generation mode.
#[derive(Debug, Clone, Copy)]
pub enum CandidateMode {
    /// Label pairs from gold triples; unrelated admissible pairs become
    /// "Other" and survive with `keep_prob`.
    Training { keep_prob: f64 },
    /// Keep every admissible ordered pair, unlabeled.
    Inference,
}

/// Enumerate ordered mention pairs whose type pair appears in some
/// relation's allowed pairs.
pub fn generate_candidates(
    tokens: &[String],
    mentions: &[EntityMention],
    schema: &RelationSchema,
    mode: CandidateMode,
    gold: &[GoldTriple],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<RelationInstance>> {
    let mut out = Vec::new();
    for (i, m1) in mentions.iter().enumerate() {
        for (j, m2) in mentions.iter().enumerate() {
            if i == j || !schema.pair_admissible(&m1.entity_type, &m2.entity_type) {
                continue;
            }
            let label = match mode {
                CandidateMode::Inference => None,
                CandidateMode::Training { keep_prob } => {
                    let gold_label = gold
                        .iter()
                        .find(|g| g.head_mention == i && g.tail_mention == j)
                        .map(|g| g.relation.clone());
                    match gold_label {
                        Some(l) => Some(l),
                        None => {
                            // Negative sample with the stated retention probability.
                            if rng.random::<f64>() < keep_prob {
                                Some(schema.other_label.clone())
                            } else {
                                continue;
                            }
                        }
                    }
                }
            };
            out.push(RelationInstance {
                tokens: tokens.to_vec(),
                e1: EntitySlot {
                    span: (m1.start, m1.end),
                    entity_type: m1.entity_type.clone(),
                },
                e2: EntitySlot {
                    span: (m2.start, m2.end),
                    entity_type: m2.entity_type.clone(),
                },
                label,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::schema::{EntityTypeDef, RelationDef};
    use rand::SeedableRng;

    fn schema() -> RelationSchema {
        RelationSchema {
            entity_types: vec![
                EntityTypeDef { id: 1, name: "NP".into() },
                EntityTypeDef { id: 2, name: "MV".into() },
                EntityTypeDef { id: 3, name: "MED".into() },
            ],
            relations: vec![RelationDef {
                id: 1,
                name: "Driving".into(),
                pairs: vec![("NP".into(), "MV".into())],
            }],
            other_label: "Other".into(),
        }
    }

    fn mention(s: usize, e: usize, t: &str) -> EntityMention {
        EntityMention {
            start: s,
            end: e,
            entity_type: t.into(),
            text: String::new(),
        }
    }

    fn toks(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn one_admissible_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mentions = vec![mention(0, 1, "NP"), mention(2, 3, "MV")];
        let cands = generate_candidates(
            &toks(4),
            &mentions,
            &schema(),
            CandidateMode::Inference,
            &[],
            &mut rng,
        )
        .unwrap();
        assert_eq!(cands.len(), 1, "only (NP, MV) is admissible");
        assert_eq!(cands[0].e1.entity_type, "NP");
        assert_eq!(cands[0].e2.entity_type, "MV");
        assert!(cands[0].label.is_none());
    }

    #[test]
    fn no_matching_type_pairs_yields_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mentions = vec![mention(0, 1, "MED"), mention(2, 3, "MED")];
        let cands = generate_candidates(
            &toks(4),
            &mentions,
            &schema(),
            CandidateMode::Inference,
            &[],
            &mut rng,
        )
        .unwrap();
        assert!(cands.is_empty());
    }

    #[test]
    fn training_mode_labels_gold_and_samples_other() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mentions = vec![mention(0, 1, "NP"), mention(2, 3, "MV"), mention(4, 5, "NP")];
        let gold = vec![GoldTriple {
            head_mention: 0,
            relation: "Driving".into(),
            tail_mention: 1,
        }];
        // Pairs: (0,1) gold Driving; (2,1) admissible NP->MV unrelated.
        let mut labeled = 0;
        let mut others = 0;
        for _ in 0..2000 {
            let cands = generate_candidates(
                &toks(6),
                &mentions,
                &schema(),
                CandidateMode::Training { keep_prob: 0.5 },
                &gold,
                &mut rng,
            )
            .unwrap();
            for c in cands {
                match c.label.as_deref() {
                    Some("Driving") => labeled += 1,
                    Some("Other") => others += 1,
                    _ => panic!("unexpected label"),
                }
            }
        }
        assert_eq!(labeled, 2000, "gold pair always kept");
        // Unrelated pair kept with p=0.5: 3-sigma binomial band around 1000.
        let sigma = (2000.0_f64 * 0.25).sqrt();
        assert!((others as f64 - 1000.0).abs() <= 3.0 * sigma, "others = {others}");
    }
}
