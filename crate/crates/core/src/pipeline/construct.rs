//! Document-to-graph orchestration: segment, extract, preprocess, tag,
//! extract relations, fuse.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pipeline::document::{CaseDocument, SegmentType};
use crate::pipeline::fuse::{fuse_knowledge, FactTriple};
use crate::pipeline::graph::CaseGraph;
use crate::pipeline::preprocess::{preprocess_facts, FactSentence};
use crate::pipeline::rules::CompiledRules;
use crate::pipeline::segment::segment_document;
use crate::relation::{generate_candidates, CandidateMode, RelationSchema, ReModel};
use crate::tagger::{EntityMention, NerModel, TagSet};

fn step<T>(n: usize, name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Format(format!("step {n} ({name}): {e}")))
}

/// Tag every sentence with the trained model.
///
/// The model's tag set must match the pipeline's; a mismatch is an error
/// naming both.
pub fn run_ner(
    sentences: &[FactSentence],
    model: &NerModel,
    expected: &TagSet,
) -> Result<Vec<Vec<EntityMention>>> {
    if model.tagset() != expected {
        return Err(Error::Schema(format!(
            "tag set mismatch: model has [{}], pipeline expects [{}]",
            model.tagset().entity_types().join(", "),
            expected.entity_types().join(", ")
        )));
    }
    sentences
        .iter()
        .map(|s| model.predict_mentions(&s.tokens))
        .collect()
}

/// Classify every schema-admissible mention pair; "Other" predictions are
/// dropped from the triple list.
pub fn run_relation_extraction(
    sentences: &[FactSentence],
    mentions: &[Vec<EntityMention>],
    model: &ReModel,
    schema: &RelationSchema,
) -> Result<Vec<FactTriple>> {
    if model.schema != *schema {
        return Err(Error::Schema(
            "relation model was trained against a different schema".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0); // inference draws nothing
    let other = schema.other_index();
    let mut out = Vec::new();
    for (s_idx, (sentence, sent_mentions)) in sentences.iter().zip(mentions.iter()).enumerate() {
        let candidates = generate_candidates(
            &sentence.tokens,
            sent_mentions,
            schema,
            CandidateMode::Inference,
            &[],
            &mut rng,
        )?;
        for cand in candidates {
            let (best, probs) = model.predict(&cand.tokens, &cand.e1, &cand.e2)?;
            if best == other {
                continue;
            }
            let surface = |span: (usize, usize)| cand.tokens[span.0..span.1].join(" ");
            out.push(FactTriple {
                head_surface: surface(cand.e1.span),
                head_type: cand.e1.entity_type.clone(),
                relation: schema.class_name(best).to_string(),
                tail_surface: surface(cand.e2.span),
                tail_type: cand.e2.entity_type.clone(),
                sentence: s_idx,
                confidence: probs[best],
            });
        }
    }
    Ok(out)
}

/// Run the full seven-step flow for one document (export is separate).
pub fn build_case_graph(
    doc: &CaseDocument,
    ner: &NerModel,
    re: &ReModel,
    rules: &CompiledRules,
    schema: &RelationSchema,
) -> Result<CaseGraph> {
    let segments = step(1, "segmentation", segment_document(doc, rules))?;
    let info = step(
        2,
        "structured extraction",
        crate::pipeline::extract::extract_structured(&doc.text, &segments, rules),
    )?;
    let mut sentences = Vec::new();
    for seg in segments.iter().filter(|s| s.segment_type == SegmentType::Facts) {
        sentences.extend(preprocess_facts(seg.text(&doc.text), &info, rules));
    }
    let tagset = step(4, "entity recognition", schema.tagset())?;
    let mentions = step(4, "entity recognition", run_ner(&sentences, ner, &tagset))?;
    let triples = step(
        5,
        "relation extraction",
        run_relation_extraction(&sentences, &mentions, re, schema),
    )?;
    let graph = step(
        6,
        "knowledge fusion",
        fuse_knowledge(&doc.id, &info, &triples, &doc.text, rules),
    )?;
    Ok(graph)
}
