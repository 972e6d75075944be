//! Degenerate documents through the full construction flow.

use casegraph_core::encoder::EncoderConfig;
use casegraph_core::pipeline::{build_case_graph, example_rules, example_schema, CaseDocument};
use casegraph_core::relation::{train_re, EntitySlot, RelationInstance, TrainReConfig};
use casegraph_core::tagger::{train_ner, LabeledSentence, TrainNerConfig};

fn tiny_models() -> (casegraph_core::tagger::NerModel, casegraph_core::relation::ReModel) {
    let schema = example_schema();
    let tagset = schema.tagset().unwrap();
    let ner_corpus = vec![LabeledSentence {
        tokens: vec!["Ann".into(), "Bee".into(), "drove", "the", "sedan", "."].iter().map(|s| s.to_string()).collect(),
        labels: vec!["B-NP", "I-NP", "O", "O", "B-MV", "O"].iter().map(|s| s.to_string()).collect(),
    }];
    let ner_cfg = TrainNerConfig {
        epochs: 2,
        encoder: EncoderConfig { embed_dim: 8, hidden_dim: 8, conv_width: 3 },
        ..Default::default()
    };
    let (ner, _) = train_ner(&ner_corpus, &tagset, &ner_cfg).unwrap();

    let re_corpus = vec![RelationInstance {
        tokens: ner_corpus[0].tokens.clone(),
        e1: EntitySlot { span: (0, 2), entity_type: "NP".into() },
        e2: EntitySlot { span: (4, 5), entity_type: "MV".into() },
        label: Some("Driving".into()),
    }];
    let re_cfg = TrainReConfig {
        epochs: 2,
        entity_type_dim: 4,
        relation_embed_dim: 8,
        feature_dim: 8,
        encoder: EncoderConfig { embed_dim: 8, hidden_dim: 8, conv_width: 3 },
        ..Default::default()
    };
    let (re, _) = train_re(&re_corpus, &schema, &re_cfg).unwrap();
    (ner, re)
}

#[test]
fn document_without_facts_yields_case_and_party_nodes_only() {
    let (ner, re) = tiny_models();
    let schema = example_schema();
    let rules = example_rules().compile().unwrap();
    let doc = CaseDocument::new(
        "d-empty",
        "CIVIL JUDGMENT\nCase No. (2023)-Civ-0007\nRiverside People's Court\nPlaintiff: Ann Bee\nDefendant: Cal Dee\n",
    )
    .unwrap();
    let graph = build_case_graph(&doc, &ner, &re, &rules, &schema).unwrap();
    assert_eq!(graph.nodes.len(), 3, "case node plus the two parties");
    assert!(graph.node("case").is_some());
    let relations: Vec<&str> = graph.edges.iter().map(|e| e.relation.as_str()).collect();
    assert_eq!(relations.len(), 2);
    assert!(relations.contains(&"HAS_PLAINTIFF"));
    assert!(relations.contains(&"HAS_DEFENDANT"));
    graph.validate().unwrap();
}

#[test]
fn unstructured_document_still_builds_a_case_node() {
    let (ner, re) = tiny_models();
    let schema = example_schema();
    let rules = example_rules().compile().unwrap();
    // No rule matches anything: one `other` segment, no parties, no facts.
    let doc = CaseDocument::new("d-blob", "just some freeform text with no structure at all\n").unwrap();
    let graph = build_case_graph(&doc, &ner, &re, &rules, &schema).unwrap();
    assert_eq!(graph.nodes.len(), 1);
    assert_eq!(graph.nodes[0].id, "case");
    assert!(graph.edges.is_empty());
}
