//! Document-to-graph pipeline: rule-based segmentation and extraction,
//! referent completion, entity and relation extraction over trained
//! models, knowledge fusion, graph export, and the synthetic corpus
//! generator that makes the whole flow testable end to end.

pub mod construct;
pub mod document;
pub mod eval;
pub mod export;
pub mod extract;
pub mod fuse;
pub mod graph;
pub mod preprocess;
pub mod rules;
pub mod segment;
pub mod synth;

pub use construct::{build_case_graph, run_ner, run_relation_extraction};
pub use document::{CaseDocument, CaseInfo, Party, PartyRole, Segment, SegmentType};
pub use eval::{graph_match_f1, GraphScores};
pub use export::{export_graph, ExportFormat};
pub use extract::extract_structured;
pub use fuse::{alias_groups, fuse_knowledge, FactTriple, SurfaceRecord};
pub use graph::{CaseGraph, Edge, Node, Provenance};
pub use preprocess::{preprocess_facts, FactSentence};
pub use rules::{example_rules, AliasRule, CompiledRules, FieldRule, RuleSet, SegmentRule};
pub use segment::{segment_document, segment_eval, SegmentScores};
pub use synth::{example_schema, generate_synthetic_corpus, SynthCorpus, SynthDocument};
