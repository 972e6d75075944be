//! The fused per-document case graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::document::SegmentType;

/// Where an edge came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Derived from structured segments by rules.
    Structured { segment: SegmentType },
    /// Extracted from a facts sentence (index into the preprocessed
    /// sentence list).
    Fact { sentence: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub node_type: String,
    pub attributes: BTreeMap<String, String>,
    pub aliases: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub relation: String,
    pub provenance: Provenance,
    pub confidence: f64,
}

/// A per-document knowledge graph with fusion warnings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CaseGraph {
    pub doc_id: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub warnings: Vec<String>,
}

impl CaseGraph {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Check the structural invariants: endpoints exist and no duplicate
    /// `(source, relation, target)` edges.
    pub fn validate(&self) -> Result<()> {
        let ids: BTreeSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        if ids.len() != self.nodes.len() {
            return Err(Error::invalid("duplicate node ids"));
        }
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            if !ids.contains(e.source.as_str()) || !ids.contains(e.target.as_str()) {
                return Err(Error::invalid(format!(
                    "edge {} -[{}]-> {} references a missing node",
                    e.source, e.relation, e.target
                )));
            }
            if !seen.insert((e.source.as_str(), e.relation.as_str(), e.target.as_str())) {
                return Err(Error::invalid(format!(
                    "duplicate edge {} -[{}]-> {}",
                    e.source, e.relation, e.target
                )));
            }
        }
        Ok(())
    }
}
