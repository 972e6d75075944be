//! Graph-level exact-match scoring.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::pipeline::graph::CaseGraph;
use crate::tagger::Prf;

/// Node and edge exact-match scores plus their pooled combination.
#[derive(Debug, Clone)]
pub struct GraphScores {
    pub nodes: Prf,
    pub edges: Prf,
    pub combined: Prf,
}

fn node_key(node: &crate::pipeline::graph::Node) -> String {
    let attrs: Vec<String> = node.attributes.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let aliases: Vec<&str> = node.aliases.iter().map(String::as_str).collect();
    format!("{}|{}|{}", node.node_type, aliases.join(";"), attrs.join(";"))
}

fn graph_keys(g: &CaseGraph) -> (BTreeSet<String>, BTreeSet<String>) {
    let by_id: std::collections::BTreeMap<&str, String> =
        g.nodes.iter().map(|n| (n.id.as_str(), node_key(n))).collect();
    let nodes: BTreeSet<String> = by_id.values().cloned().collect();
    let edges: BTreeSet<String> = g
        .edges
        .iter()
        .filter_map(|e| {
            let s = by_id.get(e.source.as_str())?;
            let t = by_id.get(e.target.as_str())?;
            Some(format!("{s} -[{}]-> {t}", e.relation))
        })
        .collect();
    (nodes, edges)
}

/// Exact-match F1 of predicted graphs against gold, micro-averaged over
/// documents. A node matches when its type, alias set, and attributes all
/// agree; an edge matches when its endpoints' keys and relation agree.
pub fn graph_match_f1(gold: &[CaseGraph], predicted: &[CaseGraph]) -> Result<GraphScores> {
    if gold.len() != predicted.len() {
        return Err(Error::shape(
            format!("{} graphs", gold.len()),
            format!("{}", predicted.len()),
        ));
    }
    let (mut n_tp, mut n_pred, mut n_gold) = (0usize, 0usize, 0usize);
    let (mut e_tp, mut e_pred, mut e_gold) = (0usize, 0usize, 0usize);
    for (g, p) in gold.iter().zip(predicted.iter()) {
        let (gn, ge) = graph_keys(g);
        let (pn, pe) = graph_keys(p);
        n_tp += gn.intersection(&pn).count();
        n_pred += pn.len();
        n_gold += gn.len();
        e_tp += ge.intersection(&pe).count();
        e_pred += pe.len();
        e_gold += ge.len();
    }
    Ok(GraphScores {
        nodes: Prf::from_counts(n_tp, n_pred, n_gold),
        edges: Prf::from_counts(e_tp, e_pred, e_gold),
        combined: Prf::from_counts(n_tp + e_tp, n_pred + e_pred, n_gold + e_gold),
    })
}
