//! Graph export: JSON Lines and bulk-import CSV, byte-stable for
//! identical input.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pipeline::graph::{CaseGraph, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Jsonl,
    BulkCsv,
}

/// Write `nodes.*` and `edges.*` under `out_dir`; returns the file paths.
pub fn export_graph(graphs: &[CaseGraph], format: ExportFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    match format {
        ExportFormat::Jsonl => export_jsonl(graphs, out_dir),
        ExportFormat::BulkCsv => export_csv(graphs, out_dir),
    }
}

fn qualified_id(doc_id: &str, node_id: &str) -> String {
    format!("{doc_id}/{node_id}")
}

#[derive(Serialize)]
struct NodeRecord<'a> {
    id: String,
    #[serde(rename = "type")]
    node_type: &'a str,
    attributes: &'a std::collections::BTreeMap<String, String>,
    aliases: &'a std::collections::BTreeSet<String>,
}

#[derive(Serialize)]
struct EdgeRecord<'a> {
    source: String,
    target: String,
    relation: &'a str,
    sentence: Option<usize>,
    segment: Option<&'a str>,
    confidence: f64,
}

fn export_jsonl(graphs: &[CaseGraph], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let nodes_path = out_dir.join("nodes.jsonl");
    let edges_path = out_dir.join("edges.jsonl");
    let mut nodes = std::fs::File::create(&nodes_path)?;
    let mut edges = std::fs::File::create(&edges_path)?;
    for g in graphs {
        for n in &g.nodes {
            let rec = NodeRecord {
                id: qualified_id(&g.doc_id, &n.id),
                node_type: &n.node_type,
                attributes: &n.attributes,
                aliases: &n.aliases,
            };
            serde_json::to_writer(&mut nodes, &rec)?;
            nodes.write_all(b"\n")?;
        }
        for e in &g.edges {
            let rec = EdgeRecord {
                source: qualified_id(&g.doc_id, &e.source),
                target: qualified_id(&g.doc_id, &e.target),
                relation: &e.relation,
                sentence: match &e.provenance {
                    Provenance::Fact { sentence } => Some(*sentence),
                    Provenance::Structured { .. } => None,
                },
                segment: match &e.provenance {
                    Provenance::Structured { segment } => Some(segment.name()),
                    Provenance::Fact { .. } => None,
                },
                confidence: e.confidence,
            };
            serde_json::to_writer(&mut edges, &rec)?;
            edges.write_all(b"\n")?;
        }
    }
    Ok(vec![nodes_path, edges_path])
}

fn export_csv(graphs: &[CaseGraph], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let nodes_path = out_dir.join("nodes.csv");
    let edges_path = out_dir.join("edges.csv");

    let mut nodes = csv::Writer::from_path(&nodes_path)?;
    // Bulk-import header convention: `id:ID`, `:LABEL`, arrays joined by ';'.
    nodes.write_record(["id:ID", "type:LABEL", "name", "aliases:string[]", "attributes"])?;
    for g in graphs {
        for n in &g.nodes {
            let aliases: Vec<&str> = n.aliases.iter().map(String::as_str).collect();
            nodes.write_record([
                qualified_id(&g.doc_id, &n.id),
                n.node_type.clone(),
                n.attributes.get("name").cloned().unwrap_or_default(),
                aliases.join(";"),
                serde_json::to_string(&n.attributes)?,
            ])?;
        }
    }
    nodes.flush()?;

    let mut edges = csv::Writer::from_path(&edges_path)?;
    edges.write_record([":START_ID", ":END_ID", ":TYPE", "sentence:int", "confidence:double"])?;
    for g in graphs {
        for e in &g.edges {
            let sentence = match &e.provenance {
                Provenance::Fact { sentence } => sentence.to_string(),
                Provenance::Structured { .. } => String::new(),
            };
            edges.write_record([
                qualified_id(&g.doc_id, &e.source),
                qualified_id(&g.doc_id, &e.target),
                e.relation.clone(),
                sentence,
                format!("{}", e.confidence),
            ])?;
        }
    }
    edges.flush()?;
    Ok(vec![nodes_path, edges_path])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::document::SegmentType;
    use crate::pipeline::graph::{Edge, Node};
    use std::collections::{BTreeMap, BTreeSet};

    fn sample_graph() -> CaseGraph {
        let node = |id: &str, ty: &str, name: &str| Node {
            id: id.into(),
            node_type: ty.into(),
            attributes: BTreeMap::from([("name".to_string(), name.to_string())]),
            aliases: BTreeSet::from([name.to_string()]),
        };
        CaseGraph {
            doc_id: "doc1".into(),
            nodes: vec![
                node("n0", "MV", "sedan AB-1234"),
                node("n1", "NP", "Ann Bee"),
                Node {
                    id: "case".into(),
                    node_type: "Case".into(),
                    attributes: BTreeMap::from([("case_number".to_string(), "(2023)-Civ-1".to_string())]),
                    aliases: BTreeSet::new(),
                },
            ],
            edges: vec![
                Edge {
                    source: "n1".into(),
                    target: "n0".into(),
                    relation: "Driving".into(),
                    provenance: Provenance::Fact { sentence: 0 },
                    confidence: 0.97,
                },
                Edge {
                    source: "case".into(),
                    target: "n1".into(),
                    relation: "HAS_PLAINTIFF".into(),
                    provenance: Provenance::Structured { segment: SegmentType::PartyInfo },
                    confidence: 1.0,
                },
            ],
            warnings: vec![],
        }
    }

    #[test]
    fn empty_graph_exports_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let paths = export_graph(&[], ExportFormat::BulkCsv, dir.path()).unwrap();
        let nodes = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(nodes, "id:ID,type:LABEL,name,aliases:string[],attributes\n");
        let edges = std::fs::read_to_string(&paths[1]).unwrap();
        assert_eq!(edges, ":START_ID,:END_ID,:TYPE,sentence:int,confidence:double\n");
    }

    #[test]
    fn export_is_byte_stable() {
        let g = vec![sample_graph()];
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        for fmt in [ExportFormat::Jsonl, ExportFormat::BulkCsv] {
            let p1 = export_graph(&g, fmt, d1.path()).unwrap();
            let p2 = export_graph(&g, fmt, d2.path()).unwrap();
            for (a, b) in p1.iter().zip(p2.iter()) {
                assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
            }
        }
    }

    #[test]
    fn golden_csv_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let paths = export_graph(&[sample_graph()], ExportFormat::BulkCsv, dir.path()).unwrap();
        let nodes = std::fs::read_to_string(&paths[0]).unwrap();
        let expected_nodes = "id:ID,type:LABEL,name,aliases:string[],attributes\n\
doc1/n0,MV,sedan AB-1234,sedan AB-1234,\"{\"\"name\"\":\"\"sedan AB-1234\"\"}\"\n\
doc1/n1,NP,Ann Bee,Ann Bee,\"{\"\"name\"\":\"\"Ann Bee\"\"}\"\n\
doc1/case,Case,,,\"{\"\"case_number\"\":\"\"(2023)-Civ-1\"\"}\"\n";
        assert_eq!(nodes, expected_nodes);
        let edges = std::fs::read_to_string(&paths[1]).unwrap();
        let expected_edges = ":START_ID,:END_ID,:TYPE,sentence:int,confidence:double\n\
doc1/n1,doc1/n0,Driving,0,0.97\ndoc1/case,doc1/n1,HAS_PLAINTIFF,,1\n";
        assert_eq!(edges, expected_edges);
    }

    #[test]
    fn golden_jsonl_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let paths = export_graph(&[sample_graph()], ExportFormat::Jsonl, dir.path()).unwrap();
        let nodes = std::fs::read_to_string(&paths[0]).unwrap();
        let first = nodes.lines().next().unwrap();
        assert_eq!(
            first,
            r#"{"id":"doc1/n0","type":"MV","attributes":{"name":"sedan AB-1234"},"aliases":["sedan AB-1234"]}"#
        );
        let edges = std::fs::read_to_string(&paths[1]).unwrap();
        assert_eq!(
            edges.lines().next().unwrap(),
            r#"{"source":"doc1/n1","target":"doc1/n0","relation":"Driving","sentence":0,"segment":null,"confidence":0.97}"#
        );
    }
}
