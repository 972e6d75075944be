//! Knowledge fusion: entity alignment by alias expressions, shared plate
//! identifiers, and exact surfaces, producing the case graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pipeline::document::{CaseInfo, PartyRole, SegmentType};
use crate::pipeline::graph::{CaseGraph, Edge, Node, Provenance};
use crate::pipeline::rules::CompiledRules;

/// A relation instance between two surface mentions, resolved to text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactTriple {
    pub head_surface: String,
    pub head_type: String,
    pub relation: String,
    pub tail_surface: String,
    pub tail_type: String,
    /// Index of the originating preprocessed sentence.
    pub sentence: usize,
    pub confidence: f64,
}

/// Union-find with path compression.
struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Deterministic: smaller root wins.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Mention record entering fusion: a typed surface.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SurfaceRecord {
    pub surface: String,
    pub entity_type: String,
}

fn plate_token(surface: &str, rules: &CompiledRules) -> Option<String> {
    surface
        .split_whitespace()
        .find(|tok| rules.plate.is_match(tok))
        .map(str::to_string)
}

/// Group typed surfaces into alias-equivalence classes. Merges happen when
/// (a) an alias rule links two surfaces, (b) two surfaces share a plate
/// token, or (c) surfaces are identical (same record). Cross-type links
/// are refused and reported as warnings.
pub fn alias_groups(
    records: &[SurfaceRecord],
    alias_pairs: &[(String, String)],
    rules: &CompiledRules,
    warnings: &mut Vec<String>,
) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(records.len());

    let by_surface = |surface: &str| -> Vec<usize> {
        records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.surface == surface)
            .map(|(i, _)| i)
            .collect()
    };

    for (full, alias) in alias_pairs {
        for &i in &by_surface(full) {
            for &j in &by_surface(alias) {
                if records[i].entity_type == records[j].entity_type {
                    uf.union(i, j);
                } else {
                    warnings.push(format!(
                        "alias '{alias}' links '{full}' across types {} vs {}; kept separate",
                        records[i].entity_type, records[j].entity_type
                    ));
                }
            }
        }
    }

    let mut by_plate: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if let Some(p) = plate_token(&r.surface, rules) {
            by_plate.entry(p).or_default().push(i);
        }
    }
    for (plate, members) in by_plate {
        for w in members.windows(2) {
            if records[w[0]].entity_type == records[w[1]].entity_type {
                uf.union(w[0], w[1]);
            } else {
                warnings.push(format!(
                    "plate '{plate}' shared across types {} vs {}; kept separate",
                    records[w[0]].entity_type, records[w[1]].entity_type
                ));
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..records.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Fuse structured case information and extracted fact triples into one
/// case graph with provenance on every edge.
pub fn fuse_knowledge(
    doc_id: &str,
    info: &CaseInfo,
    triples: &[FactTriple],
    doc_text: &str,
    rules: &CompiledRules,
) -> Result<CaseGraph> {
    let mut warnings = Vec::new();

    // Dedup typed surfaces; BTreeSet keeps the record order canonical.
    let mut record_set: BTreeSet<SurfaceRecord> = BTreeSet::new();
    for t in triples {
        record_set.insert(SurfaceRecord {
            surface: t.head_surface.clone(),
            entity_type: t.head_type.clone(),
        });
        record_set.insert(SurfaceRecord {
            surface: t.tail_surface.clone(),
            entity_type: t.tail_type.clone(),
        });
    }
    for p in &info.parties {
        let entity_type = if rules.company.is_match(&p.name) { "NNP" } else { "NP" };
        record_set.insert(SurfaceRecord {
            surface: p.name.clone(),
            entity_type: entity_type.to_string(),
        });
    }
    let records: Vec<SurfaceRecord> = record_set.into_iter().collect();

    // Alias pairs come from fixed expressions in the raw text plus the
    // structured party aliases.
    let mut alias_pairs: Vec<(String, String)> = Vec::new();
    for regex in &rules.aliases {
        for caps in regex.captures_iter(doc_text) {
            alias_pairs.push((caps[1].trim().to_string(), caps[2].trim().to_string()));
        }
    }
    for p in &info.parties {
        if let Some(alias) = &p.alias {
            alias_pairs.push((p.name.clone(), alias.clone()));
        }
    }
    alias_pairs.sort();
    alias_pairs.dedup();

    let groups = alias_groups(&records, &alias_pairs, rules, &mut warnings);

    // Node identity: sort groups by (type, primary surface).
    let mut group_infos: Vec<(String, String, BTreeSet<String>, Vec<usize>)> = groups
        .into_iter()
        .map(|members| {
            let entity_type = records[members[0]].entity_type.clone();
            let aliases: BTreeSet<String> =
                members.iter().map(|&i| records[i].surface.clone()).collect();
            // Primary surface: the party name when one is present, else the
            // longest (most specific) alias.
            let party_name = info
                .parties
                .iter()
                .map(|p| &p.name)
                .find(|n| aliases.contains(*n))
                .cloned();
            let primary = party_name.unwrap_or_else(|| {
                aliases
                    .iter()
                    .max_by_key(|s| (s.len(), std::cmp::Reverse(s.to_string())))
                    .cloned()
                    .unwrap_or_default()
            });
            (entity_type, primary, aliases, members)
        })
        .collect();
    group_infos.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut nodes = Vec::new();
    let mut surface_to_id: BTreeMap<(String, String), String> = BTreeMap::new();
    for (idx, (entity_type, primary, aliases, _)) in group_infos.iter().enumerate() {
        let id = format!("n{idx}");
        let mut attributes = BTreeMap::new();
        attributes.insert("name".to_string(), primary.clone());
        if let Some(plate) = aliases.iter().find_map(|s| plate_token(s, rules)) {
            attributes.insert("plate".to_string(), plate);
        }
        for p in &info.parties {
            if aliases.contains(&p.name) {
                if let Some(prev) = attributes.get("role") {
                    if prev != p.role.name() {
                        warnings.push(format!(
                            "node '{primary}' carries conflicting roles {prev} vs {}",
                            p.role.name()
                        ));
                    }
                } else {
                    attributes.insert("role".to_string(), p.role.name().to_string());
                    if let Some(agent) = &p.agent {
                        attributes.insert("agent".to_string(), agent.clone());
                    }
                }
            }
        }
        for s in aliases {
            surface_to_id.insert((entity_type.clone(), s.clone()), id.clone());
        }
        nodes.push(Node {
            id,
            node_type: entity_type.clone(),
            attributes,
            aliases: aliases.clone(),
        });
    }

    // The case node holds the structured attributes.
    let mut case_attrs = BTreeMap::new();
    for (k, v) in [
        ("title", &info.title),
        ("case_number", &info.case_number),
        ("court", &info.court),
    ] {
        if let Some(v) = v {
            case_attrs.insert(k.to_string(), v.clone());
        }
    }
    case_attrs.insert("doc_id".to_string(), doc_id.to_string());
    nodes.push(Node {
        id: "case".to_string(),
        node_type: "Case".to_string(),
        attributes: case_attrs,
        aliases: BTreeSet::new(),
    });

    let mut edges: Vec<Edge> = Vec::new();
    let mut seen: BTreeSet<(String, String, String)> = BTreeSet::new();
    let mut push_edge = |edges: &mut Vec<Edge>, e: Edge| {
        if seen.insert((e.source.clone(), e.relation.clone(), e.target.clone())) {
            edges.push(e);
        }
    };

    for p in &info.parties {
        let entity_type = if rules.company.is_match(&p.name) { "NNP" } else { "NP" };
        let Some(id) = surface_to_id.get(&(entity_type.to_string(), p.name.clone())) else {
            continue;
        };
        let relation = match p.role {
            PartyRole::Plaintiff => "HAS_PLAINTIFF",
            PartyRole::Defendant => "HAS_DEFENDANT",
            PartyRole::Other => "HAS_PARTY",
        };
        push_edge(
            &mut edges,
            Edge {
                source: "case".to_string(),
                target: id.clone(),
                relation: relation.to_string(),
                provenance: Provenance::Structured { segment: SegmentType::PartyInfo },
                confidence: 1.0,
            },
        );
    }

    for t in triples {
        let head = surface_to_id.get(&(t.head_type.clone(), t.head_surface.clone()));
        let tail = surface_to_id.get(&(t.tail_type.clone(), t.tail_surface.clone()));
        let (Some(head), Some(tail)) = (head, tail) else {
            warnings.push(format!(
                "triple ({}, {}, {}) references an unfused mention",
                t.head_surface, t.relation, t.tail_surface
            ));
            continue;
        };
        push_edge(
            &mut edges,
            Edge {
                source: head.clone(),
                target: tail.clone(),
                relation: t.relation.clone(),
                provenance: Provenance::Fact { sentence: t.sentence },
                confidence: t.confidence,
            },
        );
    }

    let graph = CaseGraph {
        doc_id: doc_id.to_string(),
        nodes,
        edges,
        warnings,
    };
    graph.validate()?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::document::Party;
    use crate::pipeline::rules::example_rules;

    fn triple(h: &str, ht: &str, r: &str, t: &str, tt: &str, sent: usize) -> FactTriple {
        FactTriple {
            head_surface: h.into(),
            head_type: ht.into(),
            relation: r.into(),
            tail_surface: t.into(),
            tail_type: tt.into(),
            sentence: sent,
            confidence: 0.9,
        }
    }

    #[test]
    fn hereinafter_alias_merges_mentions() {
        let rules = example_rules().compile().unwrap();
        let text = "Defendant: X Transport Co. (hereinafter \"X Co.\")\nTHE COURT FINDS THE FACTS AS FOLLOWS:\nX Co. owned the truck AB-1234 .\n";
        let info = CaseInfo {
            parties: vec![Party {
                role: PartyRole::Defendant,
                name: "X Transport Co.".into(),
                alias: Some("X Co.".into()),
                agent: None,
            }],
            ..Default::default()
        };
        let triples = vec![triple("X Co.", "NNP", "Owns", "truck AB-1234", "MV", 0)];
        let g = fuse_knowledge("d1", &info, &triples, text, &rules).unwrap();
        let company: Vec<&Node> = g.nodes.iter().filter(|n| n.node_type == "NNP").collect();
        assert_eq!(company.len(), 1, "alias and full name fused into one node");
        assert!(company[0].aliases.contains("X Co."));
        assert!(company[0].aliases.contains("X Transport Co."));
        assert_eq!(company[0].attributes["role"], "defendant");
        // Owns edge present and rooted at the fused node.
        assert!(g.edges.iter().any(|e| e.relation == "Owns" && e.source == company[0].id));
        assert!(g.edges.iter().any(|e| e.relation == "HAS_DEFENDANT"));
    }

    #[test]
    fn shared_plate_merges_vehicles() {
        let rules = example_rules().compile().unwrap();
        let info = CaseInfo::default();
        let triples = vec![
            triple("Ann Bee", "NP", "Driving", "sedan AB-1234", "MV", 0),
            triple("vehicle AB-1234", "MV", "OccurredAt", "Maple Street", "LOC", 1),
        ];
        let g = fuse_knowledge("d", &info, &triples, "", &rules).unwrap();
        let mv: Vec<&Node> = g.nodes.iter().filter(|n| n.node_type == "MV").collect();
        assert_eq!(mv.len(), 1, "plate token merges surface variants");
        assert_eq!(mv[0].attributes["plate"], "AB-1234");
        assert_eq!(g.edges.len(), 2);
    }

    #[test]
    fn same_surface_different_type_not_merged() {
        let rules = example_rules().compile().unwrap();
        let info = CaseInfo::default();
        // Same alias text linking across types triggers a warning.
        let text = "Rex Corp. (hereinafter \"Rex\")";
        let triples = vec![
            triple("Rex Corp.", "NNP", "Owns", "sedan AB-1111", "MV", 0),
            triple("Rex", "NP", "Driving", "sedan AB-1111", "MV", 1),
        ];
        let g = fuse_knowledge("d", &info, &triples, text, &rules).unwrap();
        assert!(g.nodes.iter().any(|n| n.node_type == "NNP"));
        assert!(g.nodes.iter().any(|n| n.node_type == "NP"));
        assert!(!g.warnings.is_empty(), "cross-type alias recorded as warning");
    }

    #[test]
    fn alias_closure_is_transitive() {
        let rules = example_rules().compile().unwrap();
        let mut warnings = Vec::new();
        let records = vec![
            SurfaceRecord { surface: "a".into(), entity_type: "NP".into() },
            SurfaceRecord { surface: "b".into(), entity_type: "NP".into() },
            SurfaceRecord { surface: "c".into(), entity_type: "NP".into() },
        ];
        let pairs = vec![("a".to_string(), "b".to_string()), ("b".to_string(), "c".to_string())];
        let groups = alias_groups(&records, &pairs, &rules, &mut warnings);
        assert_eq!(groups.len(), 1, "a~b and b~c put a, b, c in one node");
        assert_eq!(groups[0].len(), 3);
    }

    #[test]
    fn fusion_is_deterministic_and_idempotent_on_groups() {
        let rules = example_rules().compile().unwrap();
        let info = CaseInfo::default();
        let triples = vec![
            triple("Ann Bee", "NP", "Driving", "sedan AB-1234", "MV", 0),
            triple("sedan AB-1234", "MV", "Accident", "Cal Dee", "NP", 1),
        ];
        let g1 = fuse_knowledge("d", &info, &triples, "", &rules).unwrap();
        let g2 = fuse_knowledge("d", &info, &triples, "", &rules).unwrap();
        assert_eq!(g1, g2);

        // Re-running the closure over already-fused alias sets changes
        // nothing: every node's aliases map back to the same single group.
        let mut warnings = Vec::new();
        for n in g1.nodes.iter().filter(|n| !n.aliases.is_empty()) {
            let records: Vec<SurfaceRecord> = n
                .aliases
                .iter()
                .map(|s| SurfaceRecord { surface: s.clone(), entity_type: n.node_type.clone() })
                .collect();
            let groups = alias_groups(&records, &[], &rules, &mut warnings);
            assert_eq!(groups.len(), 1);
        }
    }

    #[test]
    fn duplicate_triples_become_one_edge() {
        let rules = example_rules().compile().unwrap();
        let info = CaseInfo::default();
        let triples = vec![
            triple("Ann Bee", "NP", "Driving", "sedan AB-1234", "MV", 0),
            triple("Ann Bee", "NP", "Driving", "sedan AB-1234", "MV", 3),
        ];
        let g = fuse_knowledge("d", &info, &triples, "", &rules).unwrap();
        assert_eq!(g.edges.len(), 1, "first provenance kept");
        assert_eq!(g.edges[0].provenance, Provenance::Fact { sentence: 0 });
    }
}
