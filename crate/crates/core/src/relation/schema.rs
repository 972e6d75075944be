//! Relation schema: relation types, admissible entity-type pairs, and the
//! "Other" non-relation class.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tagger::TagSet;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct EntityTypeDef {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RelationDef {
    pub id: u32,
    pub name: String,
    /// Allowed (head type, tail type) pairs; each is one conceptual triple.
    pub pairs: Vec<(String, String)>,
}

/// The full extraction schema. `relations` holds the substantive relations;
/// the catch-all class named by `other_label` carries no pair constraints
/// and is classified at index `relations.len()`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RelationSchema {
    pub entity_types: Vec<EntityTypeDef>,
    pub relations: Vec<RelationDef>,
    pub other_label: String,
}

impl RelationSchema {
    pub fn validate(&self) -> Result<()> {
        if self.entity_types.is_empty() {
            return Err(Error::Schema("schema has no entity types".into()));
        }
        let mut names = BTreeSet::new();
        for e in &self.entity_types {
            if !names.insert(e.name.as_str()) {
                return Err(Error::Schema(format!("duplicate entity type '{}'", e.name)));
            }
        }
        let mut rel_names = BTreeSet::new();
        for r in &self.relations {
            if r.name == self.other_label {
                return Err(Error::Schema(format!(
                    "'{}' is reserved for the catch-all class",
                    r.name
                )));
            }
            if !rel_names.insert(r.name.as_str()) {
                return Err(Error::Schema(format!("duplicate relation '{}'", r.name)));
            }
            for (h, t) in &r.pairs {
                for ty in [h, t] {
                    if !names.contains(ty.as_str()) {
                        return Err(Error::Schema(format!(
                            "relation '{}' references unknown entity type '{ty}'",
                            r.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RelationSchema> {
        let text = std::fs::read_to_string(path)?;
        let schema: RelationSchema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Classifier classes: every substantive relation plus "Other" last.
    pub fn class_count(&self) -> usize {
        self.relations.len() + 1
    }

    pub fn other_index(&self) -> usize {
        self.relations.len()
    }

    pub fn class_name(&self, idx: usize) -> &str {
        if idx == self.other_index() {
            &self.other_label
        } else {
            &self.relations[idx].name
        }
    }

    pub fn class_index(&self, name: &str) -> Result<usize> {
        if name == self.other_label {
            return Ok(self.other_index());
        }
        self.relations
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownId(format!("relation '{name}'")))
    }

    pub fn entity_type_index(&self, name: &str) -> Result<usize> {
        self.entity_types
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| Error::UnknownId(format!("entity type '{name}'")))
    }

    /// Does any relation admit this ordered (head, tail) type pair?
    pub fn pair_admissible(&self, head_type: &str, tail_type: &str) -> bool {
        self.relations
            .iter()
            .any(|r| r.pairs.iter().any(|(h, t)| h == head_type && t == tail_type))
    }

    /// Total number of conceptual triples (allowed pairs over all relations).
    pub fn conceptual_triple_count(&self) -> usize {
        self.relations.iter().map(|r| r.pairs.len()).sum()
    }

    /// Tag set over this schema's entity types, in schema order.
    pub fn tagset(&self) -> Result<TagSet> {
        TagSet::new(self.entity_types.iter().map(|e| e.name.clone()).collect())
    }
}

/// One classification instance: a sentence with two typed entity spans.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct EntitySlot {
    /// Token span, end exclusive.
    pub span: (usize, usize),
    #[serde(rename = "type")]
    pub entity_type: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RelationInstance {
    pub tokens: Vec<String>,
    pub e1: EntitySlot,
    pub e2: EntitySlot,
    /// Gold relation label; absent at inference time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl RelationInstance {
    pub fn validate(&self, schema: &RelationSchema) -> Result<()> {
        let n = self.tokens.len();
        for slot in [&self.e1, &self.e2] {
            if slot.span.0 >= slot.span.1 || slot.span.1 > n {
                return Err(Error::invalid(format!(
                    "span {}..{} out of range for {n} tokens",
                    slot.span.0, slot.span.1
                )));
            }
            schema.entity_type_index(&slot.entity_type)?;
        }
        if self.e1.span == self.e2.span {
            return Err(Error::invalid("entity spans are identical"));
        }
        if let Some(label) = &self.label {
            let idx = schema.class_index(label)?;
            if idx != schema.other_index()
                && !self
                    .relation_pair_allowed(&schema.relations[idx])
            {
                return Err(Error::Schema(format!(
                    "({}, {}) is not an allowed pair for relation '{label}'",
                    self.e1.entity_type, self.e2.entity_type
                )));
            }
        }
        Ok(())
    }

    fn relation_pair_allowed(&self, rel: &RelationDef) -> bool {
        rel.pairs
            .iter()
            .any(|(h, t)| *h == self.e1.entity_type && *t == self.e2.entity_type)
    }
}

pub fn read_re_corpus(path: &Path) -> Result<Vec<RelationInstance>> {
    use std::io::BufRead;
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub fn write_re_corpus(path: &Path, instances: &[RelationInstance]) -> Result<()> {
    use std::io::Write;
    let mut file = std::fs::File::create(path)?;
    for inst in instances {
        serde_json::to_writer(&mut file, inst)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn toy_schema() -> RelationSchema {
        RelationSchema {
            entity_types: vec![
                EntityTypeDef { id: 1, name: "NP".into() },
                EntityTypeDef { id: 2, name: "MV".into() },
                EntityTypeDef { id: 3, name: "LOC".into() },
            ],
            relations: vec![
                RelationDef {
                    id: 1,
                    name: "Driving".into(),
                    pairs: vec![("NP".into(), "MV".into())],
                },
                RelationDef {
                    id: 2,
                    name: "OccurredAt".into(),
                    pairs: vec![("MV".into(), "LOC".into())],
                },
            ],
            other_label: "Other".into(),
        }
    }

    #[test]
    fn class_layout() {
        let s = toy_schema();
        s.validate().unwrap();
        assert_eq!(s.class_count(), 3);
        assert_eq!(s.other_index(), 2);
        assert_eq!(s.class_index("Driving").unwrap(), 0);
        assert_eq!(s.class_index("Other").unwrap(), 2);
        assert!(s.class_index("Nonsense").is_err());
        assert_eq!(s.conceptual_triple_count(), 2);
        assert!(s.pair_admissible("NP", "MV"));
        assert!(!s.pair_admissible("MV", "NP"));
    }

    #[test]
    fn instance_validation() {
        let s = toy_schema();
        let tokens: Vec<String> = ["a", "b", "c"].iter().map(|t| t.to_string()).collect();
        let good = RelationInstance {
            tokens: tokens.clone(),
            e1: EntitySlot { span: (0, 1), entity_type: "NP".into() },
            e2: EntitySlot { span: (2, 3), entity_type: "MV".into() },
            label: Some("Driving".into()),
        };
        good.validate(&s).unwrap();

        let bad_pair = RelationInstance {
            label: Some("OccurredAt".into()),
            ..good.clone()
        };
        assert!(bad_pair.validate(&s).is_err());

        let bad_span = RelationInstance {
            e2: EntitySlot { span: (2, 9), entity_type: "MV".into() },
            ..good.clone()
        };
        assert!(bad_span.validate(&s).is_err());

        let same_span = RelationInstance {
            e2: EntitySlot { span: (0, 1), entity_type: "MV".into() },
            ..good
        };
        assert!(same_span.validate(&s).is_err());
    }

    #[test]
    fn jsonl_roundtrip_uses_spec_field_names() {
        let inst = RelationInstance {
            tokens: vec!["x".into(), "y".into()],
            e1: EntitySlot { span: (0, 1), entity_type: "NP".into() },
            e2: EntitySlot { span: (1, 2), entity_type: "MV".into() },
            label: Some("Driving".into()),
        };
        let json = serde_json::to_string(&inst).unwrap();
        assert!(json.contains("\"span\":[0,1]"), "{json}");
        assert!(json.contains("\"type\":\"NP\""), "{json}");
        let back: RelationInstance = serde_json::from_str(&json).unwrap();
        assert_eq!(back, inst);
    }
}
