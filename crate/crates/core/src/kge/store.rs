//! Indexed triple store with train/valid/test partitions.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

/// Entities and relations interned to dense indices, plus the partitioned
/// triples `(head, relation, tail)`.
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_idx: HashMap<String, usize>,
    relation_idx: HashMap<String, usize>,
    pub train: Vec<[usize; 3]>,
    pub valid: Vec<[usize; 3]>,
    pub test: Vec<[usize; 3]>,
}

impl TripleStore {
    pub fn from_triples(
        train: &[(String, String, String)],
        valid: &[(String, String, String)],
        test: &[(String, String, String)],
    ) -> Result<TripleStore> {
        let mut store = TripleStore::default();
        for (name, src) in [("train", train), ("valid", valid), ("test", test)] {
            let mut seen = HashSet::new();
            let mut part = Vec::with_capacity(src.len());
            for (h, r, t) in src {
                let triple = [store.intern_entity(h), store.intern_relation(r), store.intern_entity(t)];
                if !seen.insert(triple) {
                    return Err(Error::invalid(format!(
                        "duplicate triple ({h}, {r}, {t}) in {name} partition"
                    )));
                }
                part.push(triple);
            }
            match name {
                "train" => store.train = part,
                "valid" => store.valid = part,
                _ => store.test = part,
            }
        }
        Ok(store)
    }

    /// Read `train.txt` / `valid.txt` / `test.txt` (tab-separated
    /// `head relation tail`) from a directory; valid and test may be absent.
    pub fn load_dir(dir: &Path) -> Result<TripleStore> {
        let read = |name: &str, required: bool| -> Result<Vec<(String, String, String)>> {
            let path = dir.join(name);
            if !path.exists() {
                if required {
                    return Err(Error::invalid(format!("missing triple file {}", path.display())));
                }
                return Ok(Vec::new());
            }
            parse_triple_file(&std::fs::read_to_string(&path)?)
        };
        TripleStore::from_triples(&read("train.txt", true)?, &read("valid.txt", false)?, &read("test.txt", false)?)
    }

    fn intern_entity(&mut self, name: &str) -> usize {
        if let Some(&i) = self.entity_idx.get(name) {
            return i;
        }
        self.entities.push(name.to_string());
        self.entity_idx.insert(name.to_string(), self.entities.len() - 1);
        self.entities.len() - 1
    }

    fn intern_relation(&mut self, name: &str) -> usize {
        if let Some(&i) = self.relation_idx.get(name) {
            return i;
        }
        self.relations.push(name.to_string());
        self.relation_idx.insert(name.to_string(), self.relations.len() - 1);
        self.relations.len() - 1
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_name(&self, idx: usize) -> &str {
        &self.entities[idx]
    }

    pub fn relation_name(&self, idx: usize) -> &str {
        &self.relations[idx]
    }

    pub fn entity_index(&self, name: &str) -> Result<usize> {
        self.entity_idx
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownId(format!("entity '{name}'")))
    }

    pub fn relation_index(&self, name: &str) -> Result<usize> {
        self.relation_idx
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownId(format!("relation '{name}'")))
    }

    /// All triples across partitions, for filtered ranking.
    pub fn known_triples(&self) -> HashSet<[usize; 3]> {
        self.train
            .iter()
            .chain(self.valid.iter())
            .chain(self.test.iter())
            .copied()
            .collect()
    }
}

pub fn parse_triple_file(text: &str) -> Result<Vec<(String, String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (h, r, t) = (parts.next(), parts.next(), parts.next());
        match (h, r, t, parts.next()) {
            (Some(h), Some(r), Some(t), None) => out.push((h.to_string(), r.to_string(), t.to_string())),
            _ => {
                return Err(Error::Format(format!(
                    "line {}: expected 'head<TAB>relation<TAB>tail'",
                    lineno + 1
                )))
            }
        }
    }
    Ok(out)
}

pub fn write_triple_file(path: &Path, triples: &[(String, String, String)]) -> Result<()> {
    use std::io::Write;
    let mut f = std::fs::File::create(path)?;
    for (h, r, t) in triples {
        writeln!(f, "{h}\t{r}\t{t}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(h: &str, r: &str, t_: &str) -> (String, String, String) {
        (h.into(), r.into(), t_.into())
    }

    #[test]
    fn interning_and_lookup() {
        let store =
            TripleStore::from_triples(&[t("a", "r1", "b"), t("b", "r1", "c")], &[t("a", "r1", "c")], &[]).unwrap();
        assert_eq!(store.entity_count(), 3);
        assert_eq!(store.relation_count(), 1);
        assert_eq!(store.entity_index("b").unwrap(), 1);
        assert!(store.entity_index("zzz").is_err());
        assert_eq!(store.train.len(), 2);
        assert_eq!(store.known_triples().len(), 3);
    }

    #[test]
    fn duplicate_triples_rejected() {
        let err = TripleStore::from_triples(&[t("a", "r", "b"), t("a", "r", "b")], &[], &[]).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn parse_rejects_malformed_lines() {
        assert!(parse_triple_file("a\tb\tc\n").is_ok());
        assert!(parse_triple_file("a b c\n").is_err());
        assert!(parse_triple_file("a\tb\tc\td\n").is_err());
    }
}
