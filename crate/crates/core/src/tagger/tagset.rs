//! BIO label space and transition legality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Score pinned on transitions the BIO scheme forbids. Large enough that no
/// finite emission total can die it out, and excluded from gradient updates.
pub const MASKED_SCORE: f64 = -10_000.0;

/// Entity types plus the derived dense BIO label space.
///
/// Label indices: `O` = 0, then `B-x` = `1 + 2k` and `I-x` = `2 + 2k` for
/// the `k`-th entity type. Virtual `START`/`STOP` states live at `L` and
/// `L + 1` in the transition matrix only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSet {
    entity_types: Vec<String>,
}

impl TagSet {
    pub fn new(entity_types: Vec<String>) -> Result<Self> {
        if entity_types.is_empty() {
            return Err(Error::invalid("tag set needs at least one entity type"));
        }
        let mut seen = entity_types.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != entity_types.len() {
            return Err(Error::invalid("duplicate entity types in tag set"));
        }
        Ok(TagSet { entity_types })
    }

    pub fn entity_types(&self) -> &[String] {
        &self.entity_types
    }

    /// Number of emission labels `L` (no START/STOP).
    pub fn label_count(&self) -> usize {
        1 + 2 * self.entity_types.len()
    }

    /// States in the transition matrix: `L + 2`.
    pub fn state_count(&self) -> usize {
        self.label_count() + 2
    }

    pub fn outside(&self) -> usize {
        0
    }

    pub fn start(&self) -> usize {
        self.label_count()
    }

    pub fn stop(&self) -> usize {
        self.label_count() + 1
    }

    pub fn begin_label(&self, type_idx: usize) -> usize {
        1 + 2 * type_idx
    }

    pub fn inside_label(&self, type_idx: usize) -> usize {
        2 + 2 * type_idx
    }

    /// `Some(type_idx)` when `label` is a `B-` label.
    pub fn begin_type(&self, label: usize) -> Option<usize> {
        (label > 0 && label < self.label_count() && label % 2 == 1).then(|| (label - 1) / 2)
    }

    /// `Some(type_idx)` when `label` is an `I-` label.
    pub fn inside_type(&self, label: usize) -> Option<usize> {
        (label > 0 && label < self.label_count() && label % 2 == 0).then(|| (label - 2) / 2)
    }

    pub fn label_name(&self, label: usize) -> String {
        if label == 0 {
            "O".to_string()
        } else if let Some(t) = self.begin_type(label) {
            format!("B-{}", self.entity_types[t])
        } else if let Some(t) = self.inside_type(label) {
            format!("I-{}", self.entity_types[t])
        } else if label == self.start() {
            "<START>".to_string()
        } else if label == self.stop() {
            "<STOP>".to_string()
        } else {
            format!("<invalid:{label}>")
        }
    }

    pub fn parse_label(&self, name: &str) -> Result<usize> {
        if name == "O" {
            return Ok(0);
        }
        let (prefix, ty) = name
            .split_once('-')
            .ok_or_else(|| Error::Schema(format!("malformed label '{name}'")))?;
        let t = self
            .entity_types
            .iter()
            .position(|e| e == ty)
            .ok_or_else(|| Error::Schema(format!("unknown entity type in label '{name}'")))?;
        match prefix {
            "B" => Ok(self.begin_label(t)),
            "I" => Ok(self.inside_label(t)),
            _ => Err(Error::Schema(format!("malformed label '{name}'"))),
        }
    }
}

/// Boolean legality matrix over `(L+2)^2` including START/STOP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMask {
    states: usize,
    allowed: Vec<bool>,
}

impl TransitionMask {
    #[inline]
    pub fn allowed(&self, from: usize, to: usize) -> bool {
        self.allowed[from * self.states + to]
    }

    pub fn states(&self) -> usize {
        self.states
    }
}

/// Encode BIO legality: `I-x` only after `B-x`/`I-x`, START never enters an
/// `I-` label, STOP reachable from any non-START label.
pub fn build_transition_mask(tagset: &TagSet) -> TransitionMask {
    let states = tagset.state_count();
    let start = tagset.start();
    let stop = tagset.stop();
    let mut allowed = vec![false; states * states];
    for from in 0..states {
        if from == stop {
            continue; // nothing leaves STOP
        }
        for to in 0..states {
            if to == start {
                continue; // nothing enters START
            }
            let ok = if to == stop {
                from != start
            } else if let Some(t) = tagset.inside_type(to) {
                // I-x only after B-x or I-x of the same type.
                from != start
                    && (tagset.begin_type(from) == Some(t) || tagset.inside_type(from) == Some(t))
            } else {
                // O and B-x reachable from START and any emission label.
                true
            };
            allowed[from * states + to] = ok;
        }
    }
    TransitionMask { states, allowed }
}
