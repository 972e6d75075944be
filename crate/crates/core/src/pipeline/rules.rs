//! Declarative extraction rules: segment patterns, field captures, alias
//! expressions, and token-level conventions, loaded from JSON.

use std::collections::BTreeSet;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::document::SegmentType;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentRule {
    pub segment: SegmentType,
    pub pattern: String,
    pub priority: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldRule {
    /// Target CaseInfo field: `title`, `case_number`, or `court`.
    pub field: String,
    /// Segment type the rule applies to.
    pub segment: SegmentType,
    pub pattern: String,
    pub group: usize,
    pub priority: u32,
}

/// Extracts `(full form, alias)` pairs from raw document text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AliasRule {
    /// Capture group 1 = full form, group 2 = alias.
    pub pattern: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleSet {
    pub segment_rules: Vec<SegmentRule>,
    pub field_rules: Vec<FieldRule>,
    /// Applied per party_info segment: group 1 role word, group 2 name,
    /// group 3 optional alias, group 4 optional agent.
    pub party_pattern: String,
    pub alias_rules: Vec<AliasRule>,
    /// Token pattern identifying a license-plate-like identifier.
    pub plate_pattern: String,
    /// Role phrases resolved during referent completion, keyed by role.
    pub plaintiff_pattern: String,
    pub defendant_pattern: String,
    /// Line dropped from the top of the facts segment before clause
    /// splitting.
    pub facts_header_pattern: String,
    /// Surfaces matching this are companies rather than persons.
    pub company_pattern: String,
    /// Tokens that terminate a sentence.
    pub sentence_terminators: Vec<String>,
}

/// Rule set with every regular expression compiled.
pub struct CompiledRules {
    pub raw: RuleSet,
    pub segment_rules: Vec<(SegmentType, Regex, u32)>,
    pub field_rules: Vec<(String, SegmentType, Regex, usize, u32)>,
    pub party: Regex,
    pub aliases: Vec<Regex>,
    pub plate: Regex,
    pub plaintiff: Regex,
    pub defendant: Regex,
    pub facts_header: Regex,
    pub company: Regex,
}

impl RuleSet {
    pub fn load(path: &Path) -> Result<RuleSet> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn compile(&self) -> Result<CompiledRules> {
        if self.segment_rules.is_empty() {
            return Err(Error::invalid("rule set has no segment rules"));
        }
        let mut seg_priorities = BTreeSet::new();
        for r in &self.segment_rules {
            if !seg_priorities.insert(r.priority) {
                return Err(Error::invalid(format!(
                    "duplicate segment-rule priority {}",
                    r.priority
                )));
            }
        }
        let mut field_priorities = BTreeSet::new();
        for r in &self.field_rules {
            if !field_priorities.insert((r.field.clone(), r.priority)) {
                return Err(Error::invalid(format!(
                    "duplicate priority {} for field '{}'",
                    r.priority, r.field
                )));
            }
        }
        let rx = |p: &str| -> Result<Regex> {
            Regex::new(p).map_err(|e| Error::Format(format!("bad pattern '{p}': {e}")))
        };
        Ok(CompiledRules {
            raw: self.clone(),
            segment_rules: self
                .segment_rules
                .iter()
                .map(|r| Ok((r.segment, rx(&r.pattern)?, r.priority)))
                .collect::<Result<_>>()?,
            field_rules: self
                .field_rules
                .iter()
                .map(|r| Ok((r.field.clone(), r.segment, rx(&r.pattern)?, r.group, r.priority)))
                .collect::<Result<_>>()?,
            party: rx(&self.party_pattern)?,
            aliases: self.alias_rules.iter().map(|a| rx(&a.pattern)).collect::<Result<_>>()?,
            plate: rx(&self.plate_pattern)?,
            plaintiff: rx(&self.plaintiff_pattern)?,
            defendant: rx(&self.defendant_pattern)?,
            facts_header: rx(&self.facts_header_pattern)?,
            company: rx(&self.company_pattern)?,
        })
    }
}

/// The rule set shipped for the synthetic judgment layout.
pub fn example_rules() -> RuleSet {
    RuleSet {
        segment_rules: vec![
            SegmentRule {
                segment: SegmentType::Title,
                pattern: r"(?m)^CIVIL JUDGMENT$".into(),
                priority: 100,
            },
            SegmentRule {
                segment: SegmentType::CaseNumber,
                pattern: r"(?m)^Case No\. \S+$".into(),
                priority: 90,
            },
            SegmentRule {
                segment: SegmentType::Court,
                pattern: r"(?m)^[A-Za-z]+ People's Court$".into(),
                priority: 80,
            },
            SegmentRule {
                segment: SegmentType::PartyInfo,
                pattern: r"(?m)^(?:Plaintiff|Defendant): .*$".into(),
                priority: 70,
            },
            SegmentRule {
                segment: SegmentType::Facts,
                pattern: r"(?ms)^THE COURT FINDS THE FACTS AS FOLLOWS:\n.*\z".into(),
                priority: 60,
            },
        ],
        field_rules: vec![
            FieldRule {
                field: "title".into(),
                segment: SegmentType::Title,
                pattern: r"(.+)".into(),
                group: 1,
                priority: 10,
            },
            FieldRule {
                field: "case_number".into(),
                segment: SegmentType::CaseNumber,
                pattern: r"Case No\. (\S+)".into(),
                group: 1,
                priority: 10,
            },
            FieldRule {
                field: "court".into(),
                segment: SegmentType::Court,
                pattern: r"([A-Za-z]+ People's Court)".into(),
                group: 1,
                priority: 10,
            },
        ],
        party_pattern:
            r#"^(Plaintiff|Defendant): (.+?)(?: \(hereinafter "([^"]+)"\))?(?:, agent: (.+))?$"#.into(),
        alias_rules: vec![AliasRule {
            pattern: r#"([A-Za-z][A-Za-z .]*?) \(hereinafter "([^"]+)"\)"#.into(),
        }],
        plate_pattern: r"^[A-Z]{2}-[0-9]{4}$".into(),
        plaintiff_pattern: r"(?i)\bthe plaintiff\b".into(),
        defendant_pattern: r"(?i)\bthe defendant\b".into(),
        facts_header_pattern: r"^THE COURT FINDS THE FACTS AS FOLLOWS:$".into(),
        company_pattern: r"\b(?:Co\.|Ltd\.|Inc\.)".into(),
        sentence_terminators: vec![".".into(), "!".into(), "?".into()],
    }
}
