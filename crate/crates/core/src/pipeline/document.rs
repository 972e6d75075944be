//! Case documents, segments, and structured case information.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ingested source document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CaseDocument {
    pub id: String,
    pub text: String,
}

impl CaseDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<CaseDocument> {
        let text = text.into();
        if text.is_empty() {
            return Err(Error::invalid("document text is empty"));
        }
        Ok(CaseDocument { id: id.into(), text })
    }
}

/// Closed set of segment types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentType {
    Title,
    CaseNumber,
    Court,
    PartyInfo,
    Facts,
    Other,
}

impl SegmentType {
    pub fn name(&self) -> &'static str {
        match self {
            SegmentType::Title => "title",
            SegmentType::CaseNumber => "case_number",
            SegmentType::Court => "court",
            SegmentType::PartyInfo => "party_info",
            SegmentType::Facts => "facts",
            SegmentType::Other => "other",
        }
    }

    pub fn parse(name: &str) -> Result<SegmentType> {
        Ok(match name {
            "title" => SegmentType::Title,
            "case_number" => SegmentType::CaseNumber,
            "court" => SegmentType::Court,
            "party_info" => SegmentType::PartyInfo,
            "facts" => SegmentType::Facts,
            "other" => SegmentType::Other,
            other => return Err(Error::Schema(format!("unknown segment type '{other}'"))),
        })
    }
}

/// A typed character span of the document; `end` exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub segment_type: SegmentType,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn text<'a>(&self, doc_text: &'a str) -> &'a str {
        &doc_text[self.start..self.end]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartyRole {
    Plaintiff,
    Defendant,
    Other,
}

impl PartyRole {
    pub fn name(&self) -> &'static str {
        match self {
            PartyRole::Plaintiff => "plaintiff",
            PartyRole::Defendant => "defendant",
            PartyRole::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Party {
    pub role: PartyRole,
    pub name: String,
    pub alias: Option<String>,
    pub agent: Option<String>,
}

/// Structured case attributes plus the civil subjects.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseInfo {
    pub title: Option<String>,
    pub case_number: Option<String>,
    pub court: Option<String>,
    pub parties: Vec<Party>,
    /// Mandatory fields that could not be extracted.
    pub missing_fields: Vec<String>,
}

impl CaseInfo {
    pub fn parties_with_role(&self, role: PartyRole) -> Vec<&Party> {
        self.parties.iter().filter(|p| p.role == role).collect()
    }
}
