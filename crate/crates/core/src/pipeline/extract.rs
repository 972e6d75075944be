//! Rule-based extraction of structured case information.

use crate::error::Result;
use crate::pipeline::document::{CaseInfo, Party, PartyRole, Segment, SegmentType};
use crate::pipeline::rules::CompiledRules;

/// Capture case attributes and parties from the labeled segments.
///
/// Missing mandatory pieces produce a partial [`CaseInfo`] with an explicit
/// missing-field list rather than an error.
pub fn extract_structured(doc_text: &str, segments: &[Segment], rules: &CompiledRules) -> Result<CaseInfo> {
    let mut info = CaseInfo::default();

    let mut field_rules = rules.field_rules.clone();
    field_rules.sort_by(|a, b| b.4.cmp(&a.4));
    for (field, segment_type, regex, group, _) in &field_rules {
        let value = segments
            .iter()
            .filter(|s| s.segment_type == *segment_type)
            .find_map(|s| {
                regex
                    .captures(s.text(doc_text).trim_end_matches('\n'))
                    .and_then(|c| c.get(*group))
                    .map(|m| m.as_str().to_string())
            });
        if value.is_none() {
            continue;
        }
        match field.as_str() {
            "title" if info.title.is_none() => info.title = value,
            "case_number" if info.case_number.is_none() => info.case_number = value,
            "court" if info.court.is_none() => info.court = value,
            _ => {}
        }
    }

    for seg in segments.iter().filter(|s| s.segment_type == SegmentType::PartyInfo) {
        for line in seg.text(doc_text).lines() {
            let Some(caps) = rules.party.captures(line) else {
                continue;
            };
            let role = match &caps[1] {
                "Plaintiff" => PartyRole::Plaintiff,
                "Defendant" => PartyRole::Defendant,
                _ => PartyRole::Other,
            };
            info.parties.push(Party {
                role,
                name: caps[2].trim().to_string(),
                alias: caps.get(3).map(|m| m.as_str().to_string()),
                agent: caps.get(4).map(|m| m.as_str().to_string()),
            });
        }
    }

    for (name, present) in [
        ("title", info.title.is_some()),
        ("case_number", info.case_number.is_some()),
        ("court", info.court.is_some()),
        ("parties", !info.parties.is_empty()),
    ] {
        if !present {
            info.missing_fields.push(name.to_string());
        }
    }
    Ok(info)
}
