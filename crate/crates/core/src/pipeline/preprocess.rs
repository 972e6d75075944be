//! Facts preprocessing: referent completion and clause splitting.

use crate::pipeline::document::{CaseInfo, PartyRole};
use crate::pipeline::rules::CompiledRules;

/// One preprocessed clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactSentence {
    pub tokens: Vec<String>,
    /// A role phrase stayed unresolved because several parties hold the
    /// role.
    pub ambiguous_role: bool,
}

/// Split the facts text into sentences and substitute role phrases with
/// the party name whenever exactly one party holds the role; with several
/// holders the phrase stays and the sentence is flagged.
pub fn preprocess_facts(facts_text: &str, info: &CaseInfo, rules: &CompiledRules) -> Vec<FactSentence> {
    // Drop the facts header line when present.
    let body: String = facts_text
        .lines()
        .filter(|line| !rules.facts_header.is_match(line))
        .collect::<Vec<_>>()
        .join("\n");

    let mut out = Vec::new();
    let tokens: Vec<&str> = body.split_whitespace().collect();
    let mut current: Vec<&str> = Vec::new();
    for tok in tokens {
        current.push(tok);
        if rules.raw.sentence_terminators.iter().any(|t| t == tok) {
            out.push(resolve_sentence(&current.join(" "), info, rules));
            current.clear();
        }
    }
    if !current.is_empty() {
        out.push(resolve_sentence(&current.join(" "), info, rules));
    }
    out
}

fn resolve_sentence(sentence: &str, info: &CaseInfo, rules: &CompiledRules) -> FactSentence {
    let mut text = sentence.to_string();
    let mut ambiguous = false;
    for (regex, role) in [
        (&rules.plaintiff, PartyRole::Plaintiff),
        (&rules.defendant, PartyRole::Defendant),
    ] {
        if !regex.is_match(&text) {
            continue;
        }
        let holders = info.parties_with_role(role);
        if holders.len() == 1 {
            text = regex.replace_all(&text, holders[0].name.as_str()).into_owned();
        } else {
            ambiguous = true;
        }
    }
    FactSentence {
        tokens: text.split_whitespace().map(str::to_string).collect(),
        ambiguous_role: ambiguous,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::document::Party;
    use crate::pipeline::rules::example_rules;

    fn info(plaintiffs: &[&str], defendants: &[&str]) -> CaseInfo {
        let mut parties = Vec::new();
        for p in plaintiffs {
            parties.push(Party {
                role: PartyRole::Plaintiff,
                name: p.to_string(),
                alias: None,
                agent: None,
            });
        }
        for d in defendants {
            parties.push(Party {
                role: PartyRole::Defendant,
                name: d.to_string(),
                alias: None,
                agent: None,
            });
        }
        CaseInfo { parties, ..Default::default() }
    }

    #[test]
    fn sole_plaintiff_substituted() {
        let rules = example_rules().compile().unwrap();
        let s = preprocess_facts(
            "The plaintiff drove north .",
            &info(&["A. Smith"], &[]),
            &rules,
        );
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].tokens, vec!["A.", "Smith", "drove", "north", "."]);
        assert!(!s[0].ambiguous_role);
    }

    #[test]
    fn no_role_words_only_splitting() {
        let rules = example_rules().compile().unwrap();
        let s = preprocess_facts(
            "THE COURT FINDS THE FACTS AS FOLLOWS:\nAlice drove . Bob walked .",
            &info(&["X Y"], &[]),
            &rules,
        );
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].tokens, vec!["Alice", "drove", "."]);
        assert_eq!(s[1].tokens, vec!["Bob", "walked", "."]);
    }

    #[test]
    fn two_plaintiffs_left_untouched_and_flagged() {
        let rules = example_rules().compile().unwrap();
        let s = preprocess_facts(
            "The plaintiff drove north .",
            &info(&["A. Smith", "B. Jones"], &[]),
            &rules,
        );
        assert_eq!(s[0].tokens[..2], ["The".to_string(), "plaintiff".to_string()]);
        assert!(s[0].ambiguous_role);
    }

    #[test]
    fn mixed_roles_resolved_independently() {
        let rules = example_rules().compile().unwrap();
        let s = preprocess_facts(
            "The plaintiff saw the defendant .",
            &info(&["Ann Lee"], &["Bob Ray"]),
            &rules,
        );
        assert_eq!(
            s[0].tokens,
            vec!["Ann", "Lee", "saw", "Bob", "Ray", "."]
        );
    }

    #[test]
    fn trailing_clause_without_terminator_kept() {
        let rules = example_rules().compile().unwrap();
        let s = preprocess_facts("First . trailing words", &info(&[], &[]), &rules);
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].tokens, vec!["trailing", "words"]);
    }
}
