//! Synthetic judgment corpus generator.
//!
//! Emits documents with the structured layout the example rules expect,
//! facts sentences instantiating schema-admissible triples from
//! type-specific lexicons, and the full gold chain (segments, case info,
//! preprocessed sentences, BIO labels, triples, fused graphs). Everything
//! is deterministic under the seed.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pipeline::document::{CaseDocument, CaseInfo, Party, PartyRole, Segment, SegmentType};
use crate::pipeline::extract::extract_structured;
use crate::pipeline::fuse::{fuse_knowledge, FactTriple};
use crate::pipeline::graph::CaseGraph;
use crate::pipeline::preprocess::preprocess_facts;
use crate::pipeline::rules::{example_rules, CompiledRules, RuleSet};
use crate::pipeline::segment::segment_document;
use crate::relation::{
    generate_candidates, CandidateMode, EntityTypeDef, GoldTriple, RelationDef, RelationInstance,
    RelationSchema,
};
use crate::tagger::{encode_mentions, EntityMention, LabeledSentence, TagSet};

/// The example schema: 20 entity types (violations numbered 12-20) and 9
/// relations whose allowed pairs total 30 conceptual triples.
pub fn example_schema() -> RelationSchema {
    let e = |id: u32, name: &str| EntityTypeDef { id, name: name.into() };
    let violations = [
        "Speeding",
        "DrunkDriving",
        "RedLightRunning",
        "UnlicensedDriving",
        "WrongWayDriving",
        "IllegalParking",
        "Overloading",
        "DistractedDriving",
        "FailureToYield",
    ];
    let mut entity_types = vec![
        e(1, "NP"),
        e(2, "NNP"),
        e(3, "MV"),
        e(4, "NMV"),
        e(5, "DEATH"),
        e(6, "INJ"),
        e(7, "PROP"),
        e(8, "LOC"),
        e(9, "TIME"),
        e(10, "INS"),
        e(11, "MED"),
    ];
    for (i, v) in violations.iter().enumerate() {
        entity_types.push(e(12 + i as u32, v));
    }
    let pairs = |list: &[(&str, &str)]| -> Vec<(String, String)> {
        list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    };
    let relations = vec![
        RelationDef { id: 1, name: "Driving".into(), pairs: pairs(&[("NP", "MV"), ("NP", "NMV")]) },
        RelationDef { id: 2, name: "Ride".into(), pairs: pairs(&[("NP", "MV"), ("NP", "NMV")]) },
        RelationDef {
            id: 3,
            name: "Accident".into(),
            pairs: pairs(&[("MV", "MV"), ("MV", "NMV"), ("MV", "NP"), ("NMV", "NMV"), ("NMV", "NP")]),
        },
        RelationDef {
            id: 4,
            name: "Caused".into(),
            pairs: pairs(&[
                ("MV", "DEATH"),
                ("MV", "INJ"),
                ("MV", "PROP"),
                ("NMV", "DEATH"),
                ("NMV", "INJ"),
                ("NMV", "PROP"),
            ]),
        },
        RelationDef { id: 5, name: "OccurredAt".into(), pairs: pairs(&[("MV", "LOC"), ("NMV", "LOC")]) },
        RelationDef { id: 6, name: "OccurredOn".into(), pairs: pairs(&[("MV", "TIME"), ("NMV", "TIME")]) },
        RelationDef {
            id: 7,
            name: "Violated".into(),
            pairs: violations.iter().map(|v| ("NP".to_string(), v.to_string())).collect(),
        },
        RelationDef { id: 8, name: "InsuredBy".into(), pairs: pairs(&[("MV", "INS")]) },
        RelationDef { id: 9, name: "Owns".into(), pairs: pairs(&[("NNP", "MV")]) },
    ];
    RelationSchema {
        entity_types,
        relations,
        other_label: "Other".into(),
    }
}

const FIRST_NAMES: [&str; 12] = [
    "Alice", "Brian", "Carla", "David", "Elena", "Frank", "Grace", "Henry", "Irene", "Jack",
    "Karen", "Louis",
];
const LAST_NAMES: [&str; 12] = [
    "Johnson", "Smith", "Chen", "Davis", "Miller", "Wang", "Brown", "Taylor", "Kim", "Lopez",
    "Evans", "Ortiz",
];
const COMPANY_CORES: [&str; 8] = [
    "Acme", "Borealis", "Cascade", "Delta", "Evergreen", "Fulton", "Galaxy", "Harbor",
];
const COMPANY_SUFFIXES: [&str; 3] = ["Transport Co.", "Logistics Ltd.", "Freight Inc."];
const CITIES: [&str; 6] = ["Riverside", "Lakewood", "Fairview", "Greenville", "Springfield", "Brookside"];
const MV_NOUNS: [&str; 7] = ["sedan", "truck", "taxi", "bus", "van", "SUV", "motorcycle"];
const COLORS: [&str; 6] = ["black", "white", "red", "blue", "silver", "gray"];
const NMV_SURFACES: [&[&str]; 5] = [
    &["bicycle"],
    &["tricycle"],
    &["electric", "scooter"],
    &["electric", "bicycle"],
    &["pedal", "cart"],
];
const DEATH_SURFACES: [&[&str]; 1] = [&["death"]];
const INJ_SURFACES: [&[&str]; 5] = [
    &["fractured", "arm"],
    &["broken", "leg"],
    &["head", "injury"],
    &["rib", "fracture"],
    &["whiplash"],
];
const PROP_SURFACES: [&[&str]; 6] = [
    &["guardrail"],
    &["fence"],
    &["storefront"],
    &["lamppost"],
    &["mailbox"],
    &["cargo", "crate"],
];
const LOC_SURFACES: [&[&str]; 6] = [
    &["Maple", "Street"],
    &["Oak", "Avenue"],
    &["Highway", "21"],
    &["Mill", "Road"],
    &["Lakeview", "Boulevard"],
    &["Cedar", "Lane"],
];
const INS_SURFACES: [&[&str]; 3] = [
    &["Pacific", "Insurance", "Company"],
    &["Union", "Mutual", "Insurance"],
    &["Northern", "Shield", "Insurance"],
];
const MED_SURFACES: [&[&str]; 2] = [&["medical", "expenses"], &["hospital", "fees"]];
const VIOLATION_SURFACES: [(&str, &[&str]); 9] = [
    ("Speeding", &["speeding"]),
    ("DrunkDriving", &["drunk", "driving"]),
    ("RedLightRunning", &["red-light", "running"]),
    ("UnlicensedDriving", &["unlicensed", "driving"]),
    ("WrongWayDriving", &["wrong-way", "driving"]),
    ("IllegalParking", &["illegal", "parking"]),
    ("Overloading", &["overloading"]),
    ("DistractedDriving", &["distracted", "driving"]),
    ("FailureToYield", &["failure", "to", "yield"]),
];

/// Small shared pools keep plate and date tokens in-vocabulary.
fn plate_pool() -> Vec<String> {
    let letters = ["AB", "CD", "EF", "GH", "JK", "LM", "NP", "QR"];
    let digits = ["1024", "2048", "3177", "4660", "5321"];
    let mut out = Vec::new();
    for l in letters {
        for d in digits {
            out.push(format!("{l}-{d}"));
        }
    }
    out
}

fn date_pool() -> Vec<String> {
    (1..=12).map(|m| format!("2023-{m:02}-17")).collect()
}

/// One imaginary entity with its rendered surface tokens.
#[derive(Debug, Clone)]
struct EntityInst {
    type_name: String,
    tokens: Vec<String>,
}

impl EntityInst {
    fn new(type_name: &str, tokens: Vec<String>) -> Self {
        EntityInst { type_name: type_name.into(), tokens }
    }
}

/// Accumulates one gold sentence.
struct SentenceBuilder {
    tokens: Vec<String>,
    raw_tokens: Vec<String>,
    mentions: Vec<EntityMention>,
    triples: Vec<(usize, String, usize)>,
}

impl SentenceBuilder {
    fn new() -> Self {
        SentenceBuilder {
            tokens: Vec::new(),
            raw_tokens: Vec::new(),
            mentions: Vec::new(),
            triples: Vec::new(),
        }
    }

    fn words(&mut self, text: &str) {
        for w in text.split_whitespace() {
            self.tokens.push(w.to_string());
            self.raw_tokens.push(w.to_string());
        }
    }

    /// Append a mention; `raw_override` renders differently in the raw
    /// document (role phrases resolved by preprocessing).
    fn mention(&mut self, inst: &EntityInst, raw_override: Option<&[&str]>) -> usize {
        let start = self.tokens.len();
        self.tokens.extend(inst.tokens.iter().cloned());
        match raw_override {
            Some(raw) => self.raw_tokens.extend(raw.iter().map(|t| t.to_string())),
            None => self.raw_tokens.extend(inst.tokens.iter().cloned()),
        }
        self.mentions.push(EntityMention {
            start,
            end: self.tokens.len(),
            entity_type: inst.type_name.clone(),
            text: inst.tokens.join(" "),
        });
        self.mentions.len() - 1
    }

    fn triple(&mut self, head: usize, relation: &str, tail: usize) {
        self.triples.push((head, relation.to_string(), tail));
    }

    fn finish(mut self) -> BuiltSentence {
        self.tokens.push(".".to_string());
        self.raw_tokens.push(".".to_string());
        BuiltSentence {
            tokens: self.tokens,
            raw_tokens: self.raw_tokens,
            mentions: self.mentions,
            triples: self.triples,
        }
    }
}

struct BuiltSentence {
    tokens: Vec<String>,
    raw_tokens: Vec<String>,
    mentions: Vec<EntityMention>,
    triples: Vec<(usize, String, usize)>,
}

/// One generated document with its complete gold chain.
#[derive(Debug, Clone)]
pub struct SynthDocument {
    pub document: CaseDocument,
    pub segments: Vec<Segment>,
    pub case_info: CaseInfo,
    /// Preprocessed gold sentences (tokens).
    pub sentences: Vec<Vec<String>>,
    pub ner_sentences: Vec<LabeledSentence>,
    pub mentions: Vec<Vec<EntityMention>>,
    pub triples: Vec<FactTriple>,
    /// Training candidates (negative retention applied).
    pub re_train_instances: Vec<RelationInstance>,
    /// All admissible candidates with gold labels, for evaluation.
    pub re_eval_instances: Vec<RelationInstance>,
    pub graph: CaseGraph,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub documents: Vec<SynthDocument>,
    pub schema: RelationSchema,
    pub rules: RuleSet,
}

fn draw_person(rng: &mut ChaCha8Rng, taken: &mut Vec<String>) -> EntityInst {
    loop {
        let name = format!(
            "{} {}",
            FIRST_NAMES.choose(rng).unwrap(),
            LAST_NAMES.choose(rng).unwrap()
        );
        if !taken.contains(&name) {
            taken.push(name.clone());
            return EntityInst::new("NP", name.split(' ').map(str::to_string).collect());
        }
    }
}

fn surface(rng: &mut ChaCha8Rng, options: &[&[&str]]) -> Vec<String> {
    options.choose(rng).unwrap().iter().map(|t| t.to_string()).collect()
}

struct Cast {
    plaintiffs: Vec<EntityInst>,
    defendant_person: Option<EntityInst>,
    company: Option<(String, String, EntityInst)>, // (full, alias, mention inst)
    other_driver: EntityInst,
    vehicle_mv: EntityInst,
    vehicle_mv_alt: EntityInst,
    second_vehicle: EntityInst,
    agent_pool: Vec<String>,
}

fn draw_cast(rng: &mut ChaCha8Rng, plates: &[String]) -> Cast {
    let mut taken = Vec::new();
    let two_plaintiffs = rng.random::<f64>() < 0.15;
    let mut plaintiffs = vec![draw_person(rng, &mut taken)];
    if two_plaintiffs {
        plaintiffs.push(draw_person(rng, &mut taken));
    }
    let company = if rng.random::<f64>() < 0.3 {
        let core = COMPANY_CORES.choose(rng).unwrap().to_string();
        let suffix = COMPANY_SUFFIXES.choose(rng).unwrap().to_string();
        let full = format!("{core} {suffix}");
        let alias = format!("{core} Co.");
        let inst = EntityInst::new("NNP", alias.split(' ').map(str::to_string).collect());
        Some((full, alias, inst))
    } else {
        None
    };
    let defendant_person = if company.is_none() {
        Some(draw_person(rng, &mut taken))
    } else {
        None
    };
    let other_driver = draw_person(rng, &mut taken);
    let plate = plates.choose(rng).unwrap().clone();
    let noun = MV_NOUNS.choose(rng).unwrap().to_string();
    let vehicle_mv = EntityInst::new("MV", vec![noun, plate.clone()]);
    let vehicle_mv_alt = EntityInst::new("MV", vec!["vehicle".to_string(), plate]);
    let second_vehicle = if rng.random::<bool>() {
        EntityInst::new(
            "MV",
            vec![
                COLORS.choose(rng).unwrap().to_string(),
                MV_NOUNS.choose(rng).unwrap().to_string(),
            ],
        )
    } else {
        EntityInst::new("NMV", surface(rng, &NMV_SURFACES))
    };
    let agent_pool = (0..2).map(|_| draw_person(rng, &mut taken).tokens.join(" ")).collect();
    Cast {
        plaintiffs,
        defendant_person,
        company,
        other_driver,
        vehicle_mv,
        vehicle_mv_alt,
        second_vehicle,
        agent_pool,
    }
}

/// Generate the corpus. The schema and tag set must agree with the shipped
/// example schema's types and relations, which the templates target.
pub fn generate_synthetic_corpus(
    seed: u64,
    n_docs: usize,
    schema: &RelationSchema,
    tagset: &TagSet,
) -> Result<SynthCorpus> {
    if n_docs == 0 {
        return Err(Error::invalid("n_docs must be >= 1"));
    }
    schema.validate()?;
    let expected = schema.tagset()?;
    if expected != *tagset {
        return Err(Error::Schema(
            "tag set does not match the schema's entity types".into(),
        ));
    }
    for required in ["NP", "NNP", "MV", "NMV", "DEATH", "INJ", "PROP", "LOC", "TIME", "INS", "MED"] {
        schema.entity_type_index(required)?;
    }
    for required in [
        "Driving", "Ride", "Accident", "Caused", "OccurredAt", "OccurredOn", "Violated",
        "InsuredBy", "Owns",
    ] {
        schema.class_index(required)?;
    }

    let rules = example_rules();
    let compiled = rules.compile()?;
    let plates = plate_pool();
    let dates = date_pool();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut documents = Vec::with_capacity(n_docs);
    for doc_idx in 0..n_docs {
        documents.push(generate_document(
            doc_idx, &mut rng, schema, tagset, &compiled, &plates, &dates,
        )?);
    }
    Ok(SynthCorpus {
        documents,
        schema: schema.clone(),
        rules,
    })
}

#[allow(clippy::too_many_arguments)]
fn generate_document(
    doc_idx: usize,
    rng: &mut ChaCha8Rng,
    schema: &RelationSchema,
    tagset: &TagSet,
    compiled: &CompiledRules,
    plates: &[String],
    dates: &[String],
) -> Result<SynthDocument> {
    let cast = draw_cast(rng, plates);
    let doc_id = format!("doc-{doc_idx:05}");
    let sole_plaintiff = cast.plaintiffs.len() == 1;

    // Fact sentences. The primary vehicle threads through the story so
    // repeated mentions exercise plate-based alignment.
    let n_sentences = rng.random_range(3..=6);
    let mut built: Vec<BuiltSentence> = Vec::new();
    let mut used_mv = false;
    for s_idx in 0..n_sentences {
        let mut b = SentenceBuilder::new();
        // Subject: the plaintiff, sometimes written as a role phrase that
        // referent completion must resolve.
        let subject = if cast.defendant_person.is_some() && rng.random::<f64>() < 0.3 {
            cast.defendant_person.clone().unwrap()
        } else if rng.random::<f64>() < 0.25 {
            cast.other_driver.clone()
        } else {
            cast.plaintiffs[0].clone()
        };
        let as_role: Option<&[&str]> = if sole_plaintiff
            && subject.tokens == cast.plaintiffs[0].tokens
            && rng.random::<f64>() < 0.5
        {
            Some(&["The", "plaintiff"])
        } else {
            None
        };
        let mv = if used_mv && rng.random::<f64>() < 0.3 {
            cast.vehicle_mv_alt.clone()
        } else {
            cast.vehicle_mv.clone()
        };

        // Applicable templates for this sentence.
        let mut options: Vec<&str> = vec![
            "driving", "ride", "accident", "caused", "at", "on", "violated", "insured", "compound",
        ];
        if s_idx == 0 {
            if let Some((_, _, _)) = &cast.company {
                options = vec!["owns"];
            }
        }
        if rng.random::<f64>() < 0.08 {
            options = vec!["med"];
        }
        let choice = *options.choose(rng).unwrap();
        match choice {
            "owns" => {
                let (_, _, company_inst) = cast.company.as_ref().unwrap();
                let c = b.mention(company_inst, None);
                b.words("owned the");
                let v = b.mention(&cast.vehicle_mv, None);
                b.triple(c, "Owns", v);
                used_mv = true;
            }
            "driving" => {
                let s = b.mention(&subject, as_role);
                b.words("drove the");
                let v = b.mention(&mv, None);
                b.triple(s, "Driving", v);
                used_mv = true;
            }
            "ride" => {
                let s = b.mention(&subject, as_role);
                b.words("rode in the");
                let v = b.mention(&cast.second_vehicle, None);
                b.triple(s, "Ride", v);
            }
            "accident" => {
                b.words("The");
                let v1 = b.mention(&mv, None);
                used_mv = true;
                if rng.random::<f64>() < 0.4 {
                    b.words("collided with");
                    let p = b.mention(&cast.other_driver, None);
                    b.triple(v1, "Accident", p);
                } else {
                    // The generator keeps accident pairs type-distinct, so
                    // a second MV is replaced by a fresh NMV here.
                    let other = if cast.second_vehicle.type_name == "NMV" {
                        cast.second_vehicle.clone()
                    } else {
                        EntityInst::new("NMV", surface(rng, &NMV_SURFACES))
                    };
                    b.words("collided with the");
                    let v2 = b.mention(&other, None);
                    b.triple(v1, "Accident", v2);
                }
            }
            "caused" => {
                b.words("The");
                let v1 = b.mention(&mv, None);
                used_mv = true;
                b.words("caused the");
                let (ty, s) = match rng.random_range(0..3) {
                    0 => ("DEATH", surface(rng, &DEATH_SURFACES)),
                    1 => ("INJ", surface(rng, &INJ_SURFACES)),
                    _ => ("PROP", surface(rng, &PROP_SURFACES)),
                };
                let obj = b.mention(&EntityInst::new(ty, s), None);
                b.triple(v1, "Caused", obj);
            }
            "at" => {
                b.words("The");
                let v1 = b.mention(&mv, None);
                used_mv = true;
                b.words("crashed at");
                let loc = b.mention(&EntityInst::new("LOC", surface(rng, &LOC_SURFACES)), None);
                b.triple(v1, "OccurredAt", loc);
            }
            "on" => {
                b.words("The");
                let v1 = b.mention(&mv, None);
                used_mv = true;
                b.words("crashed on");
                let date = dates.choose(rng).unwrap().clone();
                let t = b.mention(&EntityInst::new("TIME", vec![date]), None);
                b.triple(v1, "OccurredOn", t);
            }
            "violated" => {
                let s = b.mention(&subject, as_role);
                b.words("committed");
                let (vname, vsurf) = VIOLATION_SURFACES.choose(rng).unwrap();
                let v = b.mention(
                    &EntityInst::new(vname, vsurf.iter().map(|t| t.to_string()).collect()),
                    None,
                );
                b.triple(s, "Violated", v);
            }
            "insured" => {
                b.words("The");
                let v1 = b.mention(&mv, None);
                used_mv = true;
                b.words("was insured by");
                let ins = b.mention(&EntityInst::new("INS", surface(rng, &INS_SURFACES)), None);
                b.triple(v1, "InsuredBy", ins);
            }
            "compound" => {
                let s = b.mention(&subject, as_role);
                b.words("drove the");
                let v1 = b.mention(&mv, None);
                used_mv = true;
                b.words("and collided with the");
                let nmv = EntityInst::new("NMV", surface(rng, &NMV_SURFACES));
                let v2 = b.mention(&nmv, None);
                b.triple(s, "Driving", v1);
                b.triple(v1, "Accident", v2);
            }
            _ => {
                let s = b.mention(&subject, as_role);
                b.words("paid");
                b.mention(&EntityInst::new("MED", surface(rng, &MED_SURFACES)), None);
                let _ = s;
            }
        }
        built.push(b.finish());
    }

    // Structured header.
    let year = 2021 + (doc_idx % 4);
    let case_number = format!("({year})-Civ-{doc_idx:05}");
    let city = CITIES.choose(rng).unwrap();
    let mut lines: Vec<String> = vec![
        "CIVIL JUDGMENT".to_string(),
        format!("Case No. {case_number}"),
        format!("{city} People's Court"),
    ];
    let mut parties = Vec::new();
    for p in &cast.plaintiffs {
        let name = p.tokens.join(" ");
        let agent = (rng.random::<f64>() < 0.4).then(|| cast.agent_pool[0].clone());
        let mut line = format!("Plaintiff: {name}");
        if let Some(a) = &agent {
            line.push_str(&format!(", agent: {a}"));
        }
        lines.push(line);
        parties.push(Party { role: PartyRole::Plaintiff, name, alias: None, agent });
    }
    if let Some((full, alias, _)) = &cast.company {
        let agent = (rng.random::<f64>() < 0.4).then(|| cast.agent_pool[1].clone());
        let mut line = format!("Defendant: {full} (hereinafter \"{alias}\")");
        if let Some(a) = &agent {
            line.push_str(&format!(", agent: {a}"));
        }
        lines.push(line);
        parties.push(Party {
            role: PartyRole::Defendant,
            name: full.clone(),
            alias: Some(alias.clone()),
            agent,
        });
    } else if let Some(d) = &cast.defendant_person {
        let name = d.tokens.join(" ");
        lines.push(format!("Defendant: {name}"));
        parties.push(Party { role: PartyRole::Defendant, name, alias: None, agent: None });
    }
    lines.push("THE COURT FINDS THE FACTS AS FOLLOWS:".to_string());
    let facts_body: String = built
        .iter()
        .map(|b| b.raw_tokens.join(" "))
        .collect::<Vec<_>>()
        .join(" ");
    lines.push(facts_body);
    let text = lines.join("\n") + "\n";
    let document = CaseDocument::new(doc_id.clone(), text)?;

    // The gold chain reuses the real pipeline components; the generator is
    // co-designed with the rules, so these are exact.
    let segments = segment_document(&document, compiled)?;
    let case_info = extract_structured(&document.text, &segments, compiled)?;
    debug_assert!(case_info.missing_fields.is_empty());
    debug_assert_eq!(case_info.parties, parties);

    let sentences: Vec<Vec<String>> = built.iter().map(|b| b.tokens.clone()).collect();
    {
        let facts_seg = segments.iter().find(|s| s.segment_type == SegmentType::Facts).unwrap();
        let pre = preprocess_facts(facts_seg.text(&document.text), &case_info, compiled);
        let pre_tokens: Vec<Vec<String>> = pre.iter().map(|s| s.tokens.clone()).collect();
        if pre_tokens != sentences {
            return Err(Error::Format(format!(
                "generator/preprocess mismatch in {doc_id}: {pre_tokens:?} vs {sentences:?}"
            )));
        }
    }

    let mut ner_sentences = Vec::new();
    let mut mentions = Vec::new();
    let mut triples = Vec::new();
    let mut re_train_instances = Vec::new();
    let mut re_eval_instances = Vec::new();
    for (s_idx, b) in built.iter().enumerate() {
        let label_ids = encode_mentions(b.tokens.len(), &b.mentions, tagset)?;
        ner_sentences.push(LabeledSentence {
            tokens: b.tokens.clone(),
            labels: label_ids.iter().map(|&l| tagset.label_name(l)).collect(),
        });
        let gold: Vec<GoldTriple> = b
            .triples
            .iter()
            .map(|(h, r, t)| GoldTriple {
                head_mention: *h,
                relation: r.clone(),
                tail_mention: *t,
            })
            .collect();
        re_train_instances.extend(generate_candidates(
            &b.tokens,
            &b.mentions,
            schema,
            CandidateMode::Training { keep_prob: 0.5 },
            &gold,
            rng,
        )?);
        re_eval_instances.extend(generate_candidates(
            &b.tokens,
            &b.mentions,
            schema,
            CandidateMode::Training { keep_prob: 1.0 },
            &gold,
            rng,
        )?);
        for (h, r, t) in &b.triples {
            let hm = &b.mentions[*h];
            let tm = &b.mentions[*t];
            triples.push(FactTriple {
                head_surface: hm.text.clone(),
                head_type: hm.entity_type.clone(),
                relation: r.clone(),
                tail_surface: tm.text.clone(),
                tail_type: tm.entity_type.clone(),
                sentence: s_idx,
                confidence: 1.0,
            });
        }
        mentions.push(b.mentions.clone());
    }

    let graph = fuse_knowledge(&doc_id, &case_info, &triples, &document.text, compiled)?;

    Ok(SynthDocument {
        document,
        segments,
        case_info,
        sentences,
        ner_sentences,
        mentions,
        triples,
        re_train_instances,
        re_eval_instances,
        graph,
    })
}
