//! Command implementations over the core library.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;

use casegraph_core::checkpoint::{load_ner_model, load_re_model, save_ner_model, save_re_model};
use casegraph_core::encoder::EncoderConfig;
use casegraph_core::kge::{
    collect_relation_angles, complete, derive_components, eval_link_prediction, train_rotate,
    AngleAveraging, CompletionQuery, ComponentConfig, EvalPartition, KgeCheckpoint, KgeTrainConfig,
    MsreScorer, Norm, QuerySide, RotateScorer, TripleScorer, TripleStore,
};
use casegraph_core::numeric::{pca_fit, Kernel};
use casegraph_core::pipeline::{
    build_case_graph, example_schema, generate_synthetic_corpus, graph_match_f1, segment_document,
    segment_eval, CaseDocument, CaseGraph, ExportFormat, RuleSet, Segment,
};
use casegraph_core::relation::{
    macro_f1, read_re_corpus, train_re, write_re_corpus, RelationSchema, TrainReConfig,
};
use casegraph_core::tagger::{
    decode_mentions, read_ner_corpus, span_f1, train_ner, write_ner_corpus, DecoderKind,
    LabeledSentence, TrainNerConfig,
};

use crate::config::{require_path, required_seed, section};

#[derive(Serialize)]
pub struct Summary {
    pub command: String,
    pub status: String,
    pub metrics: BTreeMap<String, Value>,
    pub artifacts: Vec<String>,
}

impl Summary {
    fn new(command: &str) -> Self {
        Summary {
            command: command.to_string(),
            status: "ok".to_string(),
            metrics: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    fn metric(&mut self, key: &str, value: impl Serialize) {
        self.metrics.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    fn artifact(&mut self, path: &Path) {
        self.artifacts.push(path.display().to_string());
    }
}

pub fn run(command: &str, config: &Value) -> Result<Summary> {
    match command {
        "gen-corpus" => gen_corpus(config),
        "train-ner" => cmd_train_ner(config),
        "train-re" => cmd_train_re(config),
        "train-kge" => cmd_train_kge(config),
        "derive-components" => cmd_derive_components(config),
        "complete" => cmd_complete(config),
        "build-kg" => cmd_build_kg(config),
        "eval" => cmd_eval(config),
        other => bail!("unknown command '{other}'"),
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .with_context(|| format!("{}:{}: malformed record", path.display(), i + 1))?,
        );
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for item in items {
        serde_json::to_writer(&mut file, item)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

fn write_metrics(path: &str, metrics: &BTreeMap<String, Value>) -> Result<Option<PathBuf>> {
    if path.is_empty() {
        return Ok(None);
    }
    let path = PathBuf::from(path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::fs::File::create(&path)?;
    serde_json::to_writer(&mut file, metrics)?;
    file.write_all(b"\n")?;
    Ok(Some(path))
}

#[derive(Serialize, Deserialize)]
struct DocRecord {
    id: String,
    text: String,
}

#[derive(Serialize, Deserialize)]
struct SegmentsRecord {
    id: String,
    segments: Vec<Segment>,
}

// ---------------------------------------------------------------------------
// gen-corpus

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GenCorpusSection {
    n_docs: usize,
    out_dir: String,
    holdout_fraction: f64,
}

impl Default for GenCorpusSection {
    fn default() -> Self {
        GenCorpusSection {
            n_docs: 600,
            out_dir: String::new(),
            holdout_fraction: 0.2,
        }
    }
}

fn gen_corpus(config: &Value) -> Result<Summary> {
    let seed = required_seed(config)?;
    let sec: GenCorpusSection = section(config, "gen_corpus")?;
    require_path(&sec.out_dir, "gen_corpus.out_dir")?;
    let out = PathBuf::from(&sec.out_dir);
    std::fs::create_dir_all(&out)?;

    let schema = example_schema();
    let tagset = schema.tagset().map_err(|e| anyhow!(e))?;
    let corpus = generate_synthetic_corpus(seed, sec.n_docs, &schema, &tagset).map_err(|e| anyhow!(e))?;

    // Deterministic document-level split on a derived stream.
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    const SPLIT_SEED_XOR: u64 = 0x5eed_0001;
    let mut split_rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ SPLIT_SEED_XOR);
    let mut order: Vec<usize> = (0..corpus.documents.len()).collect();
    order.shuffle(&mut split_rng);
    let n_test = ((corpus.documents.len() as f64) * sec.holdout_fraction).round() as usize;
    let n_test = n_test.min(corpus.documents.len().saturating_sub(1));
    let mut test_ids: Vec<usize> = order[..n_test].to_vec();
    test_ids.sort_unstable();
    let is_test = |i: usize| test_ids.binary_search(&i).is_ok();

    let mut summary = Summary::new("gen-corpus");
    let schema_path = out.join("schema.json");
    schema.save(&schema_path).map_err(|e| anyhow!(e))?;
    summary.artifact(&schema_path);
    let rules_path = out.join("rules.json");
    corpus.rules.save(&rules_path).map_err(|e| anyhow!(e))?;
    summary.artifact(&rules_path);

    let docs: Vec<DocRecord> = corpus
        .documents
        .iter()
        .map(|d| DocRecord { id: d.document.id.clone(), text: d.document.text.clone() })
        .collect();
    let docs_path = out.join("documents.jsonl");
    write_jsonl(&docs_path, &docs)?;
    summary.artifact(&docs_path);
    let docs_test: Vec<&DocRecord> = docs.iter().enumerate().filter(|(i, _)| is_test(*i)).map(|(_, d)| d).collect();
    let docs_test_path = out.join("documents_test.jsonl");
    write_jsonl(&docs_test_path, &docs_test)?;
    summary.artifact(&docs_test_path);

    let mut ner_train: Vec<LabeledSentence> = Vec::new();
    let mut ner_test: Vec<LabeledSentence> = Vec::new();
    let mut re_train = Vec::new();
    let mut re_test = Vec::new();
    let mut segments_gold = Vec::new();
    let mut graphs_gold = Vec::new();
    let mut graphs_gold_test = Vec::new();
    let mut n_sentences = 0usize;
    for (i, d) in corpus.documents.iter().enumerate() {
        n_sentences += d.sentences.len();
        segments_gold.push(SegmentsRecord { id: d.document.id.clone(), segments: d.segments.clone() });
        graphs_gold.push(d.graph.clone());
        if is_test(i) {
            ner_test.extend(d.ner_sentences.iter().cloned());
            re_test.extend(d.re_eval_instances.iter().cloned());
            graphs_gold_test.push(d.graph.clone());
        } else {
            ner_train.extend(d.ner_sentences.iter().cloned());
            re_train.extend(d.re_train_instances.iter().cloned());
        }
    }
    for (name, data) in [("ner_train.jsonl", &ner_train), ("ner_test.jsonl", &ner_test)] {
        let path = out.join(name);
        write_ner_corpus(&path, data).map_err(|e| anyhow!(e))?;
        summary.artifact(&path);
    }
    for (name, data) in [("re_train.jsonl", &re_train), ("re_test.jsonl", &re_test)] {
        let path = out.join(name);
        write_re_corpus(&path, data).map_err(|e| anyhow!(e))?;
        summary.artifact(&path);
    }
    let seg_path = out.join("segments_gold.jsonl");
    write_jsonl(&seg_path, &segments_gold)?;
    summary.artifact(&seg_path);
    for (name, data) in [("graphs_gold.jsonl", &graphs_gold), ("graphs_gold_test.jsonl", &graphs_gold_test)] {
        let path = out.join(name);
        write_jsonl(&path, data)?;
        summary.artifact(&path);
    }
    let split_path = out.join("split.json");
    let train_ids: Vec<String> = corpus
        .documents
        .iter()
        .enumerate()
        .filter(|(i, _)| !is_test(*i))
        .map(|(_, d)| d.document.id.clone())
        .collect();
    let test_names: Vec<String> = test_ids.iter().map(|&i| corpus.documents[i].document.id.clone()).collect();
    std::fs::write(
        &split_path,
        serde_json::to_string_pretty(&serde_json::json!({"train_ids": train_ids, "test_ids": test_names}))?,
    )?;
    summary.artifact(&split_path);

    summary.metric("documents", corpus.documents.len());
    summary.metric("train_documents", corpus.documents.len() - test_ids.len());
    summary.metric("test_documents", test_ids.len());
    summary.metric("sentences", n_sentences);
    summary.metric("ner_train_sentences", ner_train.len());
    summary.metric("re_train_instances", re_train.len());
    Ok(summary)
}

// ---------------------------------------------------------------------------
// train-ner

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainNerSection {
    corpus: String,
    schema: String,
    checkpoint: String,
    metrics: String,
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    dropout: f64,
    weight_decay: f64,
    grad_clip: f64,
    max_len: usize,
    decoder: String,
    embed_dim: usize,
    hidden_dim: usize,
    conv_width: usize,
}

impl Default for TrainNerSection {
    fn default() -> Self {
        let c = TrainNerConfig::default();
        TrainNerSection {
            corpus: String::new(),
            schema: String::new(),
            checkpoint: String::new(),
            metrics: String::new(),
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            dropout: c.dropout,
            weight_decay: c.weight_decay,
            grad_clip: c.grad_clip,
            max_len: c.max_len,
            decoder: "crf".to_string(),
            embed_dim: c.encoder.embed_dim,
            hidden_dim: c.encoder.hidden_dim,
            conv_width: c.encoder.conv_width,
        }
    }
}

fn parse_decoder(name: &str) -> Result<DecoderKind> {
    match name {
        "crf" => Ok(DecoderKind::Crf),
        "softmax" => Ok(DecoderKind::Softmax),
        other => bail!("config field 'decoder' must be 'crf' or 'softmax', got '{other}'"),
    }
}

fn cmd_train_ner(config: &Value) -> Result<Summary> {
    let seed = required_seed(config)?;
    let sec: TrainNerSection = section(config, "train_ner")?;
    for (v, f) in [
        (&sec.corpus, "train_ner.corpus"),
        (&sec.schema, "train_ner.schema"),
        (&sec.checkpoint, "train_ner.checkpoint"),
    ] {
        require_path(v, f)?;
    }
    let schema = RelationSchema::load(Path::new(&sec.schema)).map_err(|e| anyhow!(e))?;
    let tagset = schema.tagset().map_err(|e| anyhow!(e))?;
    let corpus = read_ner_corpus(Path::new(&sec.corpus)).map_err(|e| anyhow!(e))?;

    let cfg = TrainNerConfig {
        max_len: sec.max_len,
        weight_decay: sec.weight_decay,
        dropout: sec.dropout,
        batch_size: sec.batch_size,
        grad_clip: sec.grad_clip,
        learning_rate: sec.learning_rate,
        epochs: sec.epochs,
        seed,
        decoder: parse_decoder(&sec.decoder)?,
        encoder: EncoderConfig {
            embed_dim: sec.embed_dim,
            hidden_dim: sec.hidden_dim,
            conv_width: sec.conv_width,
        },
    };
    let (model, report) = train_ner(&corpus, &tagset, &cfg).map_err(|e| anyhow!(e))?;
    let ckpt = PathBuf::from(&sec.checkpoint);
    save_ner_model(&ckpt, &model).map_err(|e| anyhow!(e))?;

    let mut summary = Summary::new("train-ner");
    summary.artifact(&ckpt);
    summary.metric("sentences", corpus.len());
    summary.metric("epochs", cfg.epochs);
    summary.metric("final_loss", report.epoch_losses.last().copied().unwrap_or(0.0));
    summary.metric("epoch_losses", &report.epoch_losses);
    if let Some(p) = write_metrics(&sec.metrics, &summary.metrics)? {
        summary.artifact(&p);
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// train-re

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainReSection {
    corpus: String,
    schema: String,
    checkpoint: String,
    metrics: String,
    lambda: f64,
    gamma: f64,
    entity_type_dim: usize,
    relation_embed_dim: usize,
    feature_dim: usize,
    negatives_per_positive: usize,
    include_other_in_translation: bool,
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    dropout: f64,
    weight_decay: f64,
    grad_clip: f64,
    embed_dim: usize,
    hidden_dim: usize,
    conv_width: usize,
}

impl Default for TrainReSection {
    fn default() -> Self {
        let c = TrainReConfig::default();
        TrainReSection {
            corpus: String::new(),
            schema: String::new(),
            checkpoint: String::new(),
            metrics: String::new(),
            lambda: c.lambda,
            gamma: c.gamma,
            entity_type_dim: c.entity_type_dim,
            relation_embed_dim: c.relation_embed_dim,
            feature_dim: c.feature_dim,
            negatives_per_positive: c.negatives_per_positive,
            include_other_in_translation: c.include_other_in_translation,
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            dropout: c.dropout,
            weight_decay: c.weight_decay,
            grad_clip: c.grad_clip,
            embed_dim: c.encoder.embed_dim,
            hidden_dim: c.encoder.hidden_dim,
            conv_width: c.encoder.conv_width,
        }
    }
}

fn cmd_train_re(config: &Value) -> Result<Summary> {
    let seed = required_seed(config)?;
    let sec: TrainReSection = section(config, "train_re")?;
    for (v, f) in [
        (&sec.corpus, "train_re.corpus"),
        (&sec.schema, "train_re.schema"),
        (&sec.checkpoint, "train_re.checkpoint"),
    ] {
        require_path(v, f)?;
    }
    let schema = RelationSchema::load(Path::new(&sec.schema)).map_err(|e| anyhow!(e))?;
    let instances = read_re_corpus(Path::new(&sec.corpus)).map_err(|e| anyhow!(e))?;
    let cfg = TrainReConfig {
        lambda: sec.lambda,
        gamma: sec.gamma,
        entity_type_dim: sec.entity_type_dim,
        relation_embed_dim: sec.relation_embed_dim,
        feature_dim: sec.feature_dim,
        batch_size: sec.batch_size,
        grad_clip: sec.grad_clip,
        weight_decay: sec.weight_decay,
        dropout: sec.dropout,
        learning_rate: sec.learning_rate,
        epochs: sec.epochs,
        seed,
        negatives_per_positive: sec.negatives_per_positive,
        include_other_in_translation: sec.include_other_in_translation,
        encoder: EncoderConfig {
            embed_dim: sec.embed_dim,
            hidden_dim: sec.hidden_dim,
            conv_width: sec.conv_width,
        },
    };
    let (model, report) = train_re(&instances, &schema, &cfg).map_err(|e| anyhow!(e))?;
    let ckpt = PathBuf::from(&sec.checkpoint);
    save_re_model(&ckpt, &model).map_err(|e| anyhow!(e))?;

    let mut summary = Summary::new("train-re");
    summary.artifact(&ckpt);
    summary.metric("instances", instances.len());
    summary.metric("epochs", cfg.epochs);
    summary.metric("final_loss", report.epoch_losses.last().copied().unwrap_or(0.0));
    summary.metric("epoch_losses", &report.epoch_losses);
    if let Some(p) = write_metrics(&sec.metrics, &summary.metrics)? {
        summary.artifact(&p);
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// train-kge

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainKgeSection {
    triples_dir: String,
    checkpoint: String,
    metrics: String,
    dim: usize,
    margin: f64,
    negatives: usize,
    learning_rate: f64,
    lr_decay_patience: usize,
    self_adversarial: bool,
    adversarial_temperature: f64,
    epochs: usize,
    batch_size: usize,
    eval_every: usize,
    norm: String,
    init_scale: f64,
}

impl Default for TrainKgeSection {
    fn default() -> Self {
        let c = KgeTrainConfig::default();
        TrainKgeSection {
            triples_dir: String::new(),
            checkpoint: String::new(),
            metrics: String::new(),
            dim: c.dim,
            margin: c.margin,
            negatives: c.negatives,
            learning_rate: c.learning_rate,
            lr_decay_patience: c.lr_decay_patience,
            self_adversarial: c.self_adversarial,
            adversarial_temperature: c.adversarial_temperature,
            epochs: c.epochs,
            batch_size: c.batch_size,
            eval_every: c.eval_every,
            norm: "l1".to_string(),
            init_scale: c.init_scale,
        }
    }
}

fn parse_norm(name: &str) -> Result<Norm> {
    match name {
        "l1" => Ok(Norm::L1),
        "l2" => Ok(Norm::L2),
        other => bail!("config field 'norm' must be 'l1' or 'l2', got '{other}'"),
    }
}

fn cmd_train_kge(config: &Value) -> Result<Summary> {
    let seed = required_seed(config)?;
    let sec: TrainKgeSection = section(config, "train_kge")?;
    require_path(&sec.triples_dir, "train_kge.triples_dir")?;
    require_path(&sec.checkpoint, "train_kge.checkpoint")?;
    let store = TripleStore::load_dir(Path::new(&sec.triples_dir)).map_err(|e| anyhow!(e))?;
    let cfg = KgeTrainConfig {
        dim: sec.dim,
        margin: sec.margin,
        negatives: sec.negatives,
        learning_rate: sec.learning_rate,
        lr_decay_patience: sec.lr_decay_patience,
        self_adversarial: sec.self_adversarial,
        adversarial_temperature: sec.adversarial_temperature,
        seed,
        epochs: sec.epochs,
        batch_size: sec.batch_size,
        eval_every: sec.eval_every,
        norm: parse_norm(&sec.norm)?,
        init_scale: sec.init_scale,
    };
    let (tables, report) = train_rotate(&store, &cfg).map_err(|e| anyhow!(e))?;
    let ckpt_path = PathBuf::from(&sec.checkpoint);
    if let Some(parent) = ckpt_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let ckpt = KgeCheckpoint::new(&store, tables, cfg.norm);
    ckpt.save(&ckpt_path).map_err(|e| anyhow!(e))?;

    let mut summary = Summary::new("train-kge");
    summary.artifact(&ckpt_path);
    summary.metric("entities", store.entity_count());
    summary.metric("relations", store.relation_count());
    summary.metric("train_triples", store.train.len());
    summary.metric("final_loss", report.epoch_losses.last().copied().unwrap_or(0.0));
    summary.metric("valid_mrr", &report.valid_mrr);
    summary.metric("final_learning_rate", report.final_learning_rate);
    if let Some(p) = write_metrics(&sec.metrics, &summary.metrics)? {
        summary.artifact(&p);
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// derive-components

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DeriveComponentsSection {
    checkpoint: String,
    triples_dir: String,
    out_checkpoint: String,
    metrics: String,
    pca_dim: usize,
    bandwidth: Option<f64>,
    kernel: String,
    averaging: String,
    min_cluster_size: usize,
    min_pairs_for_merge: usize,
    /// Relations to derive; empty means every relation with training pairs.
    relations: Vec<String>,
    /// Directory for plot-ready 2-D reduced angle vectors; empty skips.
    angles_2d_dir: String,
}

impl Default for DeriveComponentsSection {
    fn default() -> Self {
        let c = ComponentConfig::default();
        DeriveComponentsSection {
            checkpoint: String::new(),
            triples_dir: String::new(),
            out_checkpoint: String::new(),
            metrics: String::new(),
            pca_dim: c.pca_dim,
            bandwidth: c.bandwidth,
            kernel: "flat".to_string(),
            averaging: "circular".to_string(),
            min_cluster_size: c.min_cluster_size,
            min_pairs_for_merge: c.min_pairs_for_merge,
            relations: Vec::new(),
            angles_2d_dir: String::new(),
        }
    }
}

fn cmd_derive_components(config: &Value) -> Result<Summary> {
    let sec: DeriveComponentsSection = section(config, "derive_components")?;
    for (v, f) in [
        (&sec.checkpoint, "derive_components.checkpoint"),
        (&sec.triples_dir, "derive_components.triples_dir"),
        (&sec.out_checkpoint, "derive_components.out_checkpoint"),
    ] {
        require_path(v, f)?;
    }
    let mut ckpt = KgeCheckpoint::load(Path::new(&sec.checkpoint)).map_err(|e| anyhow!(e))?;
    let store = TripleStore::load_dir(Path::new(&sec.triples_dir)).map_err(|e| anyhow!(e))?;
    let cfg = ComponentConfig {
        pca_dim: sec.pca_dim,
        bandwidth: sec.bandwidth,
        kernel: match sec.kernel.as_str() {
            "flat" => Kernel::Flat,
            "gaussian" => Kernel::Gaussian,
            other => bail!("config field 'kernel' must be 'flat' or 'gaussian', got '{other}'"),
        },
        averaging: match sec.averaging.as_str() {
            "circular" => AngleAveraging::Circular,
            "arithmetic" => AngleAveraging::Arithmetic,
            other => bail!("config field 'averaging' must be 'circular' or 'arithmetic', got '{other}'"),
        },
        min_cluster_size: sec.min_cluster_size,
        min_pairs_for_merge: sec.min_pairs_for_merge,
        ..Default::default()
    };

    let targets: Vec<usize> = if sec.relations.is_empty() {
        let mut with_pairs: Vec<usize> = store.train.iter().map(|t| t[1]).collect();
        with_pairs.sort_unstable();
        with_pairs.dedup();
        with_pairs
    } else {
        sec.relations
            .iter()
            .map(|name| store.relation_index(name).map_err(|e| anyhow!(e)))
            .collect::<Result<_>>()?
    };

    let mut summary = Summary::new("derive-components");
    let mut k_by_relation: BTreeMap<String, usize> = BTreeMap::new();
    let angles_dir = (!sec.angles_2d_dir.is_empty()).then(|| PathBuf::from(&sec.angles_2d_dir));
    if let Some(dir) = &angles_dir {
        std::fs::create_dir_all(dir)?;
    }
    for r in targets {
        let angles = collect_relation_angles(&store, &ckpt.tables, r).map_err(|e| anyhow!(e))?;
        let comps = derive_components(&angles, &cfg).map_err(|e| anyhow!(e))?;
        k_by_relation.insert(store.relation_name(r).to_string(), comps.k());
        ckpt.components.insert(r, comps);

        // Plot-ready 2-D reduction of this relation's angle vectors.
        if let Some(dir) = &angles_dir {
            if angles.dim() >= 2 && angles.pair_count() >= 2 {
                if let Ok(model) = pca_fit(&angles.vectors, 2) {
                    let path = dir.join(format!("{}_angles2d.csv", sanitize(store.relation_name(r))));
                    let mut w = csv::Writer::from_path(&path)?;
                    w.write_record(["feature1", "feature2"])?;
                    for v in &angles.vectors {
                        let p = model.transform(v).map_err(|e| anyhow!(e))?;
                        w.write_record([format!("{}", p[0]), format!("{}", p[1])])?;
                    }
                    w.flush()?;
                    summary.artifact(&path);
                }
            }
        }
    }
    let out_path = PathBuf::from(&sec.out_checkpoint);
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    ckpt.save(&out_path).map_err(|e| anyhow!(e))?;
    summary.artifact(&out_path);
    summary.metric("components", &k_by_relation);
    if let Some(p) = write_metrics(&sec.metrics, &summary.metrics)? {
        summary.artifact(&p);
    }
    Ok(summary)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

// ---------------------------------------------------------------------------
// complete

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CompleteSection {
    checkpoint: String,
    triples_dir: String,
    direction: String,
    head: String,
    relation: String,
    tail: String,
    top_k: usize,
    filtered: bool,
    use_components: bool,
}

impl Default for CompleteSection {
    fn default() -> Self {
        CompleteSection {
            checkpoint: String::new(),
            triples_dir: String::new(),
            direction: "tail".to_string(),
            head: String::new(),
            relation: String::new(),
            tail: String::new(),
            top_k: 10,
            filtered: false,
            use_components: true,
        }
    }
}

fn cmd_complete(config: &Value) -> Result<Summary> {
    let sec: CompleteSection = section(config, "complete")?;
    require_path(&sec.checkpoint, "complete.checkpoint")?;
    require_path(&sec.triples_dir, "complete.triples_dir")?;
    require_path(&sec.relation, "complete.relation")?;
    let ckpt = KgeCheckpoint::load(Path::new(&sec.checkpoint)).map_err(|e| anyhow!(e))?;
    let store = TripleStore::load_dir(Path::new(&sec.triples_dir)).map_err(|e| anyhow!(e))?;
    let query = match sec.direction.as_str() {
        "tail" => {
            require_path(&sec.head, "complete.head")?;
            CompletionQuery::Tail { head: sec.head.clone(), relation: sec.relation.clone() }
        }
        "head" => {
            require_path(&sec.tail, "complete.tail")?;
            CompletionQuery::Head { relation: sec.relation.clone(), tail: sec.tail.clone() }
        }
        other => bail!("config field 'direction' must be 'tail' or 'head', got '{other}'"),
    };
    let ranked = if sec.use_components && !ckpt.components.is_empty() {
        let scorer = MsreScorer { tables: &ckpt.tables, components: &ckpt.components, norm: ckpt.norm };
        complete(&store, &scorer, &query, sec.filtered, sec.top_k).map_err(|e| anyhow!(e))?
    } else {
        let scorer = RotateScorer { tables: &ckpt.tables, norm: ckpt.norm };
        complete(&store, &scorer, &query, sec.filtered, sec.top_k).map_err(|e| anyhow!(e))?
    };

    let mut summary = Summary::new("complete");
    summary.metric("top1", ranked.first().map(|(n, _)| n.clone()).unwrap_or_default());
    summary.metric("results", &ranked);
    Ok(summary)
}

// ---------------------------------------------------------------------------
// build-kg

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BuildKgSection {
    documents: String,
    ner_checkpoint: String,
    re_checkpoint: String,
    rules: String,
    schema: String,
    out_dir: String,
    format: String,
}

impl Default for BuildKgSection {
    fn default() -> Self {
        BuildKgSection {
            documents: String::new(),
            ner_checkpoint: String::new(),
            re_checkpoint: String::new(),
            rules: String::new(),
            schema: String::new(),
            out_dir: String::new(),
            format: "jsonl".to_string(),
        }
    }
}

fn cmd_build_kg(config: &Value) -> Result<Summary> {
    let sec: BuildKgSection = section(config, "build_kg")?;
    for (v, f) in [
        (&sec.documents, "build_kg.documents"),
        (&sec.ner_checkpoint, "build_kg.ner_checkpoint"),
        (&sec.re_checkpoint, "build_kg.re_checkpoint"),
        (&sec.rules, "build_kg.rules"),
        (&sec.schema, "build_kg.schema"),
        (&sec.out_dir, "build_kg.out_dir"),
    ] {
        require_path(v, f)?;
    }
    let format = match sec.format.as_str() {
        "jsonl" => ExportFormat::Jsonl,
        "bulk_csv" => ExportFormat::BulkCsv,
        other => bail!("config field 'format' must be 'jsonl' or 'bulk_csv', got '{other}'"),
    };
    let docs: Vec<DocRecord> = read_jsonl(Path::new(&sec.documents))?;
    let ner = load_ner_model(Path::new(&sec.ner_checkpoint)).map_err(|e| anyhow!(e))?;
    let re = load_re_model(Path::new(&sec.re_checkpoint)).map_err(|e| anyhow!(e))?;
    let rules = RuleSet::load(Path::new(&sec.rules))
        .and_then(|r| r.compile())
        .map_err(|e| anyhow!(e))?;
    let schema = RelationSchema::load(Path::new(&sec.schema)).map_err(|e| anyhow!(e))?;

    let mut graphs = Vec::with_capacity(docs.len());
    for d in &docs {
        let doc = CaseDocument::new(d.id.clone(), d.text.clone()).map_err(|e| anyhow!(e))?;
        graphs.push(build_case_graph(&doc, &ner, &re, &rules, &schema).map_err(|e| anyhow!(e))?);
    }

    let out = PathBuf::from(&sec.out_dir);
    std::fs::create_dir_all(&out)?;
    let graphs_path = out.join("graphs.jsonl");
    write_jsonl(&graphs_path, &graphs)?;
    let exported = casegraph_core::pipeline::export_graph(&graphs, format, &out).map_err(|e| anyhow!(e))?;

    let mut summary = Summary::new("build-kg");
    summary.artifact(&graphs_path);
    for p in &exported {
        summary.artifact(p);
    }
    summary.metric("documents", graphs.len());
    summary.metric("nodes", graphs.iter().map(|g| g.nodes.len()).sum::<usize>());
    summary.metric("edges", graphs.iter().map(|g| g.edges.len()).sum::<usize>());
    summary.metric("warnings", graphs.iter().map(|g| g.warnings.len()).sum::<usize>());
    Ok(summary)
}

// ---------------------------------------------------------------------------
// eval

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvalSection {
    target: String,
    metrics: String,
    // ner / re
    checkpoint: String,
    corpus: String,
    schema: String,
    include_other: bool,
    // kge
    triples_dir: String,
    use_components: bool,
    filtered: bool,
    side: String,
    // graphs
    gold: String,
    predicted: String,
    // segments
    documents: String,
    rules: String,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            target: String::new(),
            metrics: String::new(),
            checkpoint: String::new(),
            corpus: String::new(),
            schema: String::new(),
            include_other: true,
            triples_dir: String::new(),
            use_components: true,
            filtered: true,
            side: "both".to_string(),
            gold: String::new(),
            predicted: String::new(),
            documents: String::new(),
            rules: String::new(),
        }
    }
}

fn cmd_eval(config: &Value) -> Result<Summary> {
    let sec: EvalSection = section(config, "eval")?;
    let mut summary = Summary::new("eval");
    summary.metric("target", &sec.target);
    match sec.target.as_str() {
        "ner" => {
            require_path(&sec.checkpoint, "eval.checkpoint")?;
            require_path(&sec.corpus, "eval.corpus")?;
            let model = load_ner_model(Path::new(&sec.checkpoint)).map_err(|e| anyhow!(e))?;
            let corpus = read_ner_corpus(Path::new(&sec.corpus)).map_err(|e| anyhow!(e))?;
            let tagset = model.tagset().clone();
            let mut gold = Vec::new();
            let mut pred = Vec::new();
            for s in &corpus {
                let ids: Vec<usize> = s
                    .labels
                    .iter()
                    .map(|l| tagset.parse_label(l).map_err(|e| anyhow!(e)))
                    .collect::<Result<_>>()?;
                gold.push(decode_mentions(&s.tokens, &ids, &tagset).map_err(|e| anyhow!(e))?);
                pred.push(model.predict_mentions(&s.tokens).map_err(|e| anyhow!(e))?);
            }
            let scores = span_f1(&gold, &pred).map_err(|e| anyhow!(e))?;
            summary.metric("precision", scores.overall.precision);
            summary.metric("recall", scores.overall.recall);
            summary.metric("f1", scores.overall.f1);
            summary.metric("per_type", &scores.per_type);
        }
        "re" => {
            require_path(&sec.checkpoint, "eval.checkpoint")?;
            require_path(&sec.corpus, "eval.corpus")?;
            let model = load_re_model(Path::new(&sec.checkpoint)).map_err(|e| anyhow!(e))?;
            let instances = read_re_corpus(Path::new(&sec.corpus)).map_err(|e| anyhow!(e))?;
            let schema = model.schema.clone();
            let mut gold = Vec::new();
            let mut pred = Vec::new();
            for inst in &instances {
                let label = inst
                    .label
                    .as_deref()
                    .ok_or_else(|| anyhow!("evaluation corpus has unlabeled instances"))?;
                gold.push(schema.class_index(label).map_err(|e| anyhow!(e))?);
                let (best, _) = model.predict(&inst.tokens, &inst.e1, &inst.e2).map_err(|e| anyhow!(e))?;
                pred.push(best);
            }
            let scores = macro_f1(&gold, &pred, &schema, sec.include_other).map_err(|e| anyhow!(e))?;
            summary.metric("macro_precision", scores.macro_precision);
            summary.metric("macro_recall", scores.macro_recall);
            summary.metric("macro_f1", scores.macro_f1);
            summary.metric("per_class", &scores.per_class);
            summary.metric("include_other", sec.include_other);
        }
        "kge" => {
            require_path(&sec.checkpoint, "eval.checkpoint")?;
            require_path(&sec.triples_dir, "eval.triples_dir")?;
            let ckpt = KgeCheckpoint::load(Path::new(&sec.checkpoint)).map_err(|e| anyhow!(e))?;
            let store = TripleStore::load_dir(Path::new(&sec.triples_dir)).map_err(|e| anyhow!(e))?;
            let side = match sec.side.as_str() {
                "both" => QuerySide::Both,
                "tail" => QuerySide::TailOnly,
                "head" => QuerySide::HeadOnly,
                other => bail!("config field 'side' must be both/tail/head, got '{other}'"),
            };
            let scorer: Box<dyn TripleScorer> = if sec.use_components && !ckpt.components.is_empty() {
                Box::new(MsreScorer { tables: &ckpt.tables, components: &ckpt.components, norm: ckpt.norm })
            } else {
                Box::new(RotateScorer { tables: &ckpt.tables, norm: ckpt.norm })
            };
            let report = eval_link_prediction(&store, scorer.as_ref(), side, sec.filtered, EvalPartition::Test)
                .map_err(|e| anyhow!(e))?;
            summary.metric("mrr", report.mrr);
            summary.metric("hits_at_1", report.hits_at_1);
            summary.metric("hits_at_3", report.hits_at_3);
            summary.metric("hits_at_10", report.hits_at_10);
            summary.metric("queries", report.query_count);
        }
        "graphs" => {
            require_path(&sec.gold, "eval.gold")?;
            require_path(&sec.predicted, "eval.predicted")?;
            let gold: Vec<CaseGraph> = read_jsonl(Path::new(&sec.gold))?;
            let mut predicted: Vec<CaseGraph> = read_jsonl(Path::new(&sec.predicted))?;
            // Align by document id.
            let index: BTreeMap<String, usize> =
                predicted.iter().enumerate().map(|(i, g)| (g.doc_id.clone(), i)).collect();
            let mut aligned = Vec::with_capacity(gold.len());
            for g in &gold {
                let Some(&i) = index.get(&g.doc_id) else {
                    bail!("predicted graphs are missing document '{}'", g.doc_id);
                };
                aligned.push(std::mem::take(&mut predicted[i]));
            }
            let scores = graph_match_f1(&gold, &aligned).map_err(|e| anyhow!(e))?;
            summary.metric("node_f1", scores.nodes.f1);
            summary.metric("edge_f1", scores.edges.f1);
            summary.metric("f1", scores.combined.f1);
        }
        "segments" => {
            require_path(&sec.documents, "eval.documents")?;
            require_path(&sec.rules, "eval.rules")?;
            require_path(&sec.gold, "eval.gold")?;
            let docs: Vec<DocRecord> = read_jsonl(Path::new(&sec.documents))?;
            let gold_records: Vec<SegmentsRecord> = read_jsonl(Path::new(&sec.gold))?;
            let rules = RuleSet::load(Path::new(&sec.rules))
                .and_then(|r| r.compile())
                .map_err(|e| anyhow!(e))?;
            let gold_by_id: BTreeMap<&str, &Vec<Segment>> =
                gold_records.iter().map(|r| (r.id.as_str(), &r.segments)).collect();
            let mut gold = Vec::new();
            let mut pred = Vec::new();
            for d in &docs {
                let Some(g) = gold_by_id.get(d.id.as_str()) else {
                    bail!("gold segments are missing document '{}'", d.id);
                };
                gold.push((*g).clone());
                let doc = CaseDocument::new(d.id.clone(), d.text.clone()).map_err(|e| anyhow!(e))?;
                pred.push(segment_document(&doc, &rules).map_err(|e| anyhow!(e))?);
            }
            let scores = segment_eval(&gold, &pred).map_err(|e| anyhow!(e))?;
            summary.metric("exact", &scores.exact);
            summary.metric("char_overlap", &scores.char_overlap);
        }
        other => bail!("config field 'eval.target' must be one of ner/re/kge/graphs/segments, got '{other}'"),
    }
    if let Some(p) = write_metrics(&sec.metrics, &summary.metrics)? {
        summary.artifact(&p);
    }
    Ok(summary)
}
