//! `casegraph`: build and complete case knowledge graphs from the command
//! line. Every command reads one JSON configuration file; scalar fields
//! can be overridden with `--set key.path=value`. Each run prints a
//! machine-readable JSON summary and exits non-zero on failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "casegraph", version, about = "Case knowledge graph construction and completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a scalar config field, e.g. --set train_ner.epochs=30.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic judgment corpus with its gold annotations.
    GenCorpus(RunArgs),
    /// Train the CRF entity tagger.
    TrainNer(RunArgs),
    /// Train the multitask relation extractor.
    TrainRe(RunArgs),
    /// Train rotational knowledge-graph embeddings.
    TrainKge(RunArgs),
    /// Derive multi-semantic relation components from a trained embedding.
    DeriveComponents(RunArgs),
    /// Rank completion candidates for an open triple slot.
    Complete(RunArgs),
    /// Build case graphs for a batch of documents.
    BuildKg(RunArgs),
    /// Evaluate models, graphs, or segmenters.
    Eval(RunArgs),
}

impl Command {
    fn name_and_args(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::GenCorpus(a) => ("gen-corpus", a),
            Command::TrainNer(a) => ("train-ner", a),
            Command::TrainRe(a) => ("train-re", a),
            Command::TrainKge(a) => ("train-kge", a),
            Command::DeriveComponents(a) => ("derive-components", a),
            Command::Complete(a) => ("complete", a),
            Command::BuildKg(a) => ("build-kg", a),
            Command::Eval(a) => ("eval", a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.name_and_args();
    let result = config::load_config(&args.config, &args.set).and_then(|cfg| commands::run(name, &cfg));
    match result {
        Ok(summary) => {
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(err) => {
            let failure = serde_json::json!({
                "command": name,
                "status": "error",
                "error": format!("{err:#}"),
            });
            println!("{failure}");
            ExitCode::FAILURE
        }
    }
}
