//! Rotational knowledge-graph embeddings with multi-semantic relation
//! components: RotatE training, a TransE baseline, angle extraction,
//! PCA + Mean-Shift component derivation, max-component completion,
//! relation-pattern checks, and filtered link-prediction evaluation.

pub mod angles;
pub mod components;
pub mod eval;
pub mod patterns;
pub mod rotate;
pub mod store;
pub mod transe;
pub mod train;

pub use angles::{collect_relation_angles, relation_angle_vector, AngleVectorSet};
pub use components::{
    derive_components, msre_score, msre_score_tables, AngleAveraging, ComponentConfig,
    SemanticComponentSet,
};
pub use eval::{
    complete, eval_link_prediction, CompletionQuery, EvalPartition, LinkPredictionReport,
    MsreScorer, QuerySide, RotateScorer, TripleScorer,
};
pub use patterns::{check_pattern, Pattern, PatternVerdict};
pub use rotate::{rotate_apply, rotate_score, ComplexEmbedding, KgeTables, Norm, PhaseVector};
pub use store::{parse_triple_file, write_triple_file, TripleStore};
pub use transe::{train_transe, transe_loss, TranseScorer, TranseTables};
pub use train::{
    rotate_loss, rotate_loss_and_grads, sample_negatives, train_rotate, KgeGrads, KgeTrainConfig,
    KgeTrainReport, TrainingExample,
};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const KGE_CHECKPOINT_VERSION: &str = "casegraph-kge-v1";

/// Persistent embedding checkpoint: dimensions, names, entity reals,
/// relation phases, and any derived component sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KgeCheckpoint {
    pub version: String,
    pub dim: usize,
    pub entity_names: Vec<String>,
    pub relation_names: Vec<String>,
    pub tables: KgeTables,
    pub components: BTreeMap<usize, SemanticComponentSet>,
    pub norm: Norm,
}

impl KgeCheckpoint {
    pub fn new(store: &TripleStore, tables: KgeTables, norm: Norm) -> Self {
        KgeCheckpoint {
            version: KGE_CHECKPOINT_VERSION.to_string(),
            dim: tables.dim,
            entity_names: (0..store.entity_count()).map(|i| store.entity_name(i).to_string()).collect(),
            relation_names: (0..store.relation_count()).map(|i| store.relation_name(i).to_string()).collect(),
            tables,
            components: BTreeMap::new(),
            norm,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<KgeCheckpoint> {
        let ckpt: KgeCheckpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ckpt.version != KGE_CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "checkpoint version '{}' unsupported (expected '{KGE_CHECKPOINT_VERSION}')",
                ckpt.version
            )));
        }
        Ok(ckpt)
    }
}
