//! Multitask semantic relation extraction: feature pooling and fusion,
//! type-aware classification, and the translational-embedding auxiliary
//! loss.

pub mod candidates;
pub mod head;
pub mod loss;
pub mod metrics;
pub mod schema;
pub mod train;

pub use candidates::{generate_candidates, CandidateMode, GoldTriple};
pub use head::{classify, entity_feature, fuse, sentence_feature, RelationHeadParams};
pub use loss::{
    ce_loss, ce_loss_mean, l1_translation_distance, sample_fake_relation, total_loss,
    translation_margin_loss,
    MultitaskLossConfig,
};
pub use metrics::{macro_f1, MacroScores};
pub use schema::{
    read_re_corpus, write_re_corpus, EntitySlot, EntityTypeDef, RelationDef, RelationInstance,
    RelationSchema,
};
pub use train::{train_re, PreparedInstance, ReModel, ReTrainReport, TrainReConfig};
