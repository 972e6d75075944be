//! Linear-chain CRF entity tagging with BIO transition constraints.

pub mod crf;
pub mod mentions;
pub mod tagset;
pub mod train;

pub use crf::{log_partition, nll, path_score, viterbi, CrfParams, NllGrads};
pub use mentions::{decode_mentions, encode_mentions, span_f1, EntityMention, Prf, SpanScores};
pub use tagset::{build_transition_mask, TagSet, TransitionMask, MASKED_SCORE};
pub use train::{
    read_ner_corpus, train_ner, write_ner_corpus, DecoderKind, LabeledSentence, NerModel,
    NerTrainReport, TrainNerConfig,
};
