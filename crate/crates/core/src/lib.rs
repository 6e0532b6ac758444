//! Open-set identification over streams of face embeddings.
//!
//! Every enrolled identity owns an ensemble of linear SVMs. A query sequence
//! is scored by each ensemble (median over classifiers, then over frames),
//! and a Weibull fit on the non-match tail of those scores decides between
//! the best identity and UNKNOWN. Recognised sequences train new classifiers
//! from their hardest frames; ensembles are capped by pruning the least
//! diverse member, and periodic self-healing drops classifiers whose stored
//! positives no longer map back to their own identity.

pub mod adaptation;
pub mod config;
pub mod error;
pub mod evt;
pub mod harness;
pub mod scoring;
pub mod snapshot;
pub mod state;
pub mod svm;
pub mod types;

pub use adaptation::{
    decide, diversity, draw_negatives, enforce_limit, evaluation_pool, process_query, select_hardest_frames,
    self_heal, self_update, DiversityReport, HealReport, LimitOutcome, UpdateReport,
};
pub use error::{Error, Result};
pub use evt::{fit_weibull, recognition_decision, transform_scores, weibull_survival, WeibullParams};
pub use scoring::{frame_score, median, score_all, sequence_score};
pub use state::SystemState;
pub use svm::{decision_value, train_svm, SvmConfig, SvmFit};
pub use types::{
    validate_vector, ClassifierUnit, DecisionOutcome, Ensemble, FeatureVector, FrameSequence, HyperParams,
    Identity, Label, LinearModel, ScoreVector,
};
