//! Pairwise asynchronous HMMs, group HMMs, correlation and training.

pub mod ahmm;
pub mod corpus;
pub mod correlation;
pub mod hmm;
pub mod model;
pub mod topology;
pub mod train;

pub use ahmm::{ahmm_forward, AhmmForward, ForwardOptions, Lattice};
pub use corpus::{train_bank, ActivityReport, BankConfig, CorpusConfig, FitSummary, TrainingCorpus};
pub use correlation::{
    asymmetry_check, correlation, pair_streams, window_kinematics, CorrelationProfile, PreparedBank,
};
pub use hmm::sync_forward;
pub use model::{
    ActivityModel, ActivityModelBank, AlignmentMode, AsyncModel, PreparedAsync, SyncModel, Thresholds,
    ADVANCE_MIN, DEFAULT_DELTA_T, DEFAULT_WINDOW,
};
pub use topology::Topology;
pub use train::{train_activity_model, train_group_model, PairSegment, TrainConfig, Trained};

use thiserror::Error;

use crate::gmm::GmmError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeqError {
    #[error("empty observation sequence")]
    EmptySequence,
    #[error("observation dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no model for activity {0}")]
    MissingModel(String),
    #[error("no training data for {0}")]
    NoTrainingData(String),
    #[error(transparent)]
    Gmm(#[from] GmmError),
}
