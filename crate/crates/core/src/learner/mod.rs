//! Adaptive learning, inference, outcome triage and the training loop.

mod adaptive;
mod config;
pub(crate) mod inference;
mod train;

pub use adaptive::adaptive_fit_epoch;
pub use config::{Mode, TrainConfig};
pub use inference::{predict, predict_all, top_k, triage, triage_all, Outcome, OutcomeTriage, TriageCounts};
pub use train::{
    effective_dimensionality, train, train_with_observer, IterationRecord, TrainReport, Trained,
};
