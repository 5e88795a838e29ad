//! Co-evolution mechanisms layered on the workspace simulation: mutual
//! behavior prediction with recorded predictions and measurements, divergence
//! evaluation, gated predictor promotion, messaging, preferences, progress
//! monitoring and novelty-driven suppression.

mod action;
mod learning;
mod logs;
mod messaging;
mod novelty;
mod predictor;
mod preference;
mod progress;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::ActionLabel;
pub use learning::{
    accuracy_on, pre_evaluate, split_window, train_candidate, CandidateEvaluation, HoldoutStep,
    LearningConfig, PredictorRegistry, Promotion, Verdict, WindowSplit,
};
pub use logs::{
    evaluate_divergence, DivergenceReport, ObservationLog, ObservationRecord, PredictionLog, PredictionRecord,
};
pub use messaging::{ChangeTopic, Message, MessageBus, MessageKind, MessagePayload};
pub use novelty::{novelty_guard, slowed, NoveltyDecision, NoveltyLevel};
pub use predictor::{MarkovOrder, Predictor};
pub use preference::{apply_preference, Preference, PreferenceOutcome};
pub use progress::{monitor_progress, ProductProgress, ProgressReport, StationProgress};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoevoError {
    #[error("no joined prediction/observation pairs in window")]
    EmptyWindow,
    #[error("learning is disabled")]
    Disabled,
    #[error("insufficient data: {have} samples, need {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("holdout is empty")]
    EmptyHoldout,
    #[error("promotion not authorized: {0}")]
    NotAuthorized(String),
    #[error("{0:?} is not an AMR; learning settings only apply to AMRs")]
    NotAnAmr(String),
    #[error("invalid learning config: {0}")]
    InvalidConfig(String),
    #[error("unknown receiver {0:?}")]
    UnknownReceiver(String),
    #[error("payload of type {found:?} does not match message kind {kind:?}")]
    MalformedPayload { kind: MessageKind, found: MessageKind },
    #[error("duplicate record for {who} at tick {tick}")]
    DuplicateRecord { tick: u64, who: String },
}

/// Co-evolution section of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoevoConfig {
    pub enabled: bool,
    pub order: MarkovOrder,
    pub smoothing: f64,
    /// Ticks of history used for divergence evaluation and training.
    pub window: u64,
    /// Ticks between evaluation/training rounds.
    pub cadence: u64,
    pub holdout_fraction: f64,
    pub min_samples: u32,
    /// Novelty threshold on prediction accuracy.
    pub theta: f64,
    pub reply_latency: u64,
    pub progress_cadence: u64,
    /// Interruption notices a worker may receive per 100 ticks.
    pub interruption_budget: u32,
}

impl Default for CoevoConfig {
    fn default() -> Self {
        CoevoConfig {
            enabled: true,
            order: MarkovOrder::One,
            smoothing: 1.0,
            window: 20,
            cadence: 20,
            holdout_fraction: 0.25,
            min_samples: 12,
            theta: 0.3,
            reply_latency: 3,
            progress_cadence: 50,
            interruption_budget: 3,
        }
    }
}
