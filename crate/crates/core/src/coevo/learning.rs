//! Gated learning: train a next-generation predictor on a recent window,
//! score it against the incumbent on a chronological holdout, and only swap
//! it in when it is strictly better.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ActionLabel, CoevoError, ObservationLog, Predictor};
use crate::trace::AgentClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningConfig {
    pub owner: String,
    pub window: u64,
    pub cadence: u64,
    pub holdout_fraction: f64,
    pub min_samples: u32,
    pub enabled: bool,
}

impl LearningConfig {
    /// Learning settings only attach to AMRs.
    pub fn configure(
        owner: &str,
        class: AgentClass,
        window: u64,
        cadence: u64,
        holdout_fraction: f64,
        min_samples: u32,
        enabled: bool,
    ) -> Result<Self, CoevoError> {
        if class != AgentClass::Amr {
            return Err(CoevoError::NotAnAmr(owner.to_string()));
        }
        if window == 0 || cadence == 0 || !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
            return Err(CoevoError::InvalidConfig(format!(
                "window={window} cadence={cadence} holdout_fraction={holdout_fraction}"
            )));
        }
        Ok(LearningConfig {
            owner: owner.to_string(),
            window,
            cadence,
            holdout_fraction,
            min_samples,
            enabled,
        })
    }
}

/// One held-out step: the context seen before it and what actually happened.
pub type HoldoutStep = (Option<ActionLabel>, ActionLabel);

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSplit {
    pub train: Vec<ActionLabel>,
    pub holdout: Vec<HoldoutStep>,
}

/// Splits the subject's actions in the window ending at `now` into a
/// chronologically first training part and a trailing holdout.
pub fn split_window(
    observations: &ObservationLog,
    subject: &str,
    config: &LearningConfig,
    now: u64,
) -> Result<WindowSplit, CoevoError> {
    let first = (now + 1).saturating_sub(config.window);
    let seq: Vec<ActionLabel> = observations
        .window(subject, first, now)
        .iter()
        .map(|r| r.actual)
        .collect();
    let need = config.min_samples.max(2) as usize;
    if seq.len() < need {
        return Err(CoevoError::InsufficientData {
            have: seq.len(),
            need,
        });
    }
    let n_train = ((seq.len() as f64) * (1.0 - config.holdout_fraction)).floor() as usize;
    if n_train == 0 {
        return Err(CoevoError::InsufficientData {
            have: seq.len(),
            need,
        });
    }
    let holdout = (n_train..seq.len()).map(|i| (Some(seq[i - 1]), seq[i])).collect();
    Ok(WindowSplit {
        train: seq[..n_train].to_vec(),
        holdout,
    })
}

/// Trains the next generation from the training part of the split.
pub fn train_candidate(
    split: &WindowSplit,
    config: &LearningConfig,
    incumbent: &Predictor,
) -> Result<Predictor, CoevoError> {
    if !config.enabled {
        return Err(CoevoError::Disabled);
    }
    if split.train.is_empty() {
        return Err(CoevoError::InsufficientData {
            have: 0,
            need: config.min_samples as usize,
        });
    }
    Ok(Predictor::fit(incumbent, incumbent.version + 1, &split.train))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEvaluation {
    pub id: u64,
    pub owner: String,
    pub subject: String,
    pub candidate_version: u32,
    pub candidate_accuracy: f64,
    pub incumbent_accuracy: f64,
    pub verdict: Verdict,
}

pub fn accuracy_on(predictor: &Predictor, holdout: &[HoldoutStep]) -> f64 {
    let hits = holdout
        .iter()
        .filter(|(ctx, actual)| predictor.predict(*ctx) == *actual)
        .count();
    hits as f64 / holdout.len() as f64
}

/// Replays the holdout for both predictors on identical contexts. Passes
/// only on strict improvement; ties keep the incumbent.
pub fn pre_evaluate(
    id: u64,
    candidate: &Predictor,
    incumbent: &Predictor,
    holdout: &[HoldoutStep],
) -> Result<CandidateEvaluation, CoevoError> {
    if holdout.is_empty() {
        return Err(CoevoError::EmptyHoldout);
    }
    let candidate_accuracy = accuracy_on(candidate, holdout);
    let incumbent_accuracy = accuracy_on(incumbent, holdout);
    Ok(CandidateEvaluation {
        id,
        owner: candidate.owner.clone(),
        subject: candidate.subject.clone(),
        candidate_version: candidate.version,
        candidate_accuracy,
        incumbent_accuracy,
        verdict: if candidate_accuracy > incumbent_accuracy {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Promotion {
    pub from_version: u32,
    pub to_version: u32,
    pub evaluation_id: u64,
}

/// Live predictors keyed by (owner, subject).
#[derive(Debug, Clone, Default)]
pub struct PredictorRegistry {
    predictors: BTreeMap<(String, String), Predictor>,
}

impl PredictorRegistry {
    pub fn get(&self, owner: &str, subject: &str) -> Option<&Predictor> {
        self.predictors.get(&(owner.to_string(), subject.to_string()))
    }

    pub fn get_mut(&mut self, owner: &str, subject: &str) -> Option<&mut Predictor> {
        self.predictors.get_mut(&(owner.to_string(), subject.to_string()))
    }

    /// Returns the predictor for the pair, creating a blank version-1 one.
    pub fn ensure(&mut self, template: Predictor) -> &mut Predictor {
        self.predictors
            .entry((template.owner.clone(), template.subject.clone()))
            .or_insert(template)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Predictor> {
        self.predictors.values()
    }

    /// Swaps the incumbent for `candidate` if `evaluation` authorizes it.
    /// On refusal the registry is untouched.
    pub fn promote(
        &mut self,
        evaluation: Option<&CandidateEvaluation>,
        candidate: Predictor,
    ) -> Result<Promotion, CoevoError> {
        let eval = evaluation.ok_or_else(|| CoevoError::NotAuthorized("no evaluation".into()))?;
        if eval.verdict != Verdict::Pass {
            return Err(CoevoError::NotAuthorized(format!(
                "evaluation {} failed ({:.3} vs {:.3})",
                eval.id, eval.candidate_accuracy, eval.incumbent_accuracy
            )));
        }
        if eval.candidate_version != candidate.version
            || eval.owner != candidate.owner
            || eval.subject != candidate.subject
        {
            return Err(CoevoError::NotAuthorized(format!(
                "evaluation {} is for {}->{} v{}, not {}->{} v{}",
                eval.id,
                eval.owner,
                eval.subject,
                eval.candidate_version,
                candidate.owner,
                candidate.subject,
                candidate.version
            )));
        }
        let key = (candidate.owner.clone(), candidate.subject.clone());
        let from_version = self.predictors.get(&key).map_or(0, |p| p.version);
        if candidate.version <= from_version {
            return Err(CoevoError::NotAuthorized(format!(
                "candidate v{} does not advance incumbent v{from_version}",
                candidate.version
            )));
        }
        let to_version = candidate.version;
        self.predictors.insert(key, candidate);
        Ok(Promotion {
            from_version,
            to_version,
            evaluation_id: eval.id,
        })
    }
}
