use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ActionLabel, CoevoError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub tick: u64,
    pub owner: String,
    pub subject: String,
    pub predicted: ActionLabel,
    pub predictor_version: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub tick: u64,
    pub actual: ActionLabel,
}

/// Recorded predictions, one per (tick, owner, subject).
#[derive(Debug, Clone, Default)]
pub struct PredictionLog {
    by_pair: BTreeMap<(String, String), Vec<PredictionRecord>>,
}

impl PredictionLog {
    pub fn record(&mut self, rec: PredictionRecord) -> Result<(), CoevoError> {
        let list = self
            .by_pair
            .entry((rec.owner.clone(), rec.subject.clone()))
            .or_default();
        if list.last().is_some_and(|last| last.tick >= rec.tick) {
            return Err(CoevoError::DuplicateRecord {
                tick: rec.tick,
                who: format!("{}->{}", rec.owner, rec.subject),
            });
        }
        list.push(rec);
        Ok(())
    }

    /// Predictions `owner` made about `subject` with tick in `first..=last`.
    pub fn window(&self, owner: &str, subject: &str, first: u64, last: u64) -> &[PredictionRecord] {
        let Some(list) = self.by_pair.get(&(owner.to_string(), subject.to_string())) else {
            return &[];
        };
        let lo = list.partition_point(|r| r.tick < first);
        let hi = list.partition_point(|r| r.tick <= last);
        &list[lo..hi.max(lo)]
    }

    pub fn len(&self) -> usize {
        self.by_pair.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Recorded actual actions, one per (tick, subject).
#[derive(Debug, Clone, Default)]
pub struct ObservationLog {
    by_subject: BTreeMap<String, Vec<ObservationRecord>>,
}

impl ObservationLog {
    pub fn record(&mut self, subject: &str, rec: ObservationRecord) -> Result<(), CoevoError> {
        let list = self.by_subject.entry(subject.to_string()).or_default();
        if list.last().is_some_and(|last| last.tick >= rec.tick) {
            return Err(CoevoError::DuplicateRecord {
                tick: rec.tick,
                who: subject.to_string(),
            });
        }
        list.push(rec);
        Ok(())
    }

    pub fn window(&self, subject: &str, first: u64, last: u64) -> &[ObservationRecord] {
        let Some(list) = self.by_subject.get(subject) else {
            return &[];
        };
        let lo = list.partition_point(|r| r.tick < first);
        let hi = list.partition_point(|r| r.tick <= last);
        &list[lo..hi.max(lo)]
    }

    pub fn at(&self, subject: &str, tick: u64) -> Option<ActionLabel> {
        self.window(subject, tick, tick).first().map(|r| r.actual)
    }

    /// Most recent action strictly before `tick`.
    pub fn last_before(&self, subject: &str, tick: u64) -> Option<ActionLabel> {
        let list = self.by_subject.get(subject)?;
        let idx = list.partition_point(|r| r.tick < tick);
        idx.checked_sub(1).map(|i| list[i].actual)
    }

    pub fn subjects(&self) -> impl Iterator<Item = &str> {
        self.by_subject.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub owner: String,
    pub subject: String,
    pub first_tick: u64,
    pub last_tick: u64,
    pub matched: u32,
    pub total: u32,
    pub accuracy: f64,
}

/// Joins predictions and observations on tick inside `first..=last` and
/// reports the fraction that matched.
pub fn evaluate_divergence(
    predictions: &PredictionLog,
    observations: &ObservationLog,
    owner: &str,
    subject: &str,
    first: u64,
    last: u64,
) -> Result<DivergenceReport, CoevoError> {
    let obs = observations.window(subject, first, last);
    let mut matched = 0u32;
    let mut total = 0u32;
    let mut j = 0;
    for p in predictions.window(owner, subject, first, last) {
        while j < obs.len() && obs[j].tick < p.tick {
            j += 1;
        }
        if j < obs.len() && obs[j].tick == p.tick {
            total += 1;
            if obs[j].actual == p.predicted {
                matched += 1;
            }
        }
    }
    if total == 0 {
        return Err(CoevoError::EmptyWindow);
    }
    Ok(DivergenceReport {
        owner: owner.to_string(),
        subject: subject.to_string(),
        first_tick: first,
        last_tick: last,
        matched,
        total,
        accuracy: f64::from(matched) / f64::from(total),
    })
}
