use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ActionLabel;

/// Markov order of a behavior predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum MarkovOrder {
    Zero,
    One,
}

impl TryFrom<u8> for MarkovOrder {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(MarkovOrder::Zero),
            1 => Ok(MarkovOrder::One),
            other => Err(format!("unsupported Markov order {other} (expected 0 or 1)")),
        }
    }
}

impl From<MarkovOrder> for u8 {
    fn from(o: MarkovOrder) -> u8 {
        match o {
            MarkovOrder::Zero => 0,
            MarkovOrder::One => 1,
        }
    }
}

type Counts = [u32; ActionLabel::COUNT];

/// Additively smoothed next-action model one agent keeps about another.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub owner: String,
    pub subject: String,
    pub version: u32,
    pub order: MarkovOrder,
    pub smoothing: f64,
    marginal: Counts,
    transitions: BTreeMap<ActionLabel, Counts>,
}

impl Predictor {
    pub fn new(owner: &str, subject: &str, order: MarkovOrder, smoothing: f64) -> Self {
        assert!(smoothing > 0.0, "smoothing must be positive");
        Predictor {
            owner: owner.to_string(),
            subject: subject.to_string(),
            version: 1,
            order,
            smoothing,
            marginal: [0; ActionLabel::COUNT],
            transitions: BTreeMap::new(),
        }
    }

    /// Builds a predictor from a contiguous, chronologically ordered action
    /// sequence of the subject.
    pub fn fit(template: &Predictor, version: u32, sequence: &[ActionLabel]) -> Self {
        let mut p = Predictor::new(
            &template.owner,
            &template.subject,
            template.order,
            template.smoothing,
        );
        p.version = version;
        let mut prev = None;
        for &a in sequence {
            p.observe(prev, a);
            prev = Some(a);
        }
        p
    }

    pub fn observe(&mut self, context: Option<ActionLabel>, actual: ActionLabel) {
        self.marginal[actual.index()] += 1;
        if let (MarkovOrder::One, Some(ctx)) = (self.order, context) {
            self.transitions.entry(ctx).or_insert([0; ActionLabel::COUNT])[actual.index()] += 1;
        }
    }

    /// Counts used for `context`; unseen contexts fall back to the marginal.
    pub fn counts(&self, context: Option<ActionLabel>) -> &Counts {
        match (self.order, context) {
            (MarkovOrder::One, Some(ctx)) => self.transitions.get(&ctx).unwrap_or(&self.marginal),
            _ => &self.marginal,
        }
    }

    pub fn transition_counts(&self) -> &BTreeMap<ActionLabel, Counts> {
        &self.transitions
    }

    pub fn marginal_counts(&self) -> &Counts {
        &self.marginal
    }

    pub fn distribution(&self, context: Option<ActionLabel>) -> [f64; ActionLabel::COUNT] {
        let counts = self.counts(context);
        let total: u32 = counts.iter().sum();
        let denom = f64::from(total) + self.smoothing * ActionLabel::COUNT as f64;
        let mut dist = [0.0; ActionLabel::COUNT];
        for (d, &c) in dist.iter_mut().zip(counts) {
            *d = (f64::from(c) + self.smoothing) / denom;
        }
        dist
    }

    /// Most likely next action; ties go to the earliest label.
    pub fn predict(&self, context: Option<ActionLabel>) -> ActionLabel {
        // Smoothing is uniform, so the argmax over raw counts is the same.
        let counts = self.counts(context);
        let mut best = 0;
        for i in 1..ActionLabel::COUNT {
            if counts[i] > counts[best] {
                best = i;
            }
        }
        ActionLabel::from_index(best)
    }
}
