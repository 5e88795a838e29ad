//! Evaluation of the sixteen guideline metrics against a pair of FRAM models
//! and a simulation trace.
//!
//! Confirmed (C) and applicable-and-employed (AE) metrics are backed by
//! executable predicates over the trace; AE additionally requires that the
//! enabling mechanism was actually exercised. Applicable-not-employed (AN)
//! and not-applicable (N/A) metrics are declared and carry a note only.

mod predicates;
mod registry;
mod render;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::{self, Execution};
use crate::fram::FramModel;
use crate::trace::{check_order, Event, TraceError, TraceEvent};

pub use predicates::TraceIndex;
pub use registry::{CheckParams, Registry};
pub use render::{render_report, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    GuidelinesHai,
    SharedControl,
    HrcMl,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::GuidelinesHai, Source::SharedControl, Source::HrcMl];

    pub fn title(self) -> &'static str {
        match self {
            Source::GuidelinesHai => "Guidelines for Human-AI Interaction",
            Source::SharedControl => "Shared Control in Human Robot Teaming",
            Source::HrcMl => "Human-Robot Collaboration and Machine Learning",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Status {
    /// Confirmed met.
    C,
    /// Applicable and employed.
    AE,
    /// Applicable, not employed.
    AN,
    #[serde(rename = "N/A")]
    NA,
}

impl Status {
    pub const ALL: [Status; 4] = [Status::C, Status::AE, Status::AN, Status::NA];

    pub fn as_str(self) -> &'static str {
        match self {
            Status::C => "C",
            Status::AE => "AE",
            Status::AN => "AN",
            Status::NA => "N/A",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    TracePredicate,
    /// Only the presence of the enabling functions in the improved model.
    ModelPredicate,
    /// First versus final quarter of the run.
    Statistical,
    Declared,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metric {
    pub id: String,
    pub source: Source,
    pub name: String,
    pub expected_status: Status,
    pub check_kind: CheckKind,
    /// Names of the model functions the metric relies on.
    #[serde(default)]
    pub enablers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub metric: String,
    pub satisfied: bool,
    /// Trace event references (`tick:seq`) or model elements (`model:<id>`).
    pub witness: Vec<String>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub id: String,
    pub source: Source,
    pub name: String,
    pub expected: Status,
    pub status: Status,
    pub evidence: Evidence,
}

impl MetricResult {
    pub fn matches(&self) -> bool {
        self.status == self.expected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub results: Vec<MetricResult>,
    pub summary: BTreeMap<Status, u32>,
    pub note: String,
}

/// Fixed note on what the checklist does not cover.
pub const SOCIAL_NOTE: &str =
    "Social-level goals (ethics, well-being, workplace culture) are outside the scope of these \
system-level metrics and are not assessed.";

impl MetricReport {
    pub fn empty() -> MetricReport {
        MetricReport {
            scenario: None,
            seed: None,
            results: Vec::new(),
            summary: BTreeMap::new(),
            note: SOCIAL_NOTE.into(),
        }
    }

    pub fn result(&self, id: &str) -> Option<&MetricResult> {
        self.results.iter().find(|r| r.id == id)
    }

    /// True when every metric that is not declared got its expected status.
    pub fn all_match(&self, registry: &Registry) -> bool {
        self.results.iter().all(|r| {
            let declared = registry
                .metric(&r.id)
                .is_some_and(|m| m.check_kind == CheckKind::Declared);
            declared || r.matches()
        })
    }
}

#[derive(Debug, Error)]
pub enum ChecklistError {
    #[error("malformed trace: {0}")]
    MalformedTrace(#[from] TraceError),
    #[error("cannot read registry: {0}")]
    Registry(String),
}

/// Evaluates every registry metric. Pure in its inputs.
pub fn evaluate(
    initial: &FramModel,
    improved: &FramModel,
    trace: &[TraceEvent],
    registry: &Registry,
) -> Result<MetricReport, ChecklistError> {
    evaluate_with(initial, improved, trace, registry, Execution::default())
}

/// [`evaluate`] with an explicit strategy for the per-metric fan-out.
pub fn evaluate_with(
    initial: &FramModel,
    improved: &FramModel,
    trace: &[TraceEvent],
    registry: &Registry,
    exec: Execution,
) -> Result<MetricReport, ChecklistError> {
    check_order(trace)?;
    let index = TraceIndex::new(trace);
    let results = batch::map(exec, &registry.metrics, |m| {
        evaluate_metric(m, initial, improved, &index, &registry.params)
    });

    let mut summary = BTreeMap::new();
    for r in &results {
        *summary.entry(r.status).or_insert(0) += 1;
    }
    let (scenario, seed) = trace
        .iter()
        .find_map(|e| match &e.event {
            Event::RunStarted { scenario, seed, .. } => Some((Some(scenario.clone()), Some(*seed))),
            _ => None,
        })
        .unwrap_or((None, None));
    Ok(MetricReport {
        scenario,
        seed,
        results,
        summary,
        note: SOCIAL_NOTE.into(),
    })
}

fn evaluate_metric(
    m: &Metric,
    initial: &FramModel,
    improved: &FramModel,
    index: &TraceIndex,
    params: &CheckParams,
) -> MetricResult {
    let result = |status: Status, evidence: Evidence| MetricResult {
        id: m.id.clone(),
        source: m.source,
        name: m.name.clone(),
        expected: m.expected_status,
        status,
        evidence,
    };
    if m.check_kind == CheckKind::Declared {
        let note = match m.expected_status {
            Status::NA => {
                "declared not applicable: the model is a demonstration and does not ask for this improvement"
            }
            _ => "declared applicable but not employed: depends on the physical implementation",
        };
        return result(
            m.expected_status,
            Evidence {
                metric: m.id.clone(),
                satisfied: false,
                witness: Vec::new(),
                note: note.into(),
            },
        );
    }

    let mut model_witness = Vec::new();
    let mut missing = Vec::new();
    for name in &m.enablers {
        match improved.function_by_name(name) {
            Some(f) => model_witness.push(format!("model:{}", f.id)),
            None => missing.push(name.as_str()),
        }
    }
    let added = m.enablers.iter().all(|n| initial.function_by_name(n).is_none());
    if !missing.is_empty() {
        let ev = Evidence {
            metric: m.id.clone(),
            satisfied: false,
            witness: Vec::new(),
            note: format!("model lacks {}", missing.join(", ")),
        };
        return result(Status::AN, ev);
    }
    let mut ev = match m.check_kind {
        CheckKind::ModelPredicate => Evidence {
            metric: m.id.clone(),
            satisfied: true,
            witness: Vec::new(),
            note: "enabling functions present".into(),
        },
        _ => predicates::check(&m.id, index, params),
    };
    if ev.satisfied {
        ev.witness.extend(model_witness);
        if !added {
            ev.note.push_str("; enablers already in the initial model");
        }
    }
    let status = match (m.expected_status, ev.satisfied) {
        (Status::C, true) => Status::C,
        (Status::C, false) if predicates::mechanism_exercised(&m.id, index) => Status::AE,
        (Status::C, false) => Status::AN,
        (_, true) => Status::AE,
        (_, false) => Status::AN,
    };
    result(status, ev)
}
