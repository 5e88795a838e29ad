//! Append-only event trace.
//!
//! Every observable thing the simulator does is recorded as a [`TraceEvent`].
//! The trace is the only evidence the checklist evaluates, so it must be
//! self-describing: one JSON object per line with a fixed field order
//! (`tick`, `seq`, `actor`, `kind`, `payload`).

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coevo::{ActionLabel, Message, MessageKind, ProgressReport, Verdict};
use crate::world::Coord;

pub const CONTROL_CENTER: &str = "control_center";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: u64,
    pub seq: u32,
    pub actor: String,
    #[serde(flatten)]
    pub event: Event,
}

impl TraceEvent {
    pub fn kind(&self) -> &'static str {
        self.event.kind()
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("trace events serialize")
    }
}

/// Where items sit. Used by load/unload events and the item ledger.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "at", content = "id", rename_all = "snake_case")]
pub enum Location {
    Storage,
    StationInput(String),
    StationWip(String),
    StationOutput(String),
    Amr(String),
    Worker(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentClass {
    Amr,
    Worker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentInfo {
    pub id: String,
    pub class: AgentClass,
    pub pos: Coord,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stations: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessStage {
    Started,
    Completed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressReason {
    Order,
    Novelty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressMode {
    /// No movement at all until resumed.
    Stop,
    /// Doubled margin, halved speed.
    Slowdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResumeReason {
    Order,
    NoveltyCleared,
    Repaired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    RunStarted {
        scenario: String,
        seed: u64,
        coevo_enabled: bool,
        agents: Vec<AgentInfo>,
        goal: BTreeMap<String, u32>,
    },
    Moved {
        from: Coord,
        to: Coord,
    },
    Halted {
        pos: Coord,
        margin: u32,
    },
    Perceived {
        visible: Vec<String>,
    },
    Predicted {
        subject: String,
        predicted: ActionLabel,
        version: u32,
    },
    Observed {
        actual: ActionLabel,
        pos: Coord,
    },
    DivergenceEvaluated {
        subject: String,
        first_tick: u64,
        last_tick: u64,
        matched: u32,
        total: u32,
        accuracy: f64,
    },
    CandidateTrained {
        subject: String,
        candidate_version: u32,
        samples: u32,
    },
    CandidateEvaluated {
        evaluation_id: u64,
        subject: String,
        candidate_version: u32,
        candidate_accuracy: f64,
        incumbent_accuracy: f64,
        verdict: Verdict,
    },
    PredictorPromoted {
        subject: String,
        evaluation_id: u64,
        from_version: u32,
        to_version: u32,
    },
    MessageSent {
        message: Message,
    },
    MessageReceived {
        message_id: u64,
        kind: MessageKind,
        sender: String,
        effect: String,
    },
    PreferenceRecorded {
        worker: String,
        preferred_margin: u32,
        preferred_supply_interval: u32,
        skill_margin: u32,
        effective_margin: u32,
        skill_interval: u32,
        effective_interval: u32,
    },
    LearningConfigured {
        window: u64,
        cadence: u64,
        holdout_fraction: f64,
        min_samples: u32,
        enabled: bool,
    },
    ProgressReported {
        report: ProgressReport,
    },
    Suppressed {
        reason: SuppressReason,
        mode: SuppressMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subject: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        accuracy: Option<f64>,
    },
    Resumed {
        reason: ResumeReason,
    },
    Processed {
        stage: ProcessStage,
        station: String,
        product: String,
        consumed: BTreeMap<String, u32>,
        duration: u32,
        skill: f64,
    },
    Loaded {
        item: String,
        qty: u32,
        from: Location,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delivery: Option<u64>,
    },
    Unloaded {
        item: String,
        qty: u32,
        to: Location,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delivery: Option<u64>,
    },
    Shipped {
        product: String,
        qty: u32,
    },
    SupplyAdjusted {
        worker: String,
        before: u32,
        after: u32,
        cause: String,
    },
    RouteReplanned {
        amr: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        station: Option<String>,
        reason: String,
        length: u32,
    },
    TakeoverAssigned {
        worker: String,
        delivery: u64,
        from_amr: String,
        item: String,
        qty: u32,
        station: String,
    },
    FailureInjected {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delivery: Option<u64>,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::RunStarted { .. } => "run_started",
            Event::Moved { .. } => "moved",
            Event::Halted { .. } => "halted",
            Event::Perceived { .. } => "perceived",
            Event::Predicted { .. } => "predicted",
            Event::Observed { .. } => "observed",
            Event::DivergenceEvaluated { .. } => "divergence_evaluated",
            Event::CandidateTrained { .. } => "candidate_trained",
            Event::CandidateEvaluated { .. } => "candidate_evaluated",
            Event::PredictorPromoted { .. } => "predictor_promoted",
            Event::MessageSent { .. } => "message_sent",
            Event::MessageReceived { .. } => "message_received",
            Event::PreferenceRecorded { .. } => "preference_recorded",
            Event::LearningConfigured { .. } => "learning_configured",
            Event::ProgressReported { .. } => "progress_reported",
            Event::Suppressed { .. } => "suppressed",
            Event::Resumed { .. } => "resumed",
            Event::Processed { .. } => "processed",
            Event::Loaded { .. } => "loaded",
            Event::Unloaded { .. } => "unloaded",
            Event::Shipped { .. } => "shipped",
            Event::SupplyAdjusted { .. } => "supply_adjusted",
            Event::RouteReplanned { .. } => "route_replanned",
            Event::TakeoverAssigned { .. } => "takeover_assigned",
            Event::FailureInjected { .. } => "failure_injected",
        }
    }

    /// Material progress, used for deadlock detection.
    pub fn is_progress(&self) -> bool {
        matches!(
            self,
            Event::Loaded { .. } | Event::Unloaded { .. } | Event::Processed { .. } | Event::Shipped { .. }
        )
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: event ({tick}, {seq}) does not follow ({prev_tick}, {prev_seq})")]
    OutOfOrder {
        line: usize,
        tick: u64,
        seq: u32,
        prev_tick: u64,
        prev_seq: u32,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Checks strict (tick, seq) ordering with seq restarting at 0 each tick.
pub fn check_order(events: &[TraceEvent]) -> Result<(), TraceError> {
    let mut prev: Option<(u64, u32)> = None;
    for (i, e) in events.iter().enumerate() {
        let ok = match prev {
            None => e.seq == 0,
            Some((pt, ps)) if e.tick == pt => e.seq == ps + 1,
            Some((pt, _)) => e.tick > pt && e.seq == 0,
        };
        if !ok {
            let (prev_tick, prev_seq) = prev.unwrap_or((0, 0));
            return Err(TraceError::OutOfOrder {
                line: i + 1,
                tick: e.tick,
                seq: e.seq,
                prev_tick,
                prev_seq,
            });
        }
        prev = Some((e.tick, e.seq));
    }
    Ok(())
}

pub fn write_trace<W: Write>(mut out: W, events: &[TraceEvent]) -> io::Result<()> {
    for e in events {
        out.write_all(e.to_line().as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn trace_to_string(events: &[TraceEvent]) -> String {
    let mut s = String::new();
    for e in events {
        s.push_str(&e.to_line());
        s.push('\n');
    }
    s
}

/// Parses and order-checks a trace document.
pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceEvent>, TraceError> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: TraceEvent = serde_json::from_str(&line).map_err(|err| TraceError::Malformed {
            line: i + 1,
            message: err.to_string(),
        })?;
        events.push(e);
    }
    check_order(&events)?;
    Ok(events)
}

/// Assigns per-tick sequence numbers while events are produced.
#[derive(Debug, Default)]
pub struct Recorder {
    tick: u64,
    next_seq: u32,
    events: Vec<TraceEvent>,
}

impl Recorder {
    pub fn new(tick: u64) -> Self {
        Recorder {
            tick,
            next_seq: 0,
            events: Vec::new(),
        }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn emit(&mut self, actor: &str, event: Event) {
        self.events.push(TraceEvent {
            tick: self.tick,
            seq: self.next_seq,
            actor: actor.to_string(),
            event,
        });
        self.next_seq += 1;
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn finish(self) -> Vec<TraceEvent> {
        self.events
    }
}
