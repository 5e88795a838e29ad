use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::Coord;
use crate::coevo::{ActionLabel, NoveltyLevel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lot {
    pub item: String,
    pub qty: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductSpec {
    pub id: String,
    pub bom: BTreeMap<String, u32>,
    pub base_process_ticks: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerState {
    Idle,
    Moving,
    Processing,
    Transporting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmrState {
    Idle,
    Moving,
    Loading,
    Unloading,
    Halted,
    Suppressed,
    Failed,
}

/// A fixed action pattern, optionally switching to a second pattern at a
/// given tick. The cursor only advances when the action was carried out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    pub cycle: Vec<ActionLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_tick: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub then: Vec<ActionLabel>,
}

impl Script {
    pub fn action(&self, tick: u64, cursor: usize) -> ActionLabel {
        let pattern = match self.switch_tick {
            Some(t) if tick >= t && !self.then.is_empty() => &self.then,
            _ => &self.cycle,
        };
        pattern[cursor % pattern.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferenceSpec {
    pub margin: u32,
    pub supply_interval: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Purpose {
    Process(String),
    PickProduct(String),
    Ship,
    Wait,
    TakeoverPickup(u64),
    TakeoverDrop(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum WorkerTask {
    None,
    GoTo {
        dest: Coord,
        purpose: Purpose,
        path: Vec<Coord>,
    },
    Processing {
        station: String,
        remaining: u32,
        duration: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Worker {
    pub id: String,
    pub pos: Coord,
    pub skill: f64,
    pub perception_range: u32,
    pub stations: Vec<String>,
    pub script: Option<Script>,
    pub preference: Option<PreferenceSpec>,
    pub last_action: ActionLabel,
    pub(crate) task: WorkerTask,
    pub(crate) blocked_for: u32,
    pub(crate) script_cursor: usize,
    /// Recent process durations relative to the base duration.
    pub(crate) recent_ratios: VecDeque<f64>,
    /// Latest plan summaries announced by other agents.
    pub expectations: BTreeMap<String, String>,
}

impl Worker {
    pub fn state(&self) -> WorkerState {
        match &self.task {
            WorkerTask::Processing { .. } => WorkerState::Processing,
            WorkerTask::GoTo {
                purpose: Purpose::TakeoverPickup(_) | Purpose::TakeoverDrop(_),
                ..
            } => WorkerState::Transporting,
            WorkerTask::GoTo { dest, .. } if *dest != self.pos => WorkerState::Moving,
            _ => WorkerState::Idle,
        }
    }

    pub fn target(&self) -> Option<Coord> {
        match &self.task {
            WorkerTask::GoTo { dest, .. } => Some(*dest),
            _ => None,
        }
    }

    /// Free to accept a takeover assignment.
    pub fn is_available(&self) -> bool {
        self.script.is_none()
            && matches!(
                &self.task,
                WorkerTask::None
                    | WorkerTask::GoTo {
                        purpose: Purpose::Wait,
                        ..
                    }
            )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Amr {
    pub id: String,
    pub pos: Coord,
    pub home: Coord,
    pub perception_range: u32,
    pub route: Vec<Coord>,
    pub delivery: Option<u64>,
    pub failed: bool,
    pub suppressed: bool,
    pub novelty: NoveltyLevel,
    pub last_action: ActionLabel,
    /// Interval and margin used on the last move decision.
    pub speed_interval: u32,
    pub safety_margin: u32,
    pub(crate) cooldown: u32,
    pub(crate) halted_for: u32,
    pub(crate) halted_now: bool,
}

impl Amr {
    pub fn new(id: &str, pos: Coord, perception_range: u32, interval: u32, margin: u32) -> Self {
        Amr {
            id: id.to_string(),
            pos,
            home: pos,
            perception_range,
            route: Vec::new(),
            delivery: None,
            failed: false,
            suppressed: false,
            novelty: NoveltyLevel::Normal,
            last_action: ActionLabel::Stay,
            speed_interval: interval,
            safety_margin: margin,
            cooldown: 0,
            halted_for: 0,
            halted_now: false,
        }
    }

    /// Whether the AMR may act at all this tick.
    pub fn is_active(&self) -> bool {
        !self.failed && !self.suppressed && self.novelty != NoveltyLevel::Stop
    }

    pub fn state(&self) -> AmrState {
        if self.failed {
            AmrState::Failed
        } else if !self.is_active() {
            AmrState::Suppressed
        } else if self.halted_now {
            AmrState::Halted
        } else if self.last_action == ActionLabel::Pick {
            AmrState::Loading
        } else if self.last_action == ActionLabel::Place {
            AmrState::Unloading
        } else if !self.route.is_empty() {
            AmrState::Moving
        } else {
            AmrState::Idle
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "from", content = "station", rename_all = "snake_case")]
pub enum Source {
    Storage,
    Station(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryStage {
    Pending,
    ToPickup,
    Carrying,
    Stranded,
    Takeover,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub id: u64,
    pub item: String,
    pub qty: u32,
    pub source: Source,
    pub dest: String,
    pub stage: DeliveryStage,
    pub carrier: Option<String>,
    pub pickup: Option<Coord>,
}

impl Delivery {
    pub fn is_open(&self) -> bool {
        self.stage != DeliveryStage::Done
    }
}
