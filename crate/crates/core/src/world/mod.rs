//! Deterministic grid simulation of a small assembly line: stations,
//! workers, AMRs (autonomous mobile robots) and a control center that
//! dispatches deliveries, all advanced in discrete ticks.

mod control;
mod entities;
mod grid;
mod ledger;
mod scenario;
mod sim;
mod state;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::trace::Location;

pub use control::Instruction;
pub use entities::{
    Amr, AmrState, Delivery, DeliveryStage, Lot, PreferenceSpec, ProductSpec, Script, Source, Worker,
    WorkerState,
};
pub(crate) use entities::{Purpose, WorkerTask};
pub use grid::{line_cells, line_of_sight, plan_route, Cell, Coord, Direction, Station, Workspace};
pub use ledger::ItemLedger;
pub use scenario::{
    AmrSpec, Constants, FailureSpec, GridSpec, ObstacleEvent, Scenario, ScriptedMessage, WorkerSpec,
};
pub use sim::{run, RunOutcome, RunResult};
pub use state::{adapt_to_skill, process_duration, CoevoState, Percept, VisibleEntity, WorldState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("cell {0} is out of bounds")]
    OutOfBounds(Coord),
    #[error("cell {0} is not traversable")]
    NotTraversable(Coord),
    #[error("no route from {from} to {to}")]
    NoRoute { from: Coord, to: Coord },
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("unknown station {0:?}")]
    UnknownStation(String),
    #[error("skill {0} is outside [0, 1]")]
    SkillOutOfRange(f64),
    #[error("station {station:?} is missing components {missing:?}")]
    MissingComponents {
        station: String,
        missing: BTreeMap<String, u32>,
    },
    #[error("worker {worker:?} is not at the workbench of {station:?}")]
    NotAtWorkbench { worker: String, station: String },
    #[error("{location:?} holds {have} of {item:?}, need {need}")]
    InsufficientItems {
        location: Location,
        item: String,
        have: u32,
        need: u32,
    },
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("scenario parse error at line {line}, column {column}: {message}")]
    ScenarioParse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}
