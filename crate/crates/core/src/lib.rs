//! Human-robot collaboration workspace simulator with FRAM modeling,
//! co-evolution mechanisms and a guideline checklist evaluated from traces.

pub mod batch;
pub mod checklist;
pub mod cli;
pub mod coevo;
pub mod fram;
pub mod trace;
pub mod world;
