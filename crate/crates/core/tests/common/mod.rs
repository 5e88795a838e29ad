#![allow(dead_code)]

use std::path::PathBuf;

use hrc_coevo::world::{ObstacleEvent, Scenario};

pub fn manifest_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

pub fn fixture(name: &str) -> Scenario {
    Scenario::load(&manifest_path(&format!("tests/fixtures/{name}.json"))).expect("fixture parses")
}

/// The tiny fixture with the cells around the station port walled off
/// right after the start.
pub fn unreachable_port() -> Scenario {
    let mut s = fixture("tiny");
    s.name = "walled".into();
    for c in [[4, 0], [6, 0], [5, 1]] {
        s.obstacle_events.push(ObstacleEvent {
            tick: 1,
            cell: c.into(),
            present: true,
        });
    }
    s
}
