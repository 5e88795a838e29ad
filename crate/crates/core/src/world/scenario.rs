use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Coord, PreferenceSpec, ProductSpec, Script, SimError, Station, Workspace};
use crate::coevo::{CoevoConfig, MessageKind, MessagePayload};
use crate::trace::CONTROL_CENTER;

/// Tunable simulation constants. Defaults are the documented baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constants {
    /// Ticks per cell move for a fully skilled worker's supplier.
    pub base_interval: u32,
    pub base_margin: u32,
    /// Safety margin floor that no preference or setting can go below.
    pub min_margin: u32,
    pub kappa_s: f64,
    pub kappa_m: f64,
    /// Process-time penalty for inexperience.
    pub alpha: f64,
    /// Skill gained per completed unit.
    pub delta: f64,
    /// Ticks an AMR may stay halted or blocked before its route is re-planned.
    pub patience: u32,
    pub rolling_window: usize,
    /// Rolling mean of duration/base below which supply speeds up.
    pub fast_ratio: f64,
    /// Per-tick chance that an unscripted worker pauses.
    pub hesitation: f64,
    /// Lots of each input a station tries to keep on hand or in transit.
    pub buffer_lots: u32,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            base_interval: 2,
            base_margin: 1,
            min_margin: 1,
            kappa_s: 1.0,
            kappa_m: 2.0,
            alpha: 1.0,
            delta: 0.05,
            patience: 8,
            rolling_window: 5,
            fast_ratio: 1.25,
            hesitation: 0.05,
            buffer_lots: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub width: i32,
    pub height: i32,
    #[serde(default)]
    pub obstacles: Vec<Coord>,
    pub storage: Vec<Coord>,
    pub dock: Coord,
}

fn default_range() -> u32 {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerSpec {
    pub id: String,
    pub pos: Coord,
    pub skill: f64,
    #[serde(default = "default_range")]
    pub perception_range: u32,
    #[serde(default)]
    pub stations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preference: Option<PreferenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<Script>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmrSpec {
    pub id: String,
    pub pos: Coord,
    #[serde(default = "default_range")]
    pub perception_range: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureSpec {
    /// Earliest tick of the failure.
    pub tick: u64,
    pub amr: String,
    /// Wait until the AMR is carrying a payload between pickup and drop-off.
    #[serde(default)]
    pub when_loaded: bool,
    /// Ticks from the failure until the AMR is repaired; never when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair_after: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleEvent {
    pub tick: u64,
    pub cell: Coord,
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedMessage {
    pub tick: u64,
    pub sender: String,
    pub receivers: Vec<String>,
    pub kind: MessageKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<MessagePayload>,
}

impl ScriptedMessage {
    pub fn payload(&self) -> Result<MessagePayload, SimError> {
        self.payload
            .clone()
            .or_else(|| MessagePayload::empty_for(self.kind))
            .ok_or_else(|| SimError::Scenario(format!("scripted {:?} message needs a payload", self.kind)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    pub products: Vec<ProductSpec>,
    pub stations: Vec<Station>,
    pub workers: Vec<WorkerSpec>,
    pub amrs: Vec<AmrSpec>,
    #[serde(default)]
    pub goal: BTreeMap<String, u32>,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub failures: Vec<FailureSpec>,
    #[serde(default)]
    pub obstacle_events: Vec<ObstacleEvent>,
    #[serde(default)]
    pub messages: Vec<ScriptedMessage>,
    #[serde(default)]
    pub coevo: CoevoConfig,
}

const BUILTIN: [(&str, &str); 3] = [
    ("default", include_str!("../../assets/scenarios/default.json")),
    ("novelty", include_str!("../../assets/scenarios/novelty.json")),
    ("failure", include_str!("../../assets/scenarios/failure.json")),
];

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, SimError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| SimError::ScenarioParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Scenario::parse(&text)
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    /// One of the shipped scenarios by name.
    pub fn builtin(name: &str) -> Option<Scenario> {
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Scenario::parse(text).expect("shipped scenario is valid"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Builds the static workspace (grid, stations, storage, dock).
    pub fn workspace(&self) -> Workspace {
        let mut ws = Workspace::new(self.grid.width, self.grid.height);
        for &o in &self.grid.obstacles {
            ws.set_cell(o, super::Cell::Obstacle);
        }
        for &c in &self.grid.storage {
            ws.add_storage(c);
        }
        for s in &self.stations {
            ws.add_station(s.clone());
        }
        ws.dock = self.grid.dock;
        ws
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let err = |m: String| Err(SimError::Scenario(m));
        let g = &self.grid;
        if g.width <= 0 || g.height <= 0 {
            return err(format!("grid {}x{} is empty", g.width, g.height));
        }
        let in_bounds = |c: Coord| c.x >= 0 && c.y >= 0 && c.x < g.width && c.y < g.height;
        let obstacles: HashSet<Coord> = g.obstacles.iter().copied().collect();

        // Fixed cells: storage, dock, station cells. None may overlap or sit on an obstacle.
        let mut fixed: BTreeMap<Coord, String> = BTreeMap::new();
        let mut claim = |c: Coord, what: String| -> Result<(), SimError> {
            if !in_bounds(c) {
                return Err(SimError::Scenario(format!("{what} at {c} is out of bounds")));
            }
            if obstacles.contains(&c) {
                return Err(SimError::Scenario(format!("{what} at {c} is on an obstacle")));
            }
            if let Some(prev) = fixed.insert(c, what.clone()) {
                return Err(SimError::Scenario(format!("{what} and {prev} share cell {c}")));
            }
            Ok(())
        };
        for &o in &g.obstacles {
            if !in_bounds(o) {
                return err(format!("obstacle {o} out of bounds"));
            }
        }
        if g.storage.is_empty() {
            return err("at least one storage cell is required".into());
        }
        for &c in &g.storage {
            claim(c, "storage".into())?;
        }
        claim(g.dock, "dock".into())?;

        let mut products: BTreeMap<&str, &ProductSpec> = BTreeMap::new();
        for p in &self.products {
            if products.insert(&p.id, p).is_some() {
                return err(format!("duplicate product {:?}", p.id));
            }
            if p.base_process_ticks == 0 {
                return err(format!("product {:?} needs base_process_ticks >= 1", p.id));
            }
            if p.bom.is_empty() {
                return err(format!("product {:?} has an empty BOM", p.id));
            }
            if let Some((i, _)) = p.bom.iter().find(|(_, &q)| q == 0) {
                return err(format!("product {:?} uses zero of {i:?}", p.id));
            }
        }
        check_acyclic(&products)?;

        let mut station_ids = BTreeSet::new();
        let mut producers: BTreeMap<&str, &str> = BTreeMap::new();
        for s in &self.stations {
            if !station_ids.insert(s.id.as_str()) {
                return err(format!("duplicate station {:?}", s.id));
            }
            let Some(p) = products.get(s.product.as_str()) else {
                return err(format!(
                    "station {:?} makes unknown product {:?}",
                    s.id, s.product
                ));
            };
            if let Some(other) = producers.insert(&s.product, &s.id) {
                return err(format!(
                    "product {:?} made at both {other:?} and {:?}",
                    s.product, s.id
                ));
            }
            let need: u32 = p.bom.values().sum();
            if s.input_capacity < need || s.output_capacity == 0 {
                return err(format!(
                    "station {:?} capacities cannot hold one BOM / one product",
                    s.id
                ));
            }
            claim(s.workbench, format!("station {} workbench", s.id))?;
            claim(s.port, format!("station {} port", s.id))?;
        }
        for p in &self.products {
            for item in p.bom.keys() {
                if products.contains_key(item.as_str()) && !producers.contains_key(item.as_str()) {
                    return err(format!("{item:?} is used by {:?} but no station makes it", p.id));
                }
            }
        }
        for product in self.goal.keys() {
            if !producers.contains_key(product.as_str()) {
                return err(format!("goal product {product:?} is not made by any station"));
            }
            if self.products.iter().any(|p| p.bom.contains_key(product)) {
                return err(format!("goal product {product:?} may not also be a component"));
            }
        }

        let mut ids = BTreeSet::from([CONTROL_CENTER.to_string()]);
        let mut occupied = HashSet::new();
        let agents = self
            .workers
            .iter()
            .map(|w| (&w.id, w.pos))
            .chain(self.amrs.iter().map(|a| (&a.id, a.pos)));
        for (id, pos) in agents {
            if id.is_empty() || !ids.insert(id.clone()) {
                return err(format!("agent id {id:?} is empty, reserved or duplicated"));
            }
            if !in_bounds(pos) || obstacles.contains(&pos) {
                return err(format!("agent {id:?} starts on a blocked cell {pos}"));
            }
            if !occupied.insert(pos) {
                return err(format!("agent {id:?} shares start cell {pos}"));
            }
        }
        for w in &self.workers {
            if !(0.0..=1.0).contains(&w.skill) {
                return Err(SimError::SkillOutOfRange(w.skill));
            }
            if let Some(s) = w.stations.iter().find(|s| !station_ids.contains(s.as_str())) {
                return err(format!("worker {:?} assigned to unknown station {s:?}", w.id));
            }
            if let Some(script) = &w.script {
                if script.cycle.is_empty() {
                    return err(format!("worker {:?} has an empty script", w.id));
                }
            }
        }
        for f in &self.failures {
            if !self.amrs.iter().any(|a| a.id == f.amr) {
                return err(format!("failure names unknown AMR {:?}", f.amr));
            }
            if f.repair_after == Some(0) {
                return err(format!("repair of {:?} must come after its failure", f.amr));
            }
        }
        for e in &self.obstacle_events {
            if fixed.contains_key(&e.cell) || !in_bounds(e.cell) {
                return err(format!(
                    "obstacle event at {} is out of bounds or on a fixed cell",
                    e.cell
                ));
            }
        }
        for m in &self.messages {
            if !ids.contains(&m.sender) {
                return err(format!("scripted message from unknown sender {:?}", m.sender));
            }
            if m.receivers.is_empty() {
                return err("scripted message without receivers".into());
            }
            if let Some(r) = m.receivers.iter().find(|r| !ids.contains(*r)) {
                return err(format!("scripted message to unknown receiver {r:?}"));
            }
            if m.payload()?.kind() != m.kind {
                return err(format!("scripted {:?} message has a mismatched payload", m.kind));
            }
        }
        let c = &self.constants;
        if c.base_interval == 0 || c.min_margin == 0 || c.base_margin < c.min_margin {
            return err("base_interval and min_margin must be >= 1, base_margin >= min_margin".into());
        }
        if c.rolling_window == 0 || !(0.0..1.0).contains(&c.hesitation) {
            return err("rolling_window must be >= 1 and hesitation in [0, 1)".into());
        }
        let cv = &self.coevo;
        if cv.window == 0 || cv.cadence == 0 || cv.progress_cadence == 0 {
            return err("coevo window, cadence and progress_cadence must be >= 1".into());
        }
        if !(cv.holdout_fraction > 0.0 && cv.holdout_fraction < 1.0) || cv.smoothing <= 0.0 {
            return err("coevo holdout_fraction must be in (0, 1) and smoothing > 0".into());
        }

        // Every station cell must reach every other one.
        let ws = self.workspace();
        let cells: Vec<Coord> = self.stations.iter().flat_map(|s| [s.workbench, s.port]).collect();
        if let Some(&first) = cells.first() {
            let dist = ws.distances(first, &HashSet::new());
            for &c in &cells {
                if dist[(c.y * g.width + c.x) as usize] == u32::MAX {
                    return err(format!("station cell {c} is disconnected from {first}"));
                }
            }
        }
        Ok(())
    }
}

fn check_acyclic(products: &BTreeMap<&str, &ProductSpec>) -> Result<(), SimError> {
    fn visit<'a>(
        p: &'a str,
        products: &BTreeMap<&'a str, &'a ProductSpec>,
        state: &mut BTreeMap<&'a str, bool>,
    ) -> Result<(), SimError> {
        match state.get(p) {
            Some(true) => return Ok(()),
            Some(false) => return Err(SimError::Scenario(format!("product {p:?} uses itself"))),
            None => {}
        }
        state.insert(p, false);
        if let Some(spec) = products.get(p) {
            for item in spec.bom.keys() {
                if products.contains_key(item.as_str()) {
                    visit(item, products, state)?;
                }
            }
        }
        state.insert(p, true);
        Ok(())
    }
    let mut state = BTreeMap::new();
    for p in products.keys() {
        visit(p, products, &mut state)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_scenarios_parse() {
        for name in Scenario::builtin_names() {
            let s = Scenario::builtin(name).unwrap();
            assert_eq!(s.name, name);
        }
        assert!(Scenario::builtin("nope").is_none());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&Scenario::builtin("default").unwrap().to_json()).unwrap();
        v["colour"] = "red".into();
        assert!(matches!(
            Scenario::parse(&v.to_string()),
            Err(SimError::ScenarioParse { .. })
        ));
    }

    #[test]
    fn cyclic_products_are_rejected() {
        let mut s = Scenario::builtin("default").unwrap();
        let a = s.products[0].id.clone();
        let b = s.products[1].id.clone();
        s.products[0].bom.insert(b, 1);
        s.products[1].bom.insert(a, 1);
        assert!(matches!(s.validate(), Err(SimError::Scenario(m)) if m.contains("uses itself")));
    }

    #[test]
    fn bad_skill_is_rejected() {
        let mut s = Scenario::builtin("default").unwrap();
        s.workers[0].skill = 1.5;
        assert!(matches!(s.validate(), Err(SimError::SkillOutOfRange(_))));
    }

    #[test]
    fn overlapping_cells_are_rejected() {
        let mut s = Scenario::builtin("default").unwrap();
        s.stations[1].port = s.stations[0].port;
        assert!(s.validate().is_err());
        let mut s = Scenario::builtin("default").unwrap();
        s.amrs[0].pos = s.workers[0].pos;
        assert!(s.validate().is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let s = Scenario::builtin("default").unwrap();
        assert_eq!(Scenario::parse(&s.to_json()).unwrap(), s);
    }
}
