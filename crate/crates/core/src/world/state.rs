use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    plan_route, Amr, Constants, Coord, Delivery, DeliveryStage, FailureSpec, ItemLedger, ObstacleEvent,
    ProductSpec, Scenario, SimError, Worker, WorkerTask, Workspace,
};
use crate::coevo::{
    ActionLabel, CoevoConfig, LearningConfig, MessageBus, ObservationLog, PredictionLog, PredictorRegistry,
    Preference,
};
use crate::trace::{AgentClass, AgentInfo, Event, Location, ProcessStage, Recorder};

/// Whether `other` is an AMR under way that gives way to `amr`: either it
/// has the higher id, or its next step is onto `amr` and it must wait anyway.
fn yields_to(other: &Amr, amr: &Amr) -> bool {
    other.is_active()
        && (other.id > amr.id && !other.route.is_empty() || other.route.first() == Some(&amr.pos))
}

/// Everything the co-evolution layer keeps between ticks.
#[derive(Debug, Clone, Default)]
pub struct CoevoState {
    pub config: CoevoConfig,
    pub predictions: PredictionLog,
    pub observations: ObservationLog,
    pub registry: PredictorRegistry,
    pub learning: BTreeMap<String, LearningConfig>,
    pub bus: MessageBus,
    pub preferences: BTreeMap<String, Preference>,
    /// (tick the reply is sent, worker, requester)
    pub(crate) pending_replies: Vec<(u64, String, String)>,
    /// Interruption notices per (worker, 100-tick bucket).
    pub(crate) interruptions: BTreeMap<(String, u64), u32>,
    pub(crate) next_evaluation: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibleEntity {
    pub id: String,
    pub pos: Coord,
    pub action: ActionLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Percept {
    pub agent: String,
    pub entities: Vec<VisibleEntity>,
    /// Item locations whose cell the agent can see, with their contents.
    pub items: Vec<(Location, BTreeMap<String, u32>)>,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub tick: u64,
    pub seed: u64,
    pub scenario: Scenario,
    pub workspace: Workspace,
    pub products: BTreeMap<String, ProductSpec>,
    /// Sorted by id.
    pub workers: Vec<Worker>,
    /// Sorted by id.
    pub amrs: Vec<Amr>,
    pub ledger: ItemLedger,
    pub rng: ChaCha8Rng,
    pub goal: BTreeMap<String, u32>,
    pub shipped: BTreeMap<String, u32>,
    pub deliveries: BTreeMap<u64, Delivery>,
    pub(crate) next_delivery: u64,
    /// Effective supply interval per worker.
    pub supply_interval: BTreeMap<String, u32>,
    /// Effective safety margin AMRs keep when serving a worker.
    pub margins: BTreeMap<String, u32>,
    pub starvation: BTreeMap<String, u64>,
    pub coevo: CoevoState,
    pub(crate) visible: BTreeMap<String, Vec<String>>,
    pub(crate) pending_obstacles: Vec<ObstacleEvent>,
    pub(crate) pending_failures: Vec<FailureSpec>,
    /// (tick, AMR) repairs scheduled by injected failures.
    pub(crate) repairs: Vec<(u64, String)>,
    pub(crate) started: bool,
}

/// Move interval and safety margin for a worker of the given skill.
pub fn adapt_to_skill(c: &Constants, skill: f64) -> Result<(u32, u32), SimError> {
    if !(0.0..=1.0).contains(&skill) {
        return Err(SimError::SkillOutOfRange(skill));
    }
    let gap = 1.0 - skill;
    let interval = (f64::from(c.base_interval) * (1.0 + c.kappa_s * gap))
        .round()
        .max(1.0) as u32;
    let margin = (c.base_margin + (c.kappa_m * gap).round() as u32).max(c.min_margin);
    Ok((interval, margin))
}

/// Ticks a worker of the given skill needs for one unit.
pub fn process_duration(c: &Constants, base_ticks: u32, skill: f64) -> u32 {
    let raw = f64::from(base_ticks) * (1.0 + c.alpha * (1.0 - skill));
    ((raw - 1e-9).ceil() as u32).max(1)
}

impl WorldState {
    pub fn new(scenario: &Scenario, seed: Option<u64>) -> Result<WorldState, SimError> {
        scenario.validate()?;
        let seed = seed.unwrap_or(scenario.seed);
        let c = &scenario.constants;
        let mut workers: Vec<Worker> = scenario
            .workers
            .iter()
            .map(|w| Worker {
                id: w.id.clone(),
                pos: w.pos,
                skill: w.skill,
                perception_range: w.perception_range,
                stations: w.stations.clone(),
                script: w.script.clone(),
                preference: w.preference,
                last_action: ActionLabel::Stay,
                task: WorkerTask::None,
                blocked_for: 0,
                script_cursor: 0,
                recent_ratios: VecDeque::new(),
                expectations: BTreeMap::new(),
            })
            .collect();
        workers.sort_by(|a, b| a.id.cmp(&b.id));
        let mut amrs: Vec<Amr> = scenario
            .amrs
            .iter()
            .map(|a| Amr::new(&a.id, a.pos, a.perception_range, c.base_interval, c.base_margin))
            .collect();
        amrs.sort_by(|a, b| a.id.cmp(&b.id));
        let mut supply_interval = BTreeMap::new();
        let mut margins = BTreeMap::new();
        for w in &workers {
            let (i, m) = adapt_to_skill(c, w.skill)?;
            supply_interval.insert(w.id.clone(), i);
            margins.insert(w.id.clone(), m);
        }
        let mut pending_obstacles = scenario.obstacle_events.clone();
        pending_obstacles.sort_by_key(|e| e.tick);
        Ok(WorldState {
            tick: 0,
            seed,
            scenario: scenario.clone(),
            workspace: scenario.workspace(),
            products: scenario
                .products
                .iter()
                .map(|p| (p.id.clone(), p.clone()))
                .collect(),
            workers,
            amrs,
            ledger: ItemLedger::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            goal: scenario.goal.clone(),
            shipped: BTreeMap::new(),
            deliveries: BTreeMap::new(),
            next_delivery: 0,
            supply_interval,
            margins,
            starvation: BTreeMap::new(),
            coevo: CoevoState {
                config: scenario.coevo.clone(),
                ..CoevoState::default()
            },
            visible: BTreeMap::new(),
            pending_obstacles,
            pending_failures: scenario.failures.clone(),
            repairs: Vec::new(),
            started: false,
        })
    }

    pub fn constants(&self) -> &Constants {
        &self.scenario.constants
    }

    pub fn coevo_enabled(&self) -> bool {
        self.coevo.config.enabled
    }

    pub fn goal_met(&self) -> bool {
        self.goal
            .iter()
            .all(|(p, &n)| self.shipped.get(p).copied().unwrap_or(0) >= n)
    }

    pub fn worker(&self, id: &str) -> Option<&Worker> {
        self.workers.iter().find(|w| w.id == id)
    }

    pub fn amr(&self, id: &str) -> Option<&Amr> {
        self.amrs.iter().find(|a| a.id == id)
    }

    pub(crate) fn worker_index(&self, id: &str) -> Option<usize> {
        self.workers.iter().position(|w| w.id == id)
    }

    pub(crate) fn amr_index(&self, id: &str) -> Option<usize> {
        self.amrs.iter().position(|a| a.id == id)
    }

    pub fn agent_ids(&self) -> BTreeSet<String> {
        self.workers
            .iter()
            .map(|w| w.id.clone())
            .chain(self.amrs.iter().map(|a| a.id.clone()))
            .collect()
    }

    pub fn agent_infos(&self) -> Vec<AgentInfo> {
        let mut infos: Vec<AgentInfo> = self
            .amrs
            .iter()
            .map(|a| AgentInfo {
                id: a.id.clone(),
                class: AgentClass::Amr,
                pos: a.pos,
                stations: Vec::new(),
            })
            .chain(self.workers.iter().map(|w| AgentInfo {
                id: w.id.clone(),
                class: AgentClass::Worker,
                pos: w.pos,
                stations: w.stations.clone(),
            }))
            .collect();
        infos.sort_by(|a, b| a.id.cmp(&b.id));
        infos
    }

    /// Position and latest action of any agent.
    pub fn agent(&self, id: &str) -> Option<(Coord, ActionLabel, u32)> {
        self.worker(id)
            .map(|w| (w.pos, w.last_action, w.perception_range))
            .or_else(|| self.amr(id).map(|a| (a.pos, a.last_action, a.perception_range)))
    }

    pub fn is_amr(&self, id: &str) -> bool {
        self.amr(id).is_some()
    }

    /// Cells holding a worker or an AMR.
    pub fn occupied(&self) -> HashSet<Coord> {
        self.workers
            .iter()
            .map(|w| w.pos)
            .chain(self.amrs.iter().map(|a| a.pos))
            .collect()
    }

    /// The worker who runs a station: the first one assigned to it.
    pub fn station_worker(&self, station: &str) -> Option<&Worker> {
        self.workers
            .iter()
            .find(|w| w.stations.iter().any(|s| s == station))
    }

    pub fn perceive(&self, agent: &str) -> Result<Percept, SimError> {
        let (pos, _, range) = self
            .agent(agent)
            .ok_or_else(|| SimError::UnknownAgent(agent.to_string()))?;
        let sees = |p: Coord| p.chebyshev(pos) <= range && super::line_of_sight(&self.workspace, pos, p);
        let mut entities: Vec<VisibleEntity> = self
            .workers
            .iter()
            .map(|w| (w.id.as_str(), w.pos, w.last_action))
            .chain(self.amrs.iter().map(|a| (a.id.as_str(), a.pos, a.last_action)))
            .filter(|(id, p, _)| *id != agent && sees(*p))
            .map(|(id, p, action)| VisibleEntity {
                id: id.to_string(),
                pos: p,
                action,
            })
            .collect();
        entities.sort_by(|a, b| a.id.cmp(&b.id));
        let mut items = Vec::new();
        for s in &self.workspace.stations {
            if sees(s.port) || sees(s.workbench) {
                for loc in [
                    Location::StationInput(s.id.clone()),
                    Location::StationWip(s.id.clone()),
                    Location::StationOutput(s.id.clone()),
                ] {
                    let contents = self.ledger.contents(&loc);
                    if !contents.is_empty() {
                        items.push((loc, contents));
                    }
                }
            }
        }
        for a in self.amrs.iter().filter(|a| a.id != agent && sees(a.pos)) {
            let loc = Location::Amr(a.id.clone());
            let contents = self.ledger.contents(&loc);
            if !contents.is_empty() {
                items.push((loc, contents));
            }
        }
        Ok(Percept {
            agent: agent.to_string(),
            entities,
            items,
        })
    }

    /// True when a worker, another AMR or an obstacle is within the AMR's
    /// safety margin of one of its next `min(margin, remaining)` route cells.
    ///
    /// Between two AMRs under way the lower id has right of way: a moving AMR
    /// with a higher id is not a hazard, since it yields in turn.
    pub fn detect_collision_risk(&self, amr: &str) -> Result<bool, SimError> {
        let a = self
            .amr(amr)
            .ok_or_else(|| SimError::UnknownAgent(amr.to_string()))?;
        let m = a.safety_margin;
        let ahead = &a.route[..a.route.len().min(m as usize)];
        if ahead.is_empty() {
            return Ok(false);
        }
        let near = |p: Coord| ahead.iter().any(|c| c.chebyshev(p) <= m);
        if self.workers.iter().any(|w| near(w.pos)) {
            return Ok(true);
        }
        if self
            .amrs
            .iter()
            .any(|o| o.id != a.id && !yields_to(o, a) && near(o.pos))
        {
            return Ok(true);
        }
        let mi = m as i32;
        for c in ahead {
            for dy in -mi..=mi {
                for dx in -mi..=mi {
                    if self.workspace.is_obstacle(Coord::new(c.x + dx, c.y + dy)) {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }

    pub fn bom_covered(&self, station: &str) -> bool {
        self.missing_components(station).is_empty()
    }

    fn missing_components(&self, station: &str) -> BTreeMap<String, u32> {
        let Some(s) = self.workspace.station(station) else {
            return BTreeMap::new();
        };
        let input = Location::StationInput(s.id.clone());
        self.products[&s.product]
            .bom
            .iter()
            .filter_map(|(item, &q)| {
                let have = self.ledger.count(&input, item);
                (have < q).then(|| (item.clone(), q - have))
            })
            .collect()
    }

    /// Units of `product` currently being made.
    fn in_process(&self, product: &str) -> u32 {
        self.workers
            .iter()
            .filter(|w| match &w.task {
                WorkerTask::Processing { station, .. } => self
                    .workspace
                    .station(station)
                    .is_some_and(|s| s.product == product),
                _ => false,
            })
            .count() as u32
    }

    fn carried(&self, item: &str) -> u32 {
        self.workers
            .iter()
            .map(|w| self.ledger.count(&Location::Worker(w.id.clone()), item))
            .sum()
    }

    /// Whether making one more unit of `product` moves the goal forward.
    pub fn product_needed(&self, product: &str) -> bool {
        if let Some(&target) = self.goal.get(product) {
            let Some(s) = self.workspace.station_producing(product) else {
                return false;
            };
            let pipeline = self.shipped.get(product).copied().unwrap_or(0)
                + self.ledger.count(&Location::StationOutput(s.id.clone()), product)
                + self.in_process(product)
                + self.carried(product);
            return pipeline < target;
        }
        self.workspace
            .stations
            .iter()
            .filter(|s| self.products[&s.product].bom.contains_key(product))
            .any(|s| self.product_needed(&s.product))
    }

    /// Whether the station's worker should start a unit now.
    pub fn can_process(&self, station: &str) -> bool {
        let Some(s) = self.workspace.station(station) else {
            return false;
        };
        let out = self
            .ledger
            .count(&Location::StationOutput(s.id.clone()), &s.product)
            + self.in_process(&s.product);
        out < s.output_capacity && self.product_needed(&s.product) && self.bom_covered(station)
    }

    /// Moves the BOM into the station's work-in-progress and starts the
    /// worker on one unit. Returns the unit's duration in ticks.
    pub fn process_at_station(
        &mut self,
        worker: &str,
        station: &str,
        rec: &mut Recorder,
    ) -> Result<u32, SimError> {
        let wi = self
            .worker_index(worker)
            .ok_or_else(|| SimError::UnknownAgent(worker.to_string()))?;
        let s = self
            .workspace
            .station(station)
            .cloned()
            .ok_or_else(|| SimError::UnknownStation(station.to_string()))?;
        if self.workers[wi].pos != s.workbench {
            return Err(SimError::NotAtWorkbench {
                worker: worker.to_string(),
                station: station.to_string(),
            });
        }
        let missing = self.missing_components(station);
        if !missing.is_empty() {
            return Err(SimError::MissingComponents {
                station: station.to_string(),
                missing,
            });
        }
        let spec = self.products[&s.product].clone();
        let input = Location::StationInput(s.id.clone());
        let wip = Location::StationWip(s.id.clone());
        for (item, &q) in &spec.bom {
            self.ledger.transfer(&input, &wip, item, q)?;
        }
        let skill = self.workers[wi].skill;
        let duration = process_duration(self.constants(), spec.base_process_ticks, skill);
        self.workers[wi].task = WorkerTask::Processing {
            station: s.id.clone(),
            remaining: duration,
            duration,
        };
        rec.emit(
            worker,
            Event::Processed {
                stage: ProcessStage::Started,
                station: s.id.clone(),
                product: s.product.clone(),
                consumed: spec.bom.clone(),
                duration,
                skill,
            },
        );
        Ok(duration)
    }

    /// Advances a processing worker by one tick; on the last tick the BOM is
    /// consumed, the product appears in the output buffer and skill grows.
    pub(crate) fn advance_processing(&mut self, wi: usize, rec: &mut Recorder) -> Result<(), SimError> {
        let WorkerTask::Processing {
            station,
            remaining,
            duration,
        } = &mut self.workers[wi].task
        else {
            return Ok(());
        };
        *remaining = remaining.saturating_sub(1);
        if *remaining > 0 {
            return Ok(());
        }
        let (station, duration) = (station.clone(), *duration);
        let s = self.workspace.station(&station).cloned().expect("station exists");
        let spec = self.products[&s.product].clone();
        let wip = Location::StationWip(s.id.clone());
        for (item, &q) in &spec.bom {
            self.ledger.consume(&wip, item, q)?;
        }
        self.ledger
            .create(&Location::StationOutput(s.id.clone()), &s.product, 1);
        let delta = self.constants().delta;
        let window = self.constants().rolling_window;
        let w = &mut self.workers[wi];
        w.skill = (w.skill + delta).min(1.0);
        w.recent_ratios
            .push_back(f64::from(duration) / f64::from(spec.base_process_ticks));
        while w.recent_ratios.len() > window {
            w.recent_ratios.pop_front();
        }
        w.task = WorkerTask::None;
        let skill = w.skill;
        rec.emit(
            &w.id.clone(),
            Event::Processed {
                stage: ProcessStage::Completed,
                station: s.id,
                product: s.product,
                consumed: spec.bom,
                duration,
                skill,
            },
        );
        Ok(())
    }

    /// Route for an AMR, preferring one that keeps its safety margin clear of
    /// obstacles and other agents, then one that merely avoids occupied cells,
    /// then any route at all. Workbenches are never driven over.
    pub fn amr_route(&self, ai: usize, goal: Coord) -> Option<Vec<Coord>> {
        let a = &self.amrs[ai];
        let base: HashSet<Coord> = self
            .workspace
            .stations
            .iter()
            .map(|s| s.workbench)
            .filter(|&c| c != goal)
            .collect();
        let others: Vec<Coord> = self
            .workers
            .iter()
            .map(|w| w.pos)
            .chain(self.amrs.iter().filter(|o| o.id != a.id).map(|o| o.pos))
            .collect();
        let m = a.safety_margin as i32;
        let mut clearance = base.clone();
        for p in others.iter().copied().chain(self.workspace.obstacles()) {
            for dy in -m..=m {
                for dx in -m..=m {
                    clearance.insert(Coord::new(p.x + dx, p.y + dy));
                }
            }
        }
        clearance.remove(&goal);
        clearance.remove(&a.pos);
        let mut occupied = base.clone();
        occupied.extend(others.iter().copied().filter(|&c| c != goal));
        for blocked in [clearance, occupied, base] {
            if let Ok(r) = plan_route(&self.workspace, a.pos, goal, &blocked) {
                return Some(r);
            }
        }
        None
    }

    /// Route for a worker. Ports and storage cells are avoided unless they
    /// are the destination; with `avoid_agents` occupied cells are too.
    pub(crate) fn worker_route(&self, wi: usize, goal: Coord, avoid_agents: bool) -> Option<Vec<Coord>> {
        let w = &self.workers[wi];
        let mut blocked: HashSet<Coord> = self
            .workspace
            .stations
            .iter()
            .map(|s| s.port)
            .chain(self.workspace.storage.iter().copied())
            .collect();
        if avoid_agents {
            blocked.extend(self.occupied());
        }
        blocked.remove(&goal);
        blocked.remove(&w.pos);
        plan_route(&self.workspace, w.pos, goal, &blocked)
            .ok()
            .or_else(|| {
                if avoid_agents {
                    self.worker_route(wi, goal, false)
                } else {
                    None
                }
            })
    }

    /// Open deliveries into `station` of `item`, in units.
    pub(crate) fn inbound(&self, station: &str, item: Option<&str>) -> u32 {
        self.deliveries
            .values()
            .filter(|d| d.is_open() && d.dest == station && item.is_none_or(|i| d.item == i))
            .map(|d| d.qty)
            .sum()
    }

    /// Units of a station's output already promised to open pickups.
    pub(crate) fn reserved_output(&self, station: &str) -> u32 {
        self.deliveries
            .values()
            .filter(|d| {
                matches!(d.stage, DeliveryStage::Pending | DeliveryStage::ToPickup)
                    && d.source == super::Source::Station(station.to_string())
            })
            .map(|d| d.qty)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Cell;
    use rand::Rng;

    fn tiny() -> WorldState {
        let text = include_str!("../../tests/fixtures/tiny.json");
        WorldState::new(&Scenario::parse(text).unwrap(), None).unwrap()
    }

    #[test]
    fn skill_bounds() {
        let c = Constants::default();
        assert_eq!(adapt_to_skill(&c, 1.0).unwrap(), (c.base_interval, c.base_margin));
        // round(2 * 2) and 1 + round(2)
        assert_eq!(adapt_to_skill(&c, 0.0).unwrap(), (4, 3));
        assert!(matches!(
            adapt_to_skill(&c, -0.1),
            Err(SimError::SkillOutOfRange(_))
        ));
        assert!(matches!(
            adapt_to_skill(&c, 1.01),
            Err(SimError::SkillOutOfRange(_))
        ));
    }

    #[test]
    fn skill_sweep_is_monotone() {
        let c = Constants::default();
        let mut prev = (u32::MAX, u32::MAX, u32::MAX);
        for i in 0..=10 {
            let s = f64::from(i) / 10.0;
            let (iv, m) = adapt_to_skill(&c, s).unwrap();
            let d = process_duration(&c, 3, s);
            assert!(iv <= prev.0 && m <= prev.1 && d <= prev.2, "not monotone at {s}");
            assert!(m >= c.min_margin);
            prev = (iv, m, d);
        }
    }

    #[test]
    fn full_skill_duration_is_base() {
        let c = Constants::default();
        for base in 1..10 {
            assert_eq!(process_duration(&c, base, 1.0), base);
        }
        assert_eq!(process_duration(&c, 3, 0.5), 5); // ceil(4.5)
    }

    #[test]
    fn perception_range_and_obstruction() {
        let mut st = tiny();
        let w = st.workers[0].pos;
        st.amrs[0].pos = Coord::new(w.x + 1, w.y);
        let p = st.perceive(&st.workers[0].id.clone()).unwrap();
        assert!(p.entities.iter().any(|e| e.id == st.amrs[0].id));
        // Out of range.
        st.amrs[0].pos = Coord::new(w.x + st.workers[0].perception_range as i32 + 1, w.y);
        let p = st.perceive(&st.workers[0].id.clone()).unwrap();
        assert!(p.entities.iter().all(|e| e.id != st.amrs[0].id));
        // Obstacle on the line.
        st.amrs[0].pos = Coord::new(w.x + 2, w.y);
        st.workspace.set_cell(Coord::new(w.x + 1, w.y), Cell::Obstacle);
        let p = st.perceive(&st.workers[0].id.clone()).unwrap();
        assert!(p.entities.iter().all(|e| e.id != st.amrs[0].id));
        assert!(matches!(st.perceive("ghost"), Err(SimError::UnknownAgent(_))));
    }

    #[test]
    fn collision_risk_basic_cases() {
        let mut st = tiny();
        let a = st.amrs[0].pos;
        st.amrs[0].safety_margin = 2;
        st.amrs[0].route = vec![Coord::new(a.x + 1, a.y), Coord::new(a.x + 2, a.y)];
        st.workers[0].pos = Coord::new(st.workspace.width - 1, 0);
        let id = st.amrs[0].id.clone();
        assert!(!st.detect_collision_risk(&id).unwrap());
        st.workers[0].pos = Coord::new(a.x + 1, a.y);
        assert!(st.detect_collision_risk(&id).unwrap());
        st.amrs[0].route.clear();
        assert!(!st.detect_collision_risk(&id).unwrap());
    }

    /// Brute force: every entity and obstacle cell against every look-ahead cell.
    fn risk_oracle(st: &WorldState, ai: usize) -> bool {
        let a = &st.amrs[ai];
        let m = a.safety_margin as i32;
        let k = a.route.len().min(a.safety_margin as usize);
        let mut solids: Vec<Coord> = st.workers.iter().map(|w| w.pos).collect();
        solids.extend(
            st.amrs
                .iter()
                .enumerate()
                .filter(|(j, o)| {
                    *j != ai
                        && !(!o.failed
                            && !o.suppressed
                            && o.novelty != crate::coevo::NoveltyLevel::Stop
                            && (o.id > a.id && !o.route.is_empty() || o.route.first() == Some(&a.pos)))
                })
                .map(|(_, o)| o.pos),
        );
        for y in 0..st.workspace.height {
            for x in 0..st.workspace.width {
                if st.workspace.is_obstacle(Coord::new(x, y)) {
                    solids.push(Coord::new(x, y));
                }
            }
        }
        a.route[..k].iter().any(|c| {
            solids
                .iter()
                .any(|s| (s.x - c.x).abs() <= m && (s.y - c.y).abs() <= m)
        })
    }

    #[test]
    fn collision_risk_matches_brute_force() {
        let mut st = tiny();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (w, h) = (st.workspace.width, st.workspace.height);
        for _ in 0..1000 {
            let mut cells: Vec<Coord> = Vec::new();
            for wk in st.workers.iter_mut() {
                wk.pos = Coord::new(rng.gen_range(0..w), rng.gen_range(0..h));
                cells.push(wk.pos);
            }
            for a in st.amrs.iter_mut() {
                a.pos = Coord::new(rng.gen_range(0..w), rng.gen_range(0..h));
                a.safety_margin = rng.gen_range(1..4);
                let len = rng.gen_range(0..6);
                a.route = (0..len)
                    .map(|_| Coord::new(rng.gen_range(0..w), rng.gen_range(0..h)))
                    .collect();
            }
            for ai in 0..st.amrs.len() {
                let id = st.amrs[ai].id.clone();
                assert_eq!(st.detect_collision_risk(&id).unwrap(), risk_oracle(&st, ai));
            }
        }
        assert!(st.detect_collision_risk("ghost").is_err());
    }

    #[test]
    fn missing_components_leave_buffers_alone() {
        let mut st = tiny();
        let s = st.workspace.stations[0].clone();
        let wi = 0;
        st.workers[wi].pos = s.workbench;
        let before = st.ledger.clone();
        let mut rec = Recorder::new(0);
        let id = st.workers[wi].id.clone();
        let err = st.process_at_station(&id, &s.id, &mut rec).unwrap_err();
        assert!(matches!(err, SimError::MissingComponents { .. }));
        assert_eq!(st.ledger, before);
        assert!(rec.events().is_empty());
        assert_eq!(st.workers[wi].task, WorkerTask::None);
    }

    fn stock(st: &mut WorldState, station: &str) {
        let s = st.workspace.station(station).unwrap().clone();
        for (item, q) in st.products[&s.product].bom.clone() {
            st.ledger.create(&Location::StationInput(s.id.clone()), &item, q);
        }
    }

    #[test]
    fn skill_trajectory_over_twenty_units() {
        let mut st = tiny();
        let s = st.workspace.stations[0].clone();
        let id = st.workers[0].id.clone();
        st.workers[0].pos = s.workbench;
        st.workers[0].skill = 0.1;
        let s0 = 0.1;
        let base = st.products[&s.product].base_process_ticks;
        let mut rec = Recorder::new(0);
        for _ in 0..20 {
            stock(&mut st, &s.id);
            let skill = st.workers[0].skill;
            let d = st.process_at_station(&id, &s.id, &mut rec).unwrap();
            assert_eq!(d, process_duration(st.constants(), base, skill));
            for _ in 0..d {
                st.advance_processing(0, &mut rec).unwrap();
            }
            assert_eq!(st.workers[0].task, WorkerTask::None);
        }
        let expected = (s0 + 20.0 * st.constants().delta).min(1.0);
        assert!((st.workers[0].skill - expected).abs() < 1e-9);
        assert_eq!(
            st.ledger
                .count(&Location::StationOutput(s.id.clone()), &s.product),
            20
        );
        assert!(st.ledger.conservation_violations().is_empty());
    }

    #[test]
    fn full_skill_unit_takes_base_ticks() {
        let mut st = tiny();
        let s = st.workspace.stations[0].clone();
        let id = st.workers[0].id.clone();
        st.workers[0].pos = s.workbench;
        st.workers[0].skill = 1.0;
        stock(&mut st, &s.id);
        let mut rec = Recorder::new(0);
        let d = st.process_at_station(&id, &s.id, &mut rec).unwrap();
        assert_eq!(d, st.products[&s.product].base_process_ticks);
    }
}
