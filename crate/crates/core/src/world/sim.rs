use std::collections::{BTreeMap, HashSet};

use rand::Rng;

use super::{Cell, Coord, DeliveryStage, Purpose, Scenario, SimError, Source, WorkerTask, WorldState};
use crate::coevo::{
    evaluate_divergence, novelty_guard, pre_evaluate, slowed, split_window, train_candidate, ActionLabel,
    ChangeTopic, LearningConfig, MessagePayload, NoveltyLevel, ObservationRecord, PredictionRecord,
    Predictor, Preference, Verdict,
};
use crate::trace::{
    AgentClass, Event, Location, Recorder, ResumeReason, SuppressMode, SuppressReason, TraceEvent,
    CONTROL_CENTER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    /// Every goal quantity was shipped.
    Completed,
    TickLimit,
    /// No loading, unloading, processing or shipping for `patience * 10` ticks.
    Deadlock,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub events: Vec<TraceEvent>,
    pub state: WorldState,
}

/// Runs a scenario until completion, deadlock or `ticks` ticks.
pub fn run(scenario: &Scenario, seed: Option<u64>, ticks: u64) -> Result<RunResult, SimError> {
    let mut st = WorldState::new(scenario, seed)?;
    let mut events = Vec::new();
    let limit = u64::from(st.constants().patience) * 10;
    let mut last_progress = 0u64;
    let outcome = loop {
        if st.goal_met() {
            if !st.started {
                let mut rec = Recorder::new(st.tick);
                st.start(&mut rec);
                events.extend(rec.finish());
            }
            break RunOutcome::Completed;
        }
        if st.tick >= ticks {
            break RunOutcome::TickLimit;
        }
        let tick = st.tick;
        let evs = st.step();
        if evs.iter().any(|e| e.event.is_progress()) {
            last_progress = tick;
        }
        events.extend(evs);
        if st.tick - last_progress > limit && !st.goal_met() {
            break RunOutcome::Deadlock;
        }
    };
    Ok(RunResult {
        outcome,
        events,
        state: st,
    })
}

impl WorldState {
    /// Advances one tick: scripted events, message delivery, perception,
    /// prediction, control-center replanning, agent actions, then recording
    /// and the periodic learning and progress rounds.
    pub fn step(&mut self) -> Vec<TraceEvent> {
        let mut rec = Recorder::new(self.tick);
        if !self.started {
            self.start(&mut rec);
        }
        self.scripted_events(&mut rec);
        if self.coevo_enabled() {
            self.deliver_messages(&mut rec);
            self.send_due_replies(&mut rec);
        }
        let visible = self.perceive_phase(&mut rec);
        if self.coevo_enabled() {
            self.predict_phase(&visible, &mut rec);
        }
        let instructions = self.control_center_replan();
        self.apply_instructions(instructions, &mut rec);
        let actions = self.act_phase(&mut rec);
        for s in self.workspace.stations.clone() {
            if self.product_needed(&s.product) && !self.bom_covered(&s.id) {
                *self.starvation.entry(s.id).or_default() += 1;
            }
        }
        if self.coevo_enabled() {
            self.record_phase(&visible, &actions, &mut rec);
            let cadence = self.coevo.config.cadence;
            if self.tick > 0 && self.tick.is_multiple_of(cadence) {
                self.learning_round(&mut rec);
            }
            if self.tick.is_multiple_of(self.coevo.config.progress_cadence) {
                let report = crate::coevo::monitor_progress(self);
                rec.emit(CONTROL_CENTER, Event::ProgressReported { report });
            }
        }
        self.tick += 1;
        rec.finish()
    }

    pub(crate) fn start(&mut self, rec: &mut Recorder) {
        self.started = true;
        rec.emit(
            CONTROL_CENTER,
            Event::RunStarted {
                scenario: self.scenario.name.clone(),
                seed: self.seed,
                coevo_enabled: self.coevo_enabled(),
                agents: self.agent_infos(),
                goal: self.goal.clone(),
            },
        );
        if !self.coevo_enabled() {
            return;
        }
        let cfg = self.coevo.config.clone();
        for a in self.amrs.clone() {
            let lc = LearningConfig::configure(
                &a.id,
                AgentClass::Amr,
                cfg.window,
                cfg.cadence,
                cfg.holdout_fraction,
                cfg.min_samples,
                true,
            )
            .expect("scenario validation checked the learning settings");
            rec.emit(
                &a.id,
                Event::LearningConfigured {
                    window: lc.window,
                    cadence: lc.cadence,
                    holdout_fraction: lc.holdout_fraction,
                    min_samples: lc.min_samples,
                    enabled: lc.enabled,
                },
            );
            self.coevo.learning.insert(a.id.clone(), lc);
        }
        let askable: Vec<String> = self
            .workers
            .iter()
            .filter(|w| w.script.is_none() && !w.stations.is_empty())
            .map(|w| w.id.clone())
            .collect();
        for w in askable {
            self.send(
                rec,
                CONTROL_CENTER,
                vec![w.clone()],
                MessagePayload::PreferenceRequest,
                vec![w],
            );
        }
    }

    fn scripted_events(&mut self, rec: &mut Recorder) {
        let t = self.tick;
        let mut i = 0;
        while i < self.pending_failures.len() {
            let f = self.pending_failures[i].clone();
            let ai = self.amr_index(&f.amr).expect("validated AMR");
            let a = &self.amrs[ai];
            let loaded = a
                .delivery
                .is_some_and(|d| self.deliveries[&d].stage == DeliveryStage::Carrying)
                && !a.route.is_empty();
            if t < f.tick || a.failed || (f.when_loaded && !loaded) {
                i += 1;
                continue;
            }
            self.pending_failures.remove(i);
            let a = &mut self.amrs[ai];
            a.failed = true;
            a.route.clear();
            a.cooldown = 0;
            let delivery = a.delivery;
            if let Some(d) = delivery {
                let d = self.deliveries.get_mut(&d).expect("known delivery");
                if d.stage == DeliveryStage::Carrying {
                    d.stage = DeliveryStage::Stranded;
                }
            }
            rec.emit(&f.amr, Event::FailureInjected { delivery });
            if let Some(after) = f.repair_after {
                self.repairs.push((t + after, f.amr.clone()));
            }
        }
        let (due, later): (Vec<_>, Vec<_>) = std::mem::take(&mut self.repairs)
            .into_iter()
            .partition(|(when, _)| *when <= t);
        self.repairs = later;
        for (_, amr) in due {
            let ai = self.amr_index(&amr).expect("known AMR");
            self.amrs[ai].failed = false;
            rec.emit(
                &amr,
                Event::Resumed {
                    reason: ResumeReason::Repaired,
                },
            );
        }
        let occupied = self.occupied();
        let mut keep = Vec::new();
        for e in std::mem::take(&mut self.pending_obstacles) {
            if e.tick > t || (e.present && occupied.contains(&e.cell)) {
                keep.push(e);
            } else if e.present {
                self.workspace.set_cell(e.cell, Cell::Obstacle);
            } else if self.workspace.is_obstacle(e.cell) {
                self.workspace.set_cell(e.cell, Cell::Free);
            }
        }
        self.pending_obstacles = keep;
        if self.coevo_enabled() {
            let scripted: Vec<_> = self
                .scenario
                .messages
                .iter()
                .filter(|m| m.tick == t)
                .cloned()
                .collect();
            for m in scripted {
                let payload = m.payload().expect("validated payload");
                self.send(rec, &m.sender, m.receivers.clone(), payload, m.receivers.clone());
            }
        }
    }

    fn deliver_messages(&mut self, rec: &mut Recorder) {
        let mut due = self.coevo.bus.take_due(self.tick);
        due.sort_by_key(|m| m.id);
        for msg in due {
            for receiver in &msg.receivers {
                let mut follow = Vec::new();
                let effect = self.interpret(receiver, &msg, &mut follow);
                rec.emit(
                    receiver,
                    Event::MessageReceived {
                        message_id: msg.id,
                        kind: msg.kind,
                        sender: msg.sender.clone(),
                        effect: effect.into(),
                    },
                );
                for (actor, e) in follow {
                    rec.emit(&actor, e);
                }
            }
        }
    }

    /// Applies a delivered message to its receiver and names the effect.
    fn interpret(
        &mut self,
        receiver: &str,
        msg: &crate::coevo::Message,
        follow: &mut Vec<(String, Event)>,
    ) -> &'static str {
        let wi = self.worker_index(receiver);
        let ai = self.amr_index(receiver);
        match &msg.payload {
            MessagePayload::ChangeNotification { topic, after, .. } => match wi {
                Some(wi) => {
                    let summary = format!("{}:{after}", topic_name(*topic));
                    self.workers[wi].expectations.insert(msg.sender.clone(), summary);
                    "expectation_updated"
                }
                None => "noted",
            },
            MessagePayload::InterruptionNotice { .. } => match wi {
                Some(wi) => {
                    if let WorkerTask::GoTo { path, .. } = &mut self.workers[wi].task {
                        path.clear();
                    }
                    "task_replanned"
                }
                None => "noted",
            },
            MessagePayload::SuppressionOrder => match ai {
                Some(ai) if !self.amrs[ai].suppressed => {
                    self.amrs[ai].suppressed = true;
                    follow.push((
                        receiver.to_string(),
                        Event::Suppressed {
                            reason: SuppressReason::Order,
                            mode: SuppressMode::Stop,
                            subject: None,
                            accuracy: None,
                        },
                    ));
                    "suppressed"
                }
                _ => "ignored",
            },
            MessagePayload::ResumeOrder => match ai {
                Some(ai) if self.amrs[ai].suppressed => {
                    self.amrs[ai].suppressed = false;
                    follow.push((
                        receiver.to_string(),
                        Event::Resumed {
                            reason: ResumeReason::Order,
                        },
                    ));
                    "resumed"
                }
                _ => "ignored",
            },
            MessagePayload::PreferenceRequest => match wi {
                Some(_) => {
                    let due = self.tick + self.coevo.config.reply_latency.saturating_sub(1);
                    self.coevo
                        .pending_replies
                        .push((due, receiver.to_string(), msg.sender.clone()));
                    "reply_scheduled"
                }
                None => "ignored",
            },
            MessagePayload::PreferenceReply {
                preferred_margin,
                preferred_supply_interval,
            } => {
                if self.worker(&msg.sender).is_none() {
                    return "ignored";
                }
                let pref = Preference {
                    worker: msg.sender.clone(),
                    preferred_margin: *preferred_margin,
                    preferred_supply_interval: *preferred_supply_interval,
                    recorded_tick: self.tick,
                };
                let (skill_interval, skill_margin, _) = self.skill_supply(&msg.sender);
                let out = crate::coevo::apply_preference(
                    &pref,
                    skill_margin,
                    skill_interval,
                    self.constants().min_margin,
                );
                self.coevo.preferences.insert(msg.sender.clone(), pref);
                follow.push((
                    CONTROL_CENTER.to_string(),
                    Event::PreferenceRecorded {
                        worker: msg.sender.clone(),
                        preferred_margin: out.preferred_margin,
                        preferred_supply_interval: out.preferred_interval,
                        skill_margin: out.skill_margin,
                        effective_margin: out.effective_margin,
                        skill_interval: out.skill_interval,
                        effective_interval: out.effective_interval,
                    },
                ));
                "preference_recorded"
            }
            MessagePayload::ProgressReport { .. } => "logged",
        }
    }

    fn send_due_replies(&mut self, rec: &mut Recorder) {
        let t = self.tick;
        let (due, later): (Vec<_>, Vec<_>) = std::mem::take(&mut self.coevo.pending_replies)
            .into_iter()
            .partition(|(when, _, _)| *when <= t);
        self.coevo.pending_replies = later;
        for (_, worker, requester) in due {
            let (interval, margin, _) = self.skill_supply(&worker);
            let pref = self.worker(&worker).and_then(|w| w.preference);
            let (m, i) = pref.map_or((margin, interval), |p| (p.margin, p.supply_interval));
            self.send(
                rec,
                &worker,
                vec![requester.clone()],
                MessagePayload::PreferenceReply {
                    preferred_margin: m,
                    preferred_supply_interval: i,
                },
                vec![requester, worker.clone()],
            );
        }
    }

    fn perceive_phase(&mut self, rec: &mut Recorder) -> BTreeMap<String, Vec<String>> {
        let mut out = BTreeMap::new();
        for id in self.agent_ids() {
            let percept = self.perceive(&id).expect("known agent");
            let ids: Vec<String> = percept.entities.into_iter().map(|e| e.id).collect();
            if self.visible.get(&id) != Some(&ids) {
                rec.emit(&id, Event::Perceived { visible: ids.clone() });
                self.visible.insert(id.clone(), ids.clone());
            }
            out.insert(id, ids);
        }
        out
    }

    /// AMRs predict visible workers and workers predict visible AMRs.
    fn predict_phase(&mut self, visible: &BTreeMap<String, Vec<String>>, rec: &mut Recorder) {
        let t = self.tick;
        let cfg = self.coevo.config.clone();
        for (owner, seen) in visible {
            let owner_is_amr = self.is_amr(owner);
            if owner_is_amr && self.amr(owner).is_some_and(|a| a.failed) {
                continue;
            }
            for subject in seen {
                if self.is_amr(subject) == owner_is_amr {
                    continue;
                }
                let ctx = self.coevo.observations.last_before(subject, t);
                let p = self
                    .coevo
                    .registry
                    .ensure(Predictor::new(owner, subject, cfg.order, cfg.smoothing));
                let predicted = p.predict(ctx);
                let version = p.version;
                self.coevo
                    .predictions
                    .record(PredictionRecord {
                        tick: t,
                        owner: owner.clone(),
                        subject: subject.clone(),
                        predicted,
                        predictor_version: version,
                    })
                    .expect("one prediction per tick and pair");
                rec.emit(
                    owner,
                    Event::Predicted {
                        subject: subject.clone(),
                        predicted,
                        version,
                    },
                );
            }
        }
    }

    /// Interval and margin an AMR uses this tick: those of the worker its
    /// delivery serves, doubled under a novelty slowdown.
    fn amr_params(&self, ai: usize) -> (u32, u32) {
        let a = &self.amrs[ai];
        let c = self.constants();
        let worker = a
            .delivery
            .and_then(|d| self.station_worker(&self.deliveries[&d].dest))
            .map(|w| w.id.clone());
        let (interval, margin) = match worker {
            Some(w) => (self.supply_interval[&w], self.margins[&w]),
            None => (c.base_interval, c.base_margin),
        };
        if a.novelty == NoveltyLevel::Slowdown {
            let (m, i) = slowed(margin, interval);
            (i, m)
        } else {
            (interval, margin)
        }
    }

    fn act_phase(&mut self, rec: &mut Recorder) -> BTreeMap<String, ActionLabel> {
        for ai in 0..self.amrs.len() {
            let (interval, margin) = self.amr_params(ai);
            let a = &mut self.amrs[ai];
            a.speed_interval = interval;
            a.safety_margin = margin;
            a.halted_now = false;
        }
        let risk: Vec<bool> = (0..self.amrs.len())
            .map(|ai| {
                let a = &self.amrs[ai];
                a.is_active()
                    && a.cooldown == 0
                    && !a.route.is_empty()
                    && self.detect_collision_risk(&a.id).expect("known AMR")
            })
            .collect();
        let draws: Vec<f64> = self.workers.iter().map(|_| self.rng.gen::<f64>()).collect();
        let occupied = self.occupied();
        let mut claimed: HashSet<Coord> = HashSet::new();
        let mut order: Vec<(String, bool, usize)> = self
            .amrs
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.clone(), true, i))
            .chain(
                self.workers
                    .iter()
                    .enumerate()
                    .map(|(i, w)| (w.id.clone(), false, i)),
            )
            .collect();
        order.sort();
        let mut actions = BTreeMap::new();
        for (id, is_amr, i) in order {
            let action = if is_amr {
                let a = self.act_amr(i, risk[i], &occupied, &mut claimed, rec);
                self.amrs[i].last_action = a;
                a
            } else {
                let a = self.act_worker(i, draws[i], &occupied, &mut claimed, rec);
                self.workers[i].last_action = a;
                a
            };
            actions.insert(id, action);
        }
        actions
    }

    fn act_amr(
        &mut self,
        ai: usize,
        risk: bool,
        occupied: &HashSet<Coord>,
        claimed: &mut HashSet<Coord>,
        rec: &mut Recorder,
    ) -> ActionLabel {
        if !self.amrs[ai].is_active() {
            return ActionLabel::Stay;
        }
        if self.amrs[ai].route.is_empty() {
            return self.amr_arrive(ai, rec);
        }
        let a = &mut self.amrs[ai];
        if a.cooldown > 0 {
            a.cooldown -= 1;
            return ActionLabel::Stay;
        }
        if risk {
            a.halted_now = true;
            a.halted_for += 1;
            let (id, pos, margin) = (a.id.clone(), a.pos, a.safety_margin);
            rec.emit(&id, Event::Halted { pos, margin });
            return ActionLabel::Stay;
        }
        let next = a.route[0];
        let Some(dir) = a.pos.direction_to(next) else {
            a.route.clear();
            return ActionLabel::Stay;
        };
        if occupied.contains(&next) || claimed.contains(&next) || !self.workspace.traversable(next) {
            self.amrs[ai].halted_for += 1;
            return ActionLabel::Stay;
        }
        let a = &mut self.amrs[ai];
        let from = a.pos;
        a.pos = next;
        a.route.remove(0);
        a.cooldown = a.speed_interval - 1;
        a.halted_for = 0;
        claimed.insert(next);
        let id = a.id.clone();
        rec.emit(&id, Event::Moved { from, to: next });
        ActionLabel::from_direction(dir)
    }

    /// Loading, unloading, or picking the next leg for an AMR with no route.
    fn amr_arrive(&mut self, ai: usize, rec: &mut Recorder) -> ActionLabel {
        let a = self.amrs[ai].clone();
        let Some(did) = a.delivery else {
            if a.pos != a.home {
                self.amrs[ai].route = self.amr_route(ai, a.home).unwrap_or_default();
            }
            return ActionLabel::Stay;
        };
        let d = self.deliveries[&did].clone();
        let amr_loc = Location::Amr(a.id.clone());
        match d.stage {
            DeliveryStage::ToPickup => {
                let pickup = d.pickup.expect("assigned delivery has a pickup");
                if a.pos != pickup {
                    self.amrs[ai].route = self.amr_route(ai, pickup).unwrap_or_default();
                    return ActionLabel::Stay;
                }
                let from = match &d.source {
                    Source::Storage => {
                        self.ledger.create(&amr_loc, &d.item, d.qty);
                        Location::Storage
                    }
                    Source::Station(s) => {
                        let out = Location::StationOutput(s.clone());
                        if self.ledger.transfer(&out, &amr_loc, &d.item, d.qty).is_err() {
                            return ActionLabel::Stay;
                        }
                        out
                    }
                };
                self.deliveries.get_mut(&did).expect("known").stage = DeliveryStage::Carrying;
                rec.emit(
                    &a.id,
                    Event::Loaded {
                        item: d.item.clone(),
                        qty: d.qty,
                        from,
                        delivery: Some(did),
                    },
                );
                let port = self.workspace.station(&d.dest).expect("known station").port;
                self.amrs[ai].route = self.amr_route(ai, port).unwrap_or_default();
                ActionLabel::Pick
            }
            DeliveryStage::Carrying => {
                let port = self.workspace.station(&d.dest).expect("known station").port;
                if a.pos != port {
                    self.amrs[ai].route = self.amr_route(ai, port).unwrap_or_default();
                    return ActionLabel::Stay;
                }
                let to = Location::StationInput(d.dest.clone());
                self.ledger
                    .transfer(&amr_loc, &to, &d.item, d.qty)
                    .expect("carried payload is on board");
                let dm = self.deliveries.get_mut(&did).expect("known");
                dm.stage = DeliveryStage::Done;
                dm.carrier = None;
                self.amrs[ai].delivery = None;
                rec.emit(
                    &a.id,
                    Event::Unloaded {
                        item: d.item,
                        qty: d.qty,
                        to,
                        delivery: Some(did),
                    },
                );
                ActionLabel::Place
            }
            _ => ActionLabel::Stay,
        }
    }

    fn act_worker(
        &mut self,
        wi: usize,
        draw: f64,
        occupied: &HashSet<Coord>,
        claimed: &mut HashSet<Coord>,
        rec: &mut Recorder,
    ) -> ActionLabel {
        if let Some(script) = self.workers[wi].script.clone() {
            let w = &self.workers[wi];
            let action = script.action(self.tick, w.script_cursor);
            if let Some(dir) = action.direction() {
                let next = w.pos.step(dir);
                if !self.workspace.traversable(next) || occupied.contains(&next) || claimed.contains(&next) {
                    return ActionLabel::Stay;
                }
                return self.move_worker(wi, next, dir, claimed, rec);
            }
            self.workers[wi].script_cursor += 1;
            return action;
        }
        if matches!(self.workers[wi].task, WorkerTask::Processing { .. }) {
            self.advance_processing(wi, rec)
                .expect("work in progress is on hand");
            return ActionLabel::Process;
        }
        if draw < self.constants().hesitation {
            return ActionLabel::Stay;
        }
        if self.workers[wi].task == WorkerTask::None {
            self.workers[wi].task = self.choose_task(wi);
        }
        let WorkerTask::GoTo { dest, purpose, path } = self.workers[wi].task.clone() else {
            return ActionLabel::Stay;
        };
        if self.arrived(wi, &purpose, dest) {
            return self.perform(wi, purpose, rec);
        }
        let patience = self.constants().patience;
        let mut path = path;
        if path.is_empty() {
            let avoid = self.workers[wi].blocked_for > 0;
            path = self.worker_route(wi, dest, avoid).unwrap_or_default();
            self.set_path(wi, path.clone());
            if path.is_empty() {
                self.workers[wi].blocked_for += 1;
                return ActionLabel::Stay;
            }
        }
        let next = path[0];
        let dir = self.workers[wi].pos.direction_to(next);
        let free = !occupied.contains(&next) && !claimed.contains(&next) && self.workspace.traversable(next);
        match dir {
            Some(dir) if free => {
                path.remove(0);
                self.set_path(wi, path);
                self.workers[wi].blocked_for = 0;
                self.move_worker(wi, next, dir, claimed, rec)
            }
            _ => {
                let w = &mut self.workers[wi];
                w.blocked_for += 1;
                if dir.is_none() || w.blocked_for >= patience {
                    self.set_path(wi, Vec::new());
                }
                ActionLabel::Stay
            }
        }
    }

    fn set_path(&mut self, wi: usize, new_path: Vec<Coord>) {
        if let WorkerTask::GoTo { path, .. } = &mut self.workers[wi].task {
            *path = new_path;
        }
    }

    fn move_worker(
        &mut self,
        wi: usize,
        next: Coord,
        dir: super::Direction,
        claimed: &mut HashSet<Coord>,
        rec: &mut Recorder,
    ) -> ActionLabel {
        let w = &mut self.workers[wi];
        let from = w.pos;
        w.pos = next;
        if w.script.is_some() {
            w.script_cursor += 1;
        }
        claimed.insert(next);
        let id = w.id.clone();
        rec.emit(&id, Event::Moved { from, to: next });
        ActionLabel::from_direction(dir)
    }

    fn choose_task(&self, wi: usize) -> WorkerTask {
        let w = &self.workers[wi];
        let go = |dest: Coord, purpose: Purpose| WorkerTask::GoTo {
            dest,
            purpose,
            path: Vec::new(),
        };
        let stations: Vec<_> = w
            .stations
            .iter()
            .filter_map(|s| self.workspace.station(s))
            .collect();
        for s in &stations {
            let Some(&target) = self.goal.get(&s.product) else {
                continue;
            };
            let ready = self
                .ledger
                .count(&Location::StationOutput(s.id.clone()), &s.product);
            let done = self.shipped.get(&s.product).copied().unwrap_or(0);
            let carried: u32 = self
                .workers
                .iter()
                .map(|o| self.ledger.count(&Location::Worker(o.id.clone()), &s.product))
                .sum();
            if ready > 0 && done + carried < target {
                return go(s.workbench, Purpose::PickProduct(s.id.clone()));
            }
        }
        for s in &stations {
            if self.can_process(&s.id) {
                return go(s.workbench, Purpose::Process(s.id.clone()));
            }
        }
        match stations.first() {
            Some(s) if !stations.iter().any(|s| s.workbench == w.pos) => go(s.workbench, Purpose::Wait),
            _ => WorkerTask::None,
        }
    }

    fn arrived(&self, wi: usize, purpose: &Purpose, dest: Coord) -> bool {
        let pos = self.workers[wi].pos;
        match purpose {
            Purpose::TakeoverPickup(_) => pos.manhattan(dest) <= 1,
            Purpose::TakeoverDrop(d) => {
                let s = self
                    .workspace
                    .station(&self.deliveries[d].dest)
                    .expect("known station");
                pos.chebyshev(s.port) <= 1 || pos.chebyshev(s.workbench) <= 1
            }
            _ => pos == dest,
        }
    }

    fn perform(&mut self, wi: usize, purpose: Purpose, rec: &mut Recorder) -> ActionLabel {
        let id = self.workers[wi].id.clone();
        let me = Location::Worker(id.clone());
        self.workers[wi].task = WorkerTask::None;
        match purpose {
            Purpose::Wait => ActionLabel::Stay,
            Purpose::Process(s) => {
                if !self.can_process(&s) || self.process_at_station(&id, &s, rec).is_err() {
                    return ActionLabel::Stay;
                }
                self.advance_processing(wi, rec)
                    .expect("work in progress is on hand");
                ActionLabel::Process
            }
            Purpose::PickProduct(s) => {
                let product = self.workspace.station(&s).expect("known station").product.clone();
                let out = Location::StationOutput(s);
                if self.ledger.transfer(&out, &me, &product, 1).is_err() {
                    return ActionLabel::Stay;
                }
                rec.emit(
                    &id,
                    Event::Loaded {
                        item: product,
                        qty: 1,
                        from: out,
                        delivery: None,
                    },
                );
                self.workers[wi].task = WorkerTask::GoTo {
                    dest: self.workspace.dock,
                    purpose: Purpose::Ship,
                    path: Vec::new(),
                };
                ActionLabel::Pick
            }
            Purpose::Ship => {
                let carried = self.ledger.contents(&me);
                for (product, qty) in carried {
                    self.ledger
                        .ship(&me, &product, qty)
                        .expect("carried items are on hand");
                    *self.shipped.entry(product.clone()).or_default() += qty;
                    rec.emit(&id, Event::Shipped { product, qty });
                }
                ActionLabel::Place
            }
            Purpose::TakeoverPickup(did) => {
                let d = self.deliveries[&did].clone();
                let pos = self.workers[wi].pos;
                let holder = self
                    .amrs
                    .iter()
                    .find(|a| {
                        a.pos.manhattan(pos) <= 1
                            && self.ledger.count(&Location::Amr(a.id.clone()), &d.item) >= d.qty
                    })
                    .map(|a| a.id.clone());
                let Some(holder) = holder else {
                    return ActionLabel::Stay;
                };
                let from = Location::Amr(holder);
                self.ledger
                    .transfer(&from, &me, &d.item, d.qty)
                    .expect("stranded payload is on board");
                rec.emit(
                    &id,
                    Event::Loaded {
                        item: d.item.clone(),
                        qty: d.qty,
                        from,
                        delivery: Some(did),
                    },
                );
                let port = self.workspace.station(&d.dest).expect("known station").port;
                self.workers[wi].task = WorkerTask::GoTo {
                    dest: port,
                    purpose: Purpose::TakeoverDrop(did),
                    path: Vec::new(),
                };
                ActionLabel::Pick
            }
            Purpose::TakeoverDrop(did) => {
                let d = self.deliveries[&did].clone();
                let to = Location::StationInput(d.dest.clone());
                self.ledger
                    .transfer(&me, &to, &d.item, d.qty)
                    .expect("taken-over payload is on hand");
                let dm = self.deliveries.get_mut(&did).expect("known");
                dm.stage = DeliveryStage::Done;
                dm.carrier = None;
                rec.emit(
                    &id,
                    Event::Unloaded {
                        item: d.item,
                        qty: d.qty,
                        to,
                        delivery: Some(did),
                    },
                );
                ActionLabel::Place
            }
        }
    }

    fn record_phase(
        &mut self,
        visible: &BTreeMap<String, Vec<String>>,
        actions: &BTreeMap<String, ActionLabel>,
        rec: &mut Recorder,
    ) {
        let t = self.tick;
        // Workers keep refining their models of the AMRs they watched.
        for w in self.workers.clone() {
            for subject in visible.get(&w.id).into_iter().flatten() {
                if !self.is_amr(subject) {
                    continue;
                }
                let ctx = self.coevo.observations.last_before(subject, t);
                if let Some(p) = self.coevo.registry.get_mut(&w.id, subject) {
                    p.observe(ctx, actions[subject]);
                }
            }
        }
        for (id, &actual) in actions {
            let pos = self.agent(id).expect("known agent").0;
            self.coevo
                .observations
                .record(id, ObservationRecord { tick: t, actual })
                .expect("one observation per tick and agent");
            rec.emit(id, Event::Observed { actual, pos });
        }
    }

    /// Divergence evaluation, novelty guard and gated retraining for every
    /// working AMR.
    fn learning_round(&mut self, rec: &mut Recorder) {
        let t = self.tick;
        let cfg = self.coevo.config.clone();
        let first = (t + 1).saturating_sub(cfg.window);
        let subjects: Vec<String> = self.workers.iter().map(|w| w.id.clone()).collect();
        for ai in 0..self.amrs.len() {
            if self.amrs[ai].failed {
                continue;
            }
            let owner = self.amrs[ai].id.clone();
            let mut reports = Vec::new();
            for subject in &subjects {
                let Ok(r) = evaluate_divergence(
                    &self.coevo.predictions,
                    &self.coevo.observations,
                    &owner,
                    subject,
                    first,
                    t,
                ) else {
                    continue;
                };
                rec.emit(
                    &owner,
                    Event::DivergenceEvaluated {
                        subject: subject.clone(),
                        first_tick: r.first_tick,
                        last_tick: r.last_tick,
                        matched: r.matched,
                        total: r.total,
                        accuracy: r.accuracy,
                    },
                );
                if self
                    .coevo
                    .registry
                    .get(&owner, subject)
                    .is_some_and(|p| p.version >= 2)
                {
                    reports.push(r);
                }
            }
            let decision = novelty_guard(&reports, cfg.theta);
            let old = self.amrs[ai].novelty;
            if decision.level != old {
                if old != NoveltyLevel::Normal {
                    rec.emit(
                        &owner,
                        Event::Resumed {
                            reason: ResumeReason::NoveltyCleared,
                        },
                    );
                }
                let mode = match decision.level {
                    NoveltyLevel::Stop => Some(SuppressMode::Stop),
                    NoveltyLevel::Slowdown => Some(SuppressMode::Slowdown),
                    NoveltyLevel::Normal => None,
                };
                if let Some(mode) = mode {
                    rec.emit(
                        &owner,
                        Event::Suppressed {
                            reason: SuppressReason::Novelty,
                            mode,
                            subject: decision.subject.clone(),
                            accuracy: decision.accuracy,
                        },
                    );
                }
                self.amrs[ai].novelty = decision.level;
                if decision.level == NoveltyLevel::Stop {
                    if let Some(subject) = &decision.subject {
                        self.send_interruption(rec, &owner, subject, "novelty_stop");
                    }
                }
            }
            let Some(lc) = self.coevo.learning.get(&owner).cloned() else {
                continue;
            };
            if !lc.enabled {
                continue;
            }
            for subject in &subjects {
                let Some(incumbent) = self.coevo.registry.get(&owner, subject).cloned() else {
                    continue;
                };
                let Ok(split) = split_window(&self.coevo.observations, subject, &lc, t) else {
                    continue;
                };
                let Ok(candidate) = train_candidate(&split, &lc, &incumbent) else {
                    continue;
                };
                rec.emit(
                    &owner,
                    Event::CandidateTrained {
                        subject: subject.clone(),
                        candidate_version: candidate.version,
                        samples: split.train.len() as u32,
                    },
                );
                let id = self.coevo.next_evaluation;
                self.coevo.next_evaluation += 1;
                let Ok(eval) = pre_evaluate(id, &candidate, &incumbent, &split.holdout) else {
                    continue;
                };
                rec.emit(
                    &owner,
                    Event::CandidateEvaluated {
                        evaluation_id: id,
                        subject: subject.clone(),
                        candidate_version: eval.candidate_version,
                        candidate_accuracy: eval.candidate_accuracy,
                        incumbent_accuracy: eval.incumbent_accuracy,
                        verdict: eval.verdict,
                    },
                );
                if eval.verdict != Verdict::Pass {
                    continue;
                }
                let promotion = self
                    .coevo
                    .registry
                    .promote(Some(&eval), candidate)
                    .expect("pass verdict authorizes promotion");
                rec.emit(
                    &owner,
                    Event::PredictorPromoted {
                        subject: subject.clone(),
                        evaluation_id: promotion.evaluation_id,
                        from_version: promotion.from_version,
                        to_version: promotion.to_version,
                    },
                );
                self.notify_change(
                    rec,
                    &owner,
                    subject,
                    ChangeTopic::Predictor,
                    format!("v{}", promotion.from_version),
                    format!("v{}", promotion.to_version),
                );
            }
        }
    }
}

fn topic_name(t: ChangeTopic) -> &'static str {
    match t {
        ChangeTopic::Predictor => "predictor",
        ChangeTopic::SupplyInterval => "supply_interval",
        ChangeTopic::Route => "route",
    }
}
