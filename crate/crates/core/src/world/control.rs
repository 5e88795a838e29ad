use std::collections::{BTreeMap, HashSet};

use super::{adapt_to_skill, Coord, Delivery, DeliveryStage, Purpose, Source, WorkerTask, WorldState};
use crate::coevo::{apply_preference, ChangeTopic, MessageKind, MessagePayload};
use crate::trace::{Event, Recorder, CONTROL_CENTER};

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    CreateDelivery {
        id: u64,
        item: String,
        qty: u32,
        source: Source,
        dest: String,
    },
    Assign {
        amr: String,
        delivery: u64,
        pickup: Coord,
        route: Vec<Coord>,
    },
    Requeue {
        amr: String,
        delivery: u64,
    },
    Takeover {
        worker: String,
        delivery: u64,
        amr: String,
    },
    SupplyInterval {
        worker: String,
        before: u32,
        after: u32,
        cause: String,
    },
    Margin {
        worker: String,
        margin: u32,
    },
    Replan {
        amr: String,
        route: Vec<Coord>,
        reason: String,
    },
}

impl WorldState {
    /// Skill-derived (interval, margin) for a worker, before preferences,
    /// with the interval shortened when the worker has recently been fast.
    pub fn skill_supply(&self, worker: &str) -> (u32, u32, bool) {
        let w = self.worker(worker).expect("known worker");
        let c = self.constants();
        let (interval, margin) = adapt_to_skill(c, w.skill).expect("skill kept in range");
        let fast = w.recent_ratios.len() >= c.rolling_window
            && w.recent_ratios.iter().sum::<f64>() / (w.recent_ratios.len() as f64) < c.fast_ratio;
        if fast {
            (interval.saturating_sub(1).max(1), margin, true)
        } else {
            (interval, margin, false)
        }
    }

    /// Effective (interval, margin) after the worker's recorded preference.
    pub fn effective_supply(&self, worker: &str) -> (u32, u32, bool) {
        let (interval, margin, fast) = self.skill_supply(worker);
        match self.coevo.preferences.get(worker) {
            Some(p) => {
                let out = apply_preference(p, margin, interval, self.constants().min_margin);
                (out.effective_interval, out.effective_margin, fast)
            }
            None => (interval, margin, fast),
        }
    }

    /// The control center's view of what should change. Pure: the state is
    /// not modified, and applying the result makes the next call return
    /// nothing unless the world moves on.
    pub fn control_center_replan(&self) -> Vec<Instruction> {
        let mut out = Vec::new();
        let mut busy_workers: HashSet<String> = HashSet::new();
        let mut busy_amrs: HashSet<String> = HashSet::new();

        // Failed AMRs: loaded payloads go to a worker, unloaded jobs back to the queue.
        for a in self.amrs.iter().filter(|a| a.failed) {
            let Some(did) = a.delivery else { continue };
            let d = &self.deliveries[&did];
            match d.stage {
                DeliveryStage::Pending | DeliveryStage::ToPickup => out.push(Instruction::Requeue {
                    amr: a.id.clone(),
                    delivery: did,
                }),
                DeliveryStage::Carrying | DeliveryStage::Stranded => {
                    let best = self
                        .workers
                        .iter()
                        .filter(|w| w.is_available() && !busy_workers.contains(&w.id))
                        .filter_map(|w| {
                            let mut blocked = self.occupied();
                            blocked.remove(&w.pos);
                            blocked.remove(&a.pos);
                            self.workspace
                                .distance(w.pos, a.pos, &blocked)
                                .map(|d| (d, w.id.clone()))
                        })
                        .min();
                    if let Some((_, worker)) = best {
                        busy_workers.insert(worker.clone());
                        out.push(Instruction::Takeover {
                            worker,
                            delivery: did,
                            amr: a.id.clone(),
                        });
                    }
                }
                _ => {}
            }
        }

        // Supply intervals and margins per worker.
        for w in &self.workers {
            let (interval, margin, fast) = self.effective_supply(&w.id);
            let before = self.supply_interval.get(&w.id).copied().unwrap_or(interval);
            if before != interval {
                out.push(Instruction::SupplyInterval {
                    worker: w.id.clone(),
                    before,
                    after: interval,
                    cause: if fast { "fast_processing" } else { "skill" }.into(),
                });
            }
            if self.margins.get(&w.id) != Some(&margin) {
                out.push(Instruction::Margin {
                    worker: w.id.clone(),
                    margin,
                });
            }
        }

        // Stale routes.
        let patience = self.constants().patience;
        for (ai, a) in self.amrs.iter().enumerate() {
            if !a.is_active() || a.route.is_empty() {
                continue;
            }
            let blocked_cell = a.route.iter().any(|&c| self.workspace.is_obstacle(c));
            if !blocked_cell && a.halted_for < patience {
                continue;
            }
            let goal = *a.route.last().expect("non-empty route");
            if let Some(route) = self.amr_route(ai, goal) {
                if route != a.route {
                    busy_amrs.insert(a.id.clone());
                    out.push(Instruction::Replan {
                        amr: a.id.clone(),
                        route,
                        reason: if blocked_cell { "obstacle" } else { "halted" }.into(),
                    });
                }
            }
        }

        // New deliveries, then dispatch of everything pending.
        let c = self.constants();
        let mut next_id = self.next_delivery;
        let mut pending: Vec<Delivery> = self
            .deliveries
            .values()
            .filter(|d| d.stage == DeliveryStage::Pending)
            .cloned()
            .collect();
        for r in &out {
            if let Instruction::Requeue { delivery, .. } = r {
                let mut d = self.deliveries[delivery].clone();
                d.stage = DeliveryStage::Pending;
                pending.push(d);
            }
        }
        let mut extra_inbound: BTreeMap<(String, String), u32> = BTreeMap::new();
        let mut extra_reserved: BTreeMap<String, u32> = BTreeMap::new();
        for s in &self.workspace.stations {
            if !self.product_needed(&s.product) {
                continue;
            }
            let input = crate::trace::Location::StationInput(s.id.clone());
            let mut total = self.ledger.total(&input) + self.inbound(&s.id, None);
            for (item, &q) in &self.products[&s.product].bom {
                let key = (s.id.clone(), item.clone());
                let have = self.ledger.count(&input, item)
                    + self.inbound(&s.id, Some(item))
                    + extra_inbound.get(&key).copied().unwrap_or(0);
                let want = (c.buffer_lots * q).saturating_sub(have);
                let room = s.input_capacity.saturating_sub(total);
                // Whole lots only, as many as the buffer target and capacity allow.
                let mut qty = want.div_ceil(q).min(room / q) * q;
                if qty == 0 {
                    continue;
                }
                let source = match self.workspace.station_producing(item) {
                    Some(p) => {
                        let out_loc = crate::trace::Location::StationOutput(p.id.clone());
                        let free = self.ledger.count(&out_loc, item).saturating_sub(
                            self.reserved_output(&p.id) + extra_reserved.get(&p.id).copied().unwrap_or(0),
                        );
                        qty = qty.min(free / q * q);
                        if qty == 0 {
                            continue;
                        }
                        *extra_reserved.entry(p.id.clone()).or_default() += qty;
                        Source::Station(p.id.clone())
                    }
                    None => Source::Storage,
                };
                let d = Delivery {
                    id: next_id,
                    item: item.clone(),
                    qty,
                    source: source.clone(),
                    dest: s.id.clone(),
                    stage: DeliveryStage::Pending,
                    carrier: None,
                    pickup: None,
                };
                out.push(Instruction::CreateDelivery {
                    id: next_id,
                    item: item.clone(),
                    qty,
                    source,
                    dest: s.id.clone(),
                });
                pending.push(d);
                next_id += 1;
                total += qty;
                *extra_inbound.entry(key).or_default() += qty;
            }
        }
        pending.sort_by_key(|d| d.id);
        let requeued: HashSet<String> = out
            .iter()
            .filter_map(|r| match r {
                Instruction::Requeue { amr, .. } => Some(amr.clone()),
                _ => None,
            })
            .collect();
        for d in pending {
            let mut best: Option<(u32, usize, Coord)> = None;
            for (ai, a) in self.amrs.iter().enumerate() {
                if !a.is_active()
                    || a.delivery.is_some()
                    || busy_amrs.contains(&a.id)
                    || requeued.contains(&a.id)
                {
                    continue;
                }
                let dist = self.workspace.distances(a.pos, &HashSet::new());
                let at = |p: Coord| dist[(p.y * self.workspace.width + p.x) as usize];
                let pickup = match &d.source {
                    Source::Storage => self
                        .workspace
                        .storage
                        .iter()
                        .copied()
                        .filter(|&p| at(p) != u32::MAX)
                        .min_by_key(|&p| (at(p), p)),
                    Source::Station(s) => {
                        let port = self.workspace.station(s).expect("known station").port;
                        (at(port) != u32::MAX).then_some(port)
                    }
                };
                let Some(pickup) = pickup else { continue };
                if best.is_none_or(|(bd, _, _)| at(pickup) < bd) {
                    best = Some((at(pickup), ai, pickup));
                }
            }
            let Some((_, ai, pickup)) = best else { continue };
            let Some(route) = self.amr_route(ai, pickup) else {
                continue;
            };
            busy_amrs.insert(self.amrs[ai].id.clone());
            out.push(Instruction::Assign {
                amr: self.amrs[ai].id.clone(),
                delivery: d.id,
                pickup,
                route,
            });
        }
        out
    }

    /// Carries out instructions, emitting the matching events and, with
    /// co-evolution enabled, notifying the affected workers.
    pub fn apply_instructions(&mut self, instructions: Vec<Instruction>, rec: &mut Recorder) {
        for ins in instructions {
            match ins {
                Instruction::CreateDelivery {
                    id,
                    item,
                    qty,
                    source,
                    dest,
                } => {
                    self.deliveries.insert(
                        id,
                        Delivery {
                            id,
                            item,
                            qty,
                            source,
                            dest,
                            stage: DeliveryStage::Pending,
                            carrier: None,
                            pickup: None,
                        },
                    );
                    self.next_delivery = self.next_delivery.max(id + 1);
                }
                Instruction::Assign {
                    amr,
                    delivery,
                    pickup,
                    route,
                } => {
                    let ai = self.amr_index(&amr).expect("known AMR");
                    let d = self.deliveries.get_mut(&delivery).expect("known delivery");
                    d.stage = DeliveryStage::ToPickup;
                    d.carrier = Some(amr.clone());
                    d.pickup = Some(pickup);
                    let a = &mut self.amrs[ai];
                    a.delivery = Some(delivery);
                    a.route = route;
                    a.halted_for = 0;
                }
                Instruction::Requeue { amr, delivery } => {
                    let ai = self.amr_index(&amr).expect("known AMR");
                    self.amrs[ai].delivery = None;
                    let d = self.deliveries.get_mut(&delivery).expect("known delivery");
                    d.stage = DeliveryStage::Pending;
                    d.carrier = None;
                    d.pickup = None;
                }
                Instruction::Takeover {
                    worker,
                    delivery,
                    amr,
                } => {
                    let ai = self.amr_index(&amr).expect("known AMR");
                    let wi = self.worker_index(&worker).expect("known worker");
                    self.amrs[ai].delivery = None;
                    let d = self.deliveries.get_mut(&delivery).expect("known delivery");
                    d.stage = DeliveryStage::Takeover;
                    d.carrier = Some(worker.clone());
                    let (item, qty, station) = (d.item.clone(), d.qty, d.dest.clone());
                    let target = self.amrs[ai].pos;
                    self.workers[wi].task = WorkerTask::GoTo {
                        dest: target,
                        purpose: Purpose::TakeoverPickup(delivery),
                        path: Vec::new(),
                    };
                    rec.emit(
                        CONTROL_CENTER,
                        Event::TakeoverAssigned {
                            worker: worker.clone(),
                            delivery,
                            from_amr: amr,
                            item,
                            qty,
                            station,
                        },
                    );
                    self.send_interruption(rec, CONTROL_CENTER, &worker, "transport_takeover");
                }
                Instruction::SupplyInterval {
                    worker,
                    before,
                    after,
                    cause,
                } => {
                    self.supply_interval.insert(worker.clone(), after);
                    rec.emit(
                        CONTROL_CENTER,
                        Event::SupplyAdjusted {
                            worker: worker.clone(),
                            before,
                            after,
                            cause,
                        },
                    );
                    self.notify_change(
                        rec,
                        CONTROL_CENTER,
                        &worker,
                        ChangeTopic::SupplyInterval,
                        before.to_string(),
                        after.to_string(),
                    );
                }
                Instruction::Margin { worker, margin } => {
                    self.margins.insert(worker, margin);
                }
                Instruction::Replan { amr, route, reason } => {
                    let ai = self.amr_index(&amr).expect("known AMR");
                    let station = self.amrs[ai].delivery.map(|d| self.deliveries[&d].dest.clone());
                    let before = self.amrs[ai].route.len();
                    let length = route.len() as u32;
                    let a = &mut self.amrs[ai];
                    a.route = route;
                    a.halted_for = 0;
                    rec.emit(
                        CONTROL_CENTER,
                        Event::RouteReplanned {
                            amr: amr.clone(),
                            station: station.clone(),
                            reason,
                            length,
                        },
                    );
                    if let Some(w) = station.and_then(|s| self.station_worker(&s).map(|w| w.id.clone())) {
                        self.notify_change(
                            rec,
                            CONTROL_CENTER,
                            &w,
                            ChangeTopic::Route,
                            format!("{amr}:{before}"),
                            format!("{amr}:{length}"),
                        );
                    }
                }
            }
        }
    }

    pub(crate) fn notify_change(
        &mut self,
        rec: &mut Recorder,
        sender: &str,
        worker: &str,
        topic: ChangeTopic,
        before: String,
        after: String,
    ) {
        self.send(
            rec,
            sender,
            vec![worker.to_string()],
            MessagePayload::ChangeNotification { topic, before, after },
            vec![worker.to_string()],
        );
    }

    /// Sends an interruption notice unless the worker's budget for the
    /// current 100-tick bucket is used up.
    pub(crate) fn send_interruption(&mut self, rec: &mut Recorder, sender: &str, worker: &str, reason: &str) {
        if !self.coevo_enabled() || self.worker(worker).is_none() {
            return;
        }
        let key = (worker.to_string(), self.tick / 100);
        let used = self.coevo.interruptions.get(&key).copied().unwrap_or(0);
        if used >= self.coevo.config.interruption_budget {
            return;
        }
        self.coevo.interruptions.insert(key, used + 1);
        self.send(
            rec,
            sender,
            vec![worker.to_string()],
            MessagePayload::InterruptionNotice {
                reason: reason.into(),
            },
            vec![worker.to_string()],
        );
    }

    /// Puts a message on the bus (co-evolution only) and records it.
    pub(crate) fn send(
        &mut self,
        rec: &mut Recorder,
        sender: &str,
        receivers: Vec<String>,
        payload: MessagePayload,
        affected: Vec<String>,
    ) {
        if !self.coevo_enabled() {
            return;
        }
        let mut known = self.agent_ids();
        known.insert(CONTROL_CENTER.to_string());
        let kind: MessageKind = payload.kind();
        if let Ok(message) = self
            .coevo
            .bus
            .send(&known, self.tick, sender, receivers, kind, payload, affected)
        {
            rec.emit(sender, Event::MessageSent { message });
        }
    }
}
