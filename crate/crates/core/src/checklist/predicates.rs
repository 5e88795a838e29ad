use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{CheckParams, Evidence};
use crate::coevo::{ChangeTopic, MessageKind, MessagePayload, Verdict};
use crate::trace::{AgentClass, Event, ResumeReason, SuppressReason, TraceEvent};

const WITNESS_LIMIT: usize = 10;

/// Read-only view of a trace with the agent roster resolved.
#[derive(Debug)]
pub struct TraceIndex<'a> {
    pub events: &'a [TraceEvent],
    classes: HashMap<String, AgentClass>,
    stations: BTreeMap<String, Vec<String>>,
    /// One past the last tick in the trace.
    end: u64,
}

impl<'a> TraceIndex<'a> {
    pub fn new(events: &'a [TraceEvent]) -> Self {
        let mut classes = HashMap::new();
        let mut stations: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for e in events {
            if let Event::RunStarted { agents, .. } = &e.event {
                for a in agents {
                    classes.insert(a.id.clone(), a.class);
                    for s in &a.stations {
                        stations.entry(s.clone()).or_default().push(a.id.clone());
                    }
                }
            }
        }
        let end = events.last().map_or(0, |e| e.tick + 1);
        TraceIndex {
            events,
            classes,
            stations,
            end,
        }
    }

    pub fn is_amr(&self, id: &str) -> bool {
        self.classes.get(id) == Some(&AgentClass::Amr)
    }

    pub fn is_worker(&self, id: &str) -> bool {
        self.classes.get(id) == Some(&AgentClass::Worker)
    }

    /// Tick bounds `[lo, hi)` of the first and final quarter.
    fn quarters(&self) -> Option<((u64, u64), (u64, u64))> {
        let q = self.end / 4;
        (q > 0).then(|| ((0, q), (self.end - q, self.end)))
    }

    fn messages(&self) -> impl Iterator<Item = (&TraceEvent, &crate::coevo::Message)> {
        self.events.iter().filter_map(|e| match &e.event {
            Event::MessageSent { message } => Some((e, message)),
            _ => None,
        })
    }

    fn any(&self, pred: impl Fn(&Event) -> bool) -> Option<&TraceEvent> {
        self.events.iter().find(|e| pred(&e.event))
    }
}

fn r(e: &TraceEvent) -> String {
    format!("{}:{}", e.tick, e.seq)
}

fn evidence(id: &str, satisfied: bool, mut witness: Vec<String>, note: impl Into<String>) -> Evidence {
    witness.truncate(WITNESS_LIMIT);
    Evidence {
        metric: id.into(),
        satisfied,
        witness,
        note: note.into(),
    }
}

fn no_evidence(id: &str) -> Evidence {
    evidence(id, false, Vec::new(), "no evidence")
}

pub(super) fn check(id: &str, ix: &TraceIndex, p: &CheckParams) -> Evidence {
    if ix.events.is_empty() {
        return no_evidence(id);
    }
    match id {
        "remember_recent_interactions" => remember(id, ix),
        "learn_from_user_behavior" => learn(id, ix),
        "update_and_adapt_cautiously" => gating(id, ix),
        "encourage_granular_feedback" => feedback(id, ix),
        "convey_consequences_of_user_actions" => consequences(id, ix, p),
        "provide_global_controls" => global_controls(id, ix),
        "notify_users_about_changes" => notify_changes(id, ix, p),
        "novel_situations" => novelty(id, ix),
        "context_aware_communication" => targeted(id, ix),
        "performance_vs_preference" => preference(id, ix),
        "interruptions_and_cognitive_burden" => interruptions(id, ix, p),
        "robustness" => robustness(id, ix),
        "performance_improvement" => throughput(id, ix),
        _ => evidence(id, false, Vec::new(), "no predicate bound to this metric"),
    }
}

/// Whether the mechanism behind a statistical metric ran at all; used to
/// tell "employed but not confirmed" from "not employed".
pub(super) fn mechanism_exercised(id: &str, ix: &TraceIndex) -> bool {
    match id {
        "learn_from_user_behavior" => ix.any(|e| matches!(e, Event::PredictorPromoted { .. })).is_some(),
        "performance_improvement" => ix
            .any(|e| matches!(e, Event::ProgressReported { .. } | Event::SupplyAdjusted { .. }))
            .is_some(),
        _ => false,
    }
}

fn remember(id: &str, ix: &TraceIndex) -> Evidence {
    let pred = ix.any(|e| matches!(e, Event::Predicted { .. }));
    let obs = ix.any(|e| matches!(e, Event::Observed { .. }));
    let (Some(pred), Some(obs)) = (pred, obs) else {
        return no_evidence(id);
    };
    let windows: HashMap<&str, u64> = ix
        .events
        .iter()
        .filter_map(|e| match &e.event {
            Event::LearningConfigured { window, .. } => Some((e.actor.as_str(), *window)),
            _ => None,
        })
        .collect();
    let retained = ix.events.iter().find(|e| match &e.event {
        Event::DivergenceEvaluated {
            first_tick,
            last_tick,
            ..
        } => windows
            .get(e.actor.as_str())
            .is_some_and(|&w| last_tick + 1 - first_tick >= w && last_tick + 1 >= w),
        _ => false,
    });
    match retained {
        Some(d) => evidence(
            id,
            true,
            vec![r(pred), r(obs), r(d)],
            "predictions and observations recorded; a full configured window was evaluated",
        ),
        None => evidence(
            id,
            false,
            vec![r(pred), r(obs)],
            "logs never covered a full configured window",
        ),
    }
}

/// Accuracy of AMR predictions of worker actions in `[lo, hi)`.
pub fn worker_prediction_accuracy(ix: &TraceIndex, lo: u64, hi: u64) -> (u32, u32) {
    let mut actual: HashMap<(&str, u64), _> = HashMap::new();
    for e in ix.events.iter().filter(|e| (lo..hi).contains(&e.tick)) {
        if let Event::Observed { actual: a, .. } = &e.event {
            actual.insert((e.actor.as_str(), e.tick), *a);
        }
    }
    let (mut matched, mut total) = (0, 0);
    for e in ix.events.iter().filter(|e| (lo..hi).contains(&e.tick)) {
        if let Event::Predicted {
            subject, predicted, ..
        } = &e.event
        {
            if !ix.is_amr(&e.actor) || !ix.is_worker(subject) {
                continue;
            }
            if let Some(a) = actual.get(&(subject.as_str(), e.tick)) {
                total += 1;
                matched += u32::from(a == predicted);
            }
        }
    }
    (matched, total)
}

fn learn(id: &str, ix: &TraceIndex) -> Evidence {
    let Some(((a0, a1), (b0, b1))) = ix.quarters() else {
        return no_evidence(id);
    };
    let (m0, t0) = worker_prediction_accuracy(ix, a0, a1);
    let (m1, t1) = worker_prediction_accuracy(ix, b0, b1);
    if t0 == 0 || t1 == 0 {
        return no_evidence(id);
    }
    let (first, last) = (f64::from(m0) / f64::from(t0), f64::from(m1) / f64::from(t1));
    let promotions: Vec<String> = ix
        .events
        .iter()
        .filter(|e| matches!(e.event, Event::PredictorPromoted { .. }))
        .map(r)
        .collect();
    evidence(
        id,
        last > first && !promotions.is_empty(),
        promotions,
        format!("worker-action prediction accuracy {first:.3} in the first quarter, {last:.3} in the final quarter"),
    )
}

/// Scans for predictor version changes that were not authorized by a
/// preceding passing evaluation, and for learning activity on workers.
pub fn gating_violations<'a>(ix: &TraceIndex<'a>) -> (Vec<&'a TraceEvent>, Vec<&'a TraceEvent>) {
    let mut violations = Vec::new();
    let mut promotions = Vec::new();
    let mut version: HashMap<(&str, &str), u32> = HashMap::new();
    // Passing evaluations not yet used: (owner, evaluation id) -> (subject, candidate version).
    let mut passes: HashMap<(&str, u64), (&str, u32)> = HashMap::new();
    for e in ix.events {
        match &e.event {
            Event::LearningConfigured { .. } if !ix.is_amr(&e.actor) => violations.push(e),
            Event::CandidateEvaluated {
                evaluation_id,
                subject,
                candidate_version,
                verdict: Verdict::Pass,
                ..
            } => {
                passes.insert(
                    (e.actor.as_str(), *evaluation_id),
                    (subject.as_str(), *candidate_version),
                );
            }
            Event::PredictorPromoted {
                subject,
                evaluation_id,
                from_version,
                to_version,
            } => {
                let key = (e.actor.as_str(), subject.as_str());
                let current = version.get(&key).copied().unwrap_or(1);
                let authorized = passes
                    .remove(&(e.actor.as_str(), *evaluation_id))
                    .is_some_and(|(s, v)| s == subject && v == *to_version);
                if !ix.is_amr(&e.actor)
                    || !authorized
                    || *from_version != current
                    || to_version <= from_version
                {
                    violations.push(e);
                } else {
                    promotions.push(e);
                }
                version.insert(key, *to_version);
            }
            Event::Predicted {
                subject, version: v, ..
            } => {
                let key = (e.actor.as_str(), subject.as_str());
                let current = version.get(&key).copied().unwrap_or(1);
                if *v != current {
                    violations.push(e);
                    version.insert(key, *v);
                }
            }
            _ => {}
        }
    }
    (violations, promotions)
}

fn gating(id: &str, ix: &TraceIndex) -> Evidence {
    let (violations, promotions) = gating_violations(ix);
    if !violations.is_empty() {
        return evidence(
            id,
            false,
            violations.iter().map(|e| r(e)).collect(),
            format!("{} unauthorized predictor change(s)", violations.len()),
        );
    }
    if promotions.is_empty() {
        return evidence(id, false, Vec::new(), "no predictor was ever promoted");
    }
    evidence(
        id,
        true,
        promotions.iter().map(|e| r(e)).collect(),
        format!(
            "all {} promotions follow a passing pre-evaluation",
            promotions.len()
        ),
    )
}

fn feedback(id: &str, ix: &TraceIndex) -> Evidence {
    let mut requests: Vec<(&TraceEvent, &str, &str)> = Vec::new();
    let mut exchange = None;
    for (e, m) in ix.messages() {
        match m.kind {
            MessageKind::PreferenceRequest => {
                for w in &m.receivers {
                    requests.push((e, m.sender.as_str(), w.as_str()));
                }
            }
            MessageKind::PreferenceReply if exchange.is_none() => {
                exchange = requests
                    .iter()
                    .find(|(_, asker, w)| *w == m.sender && m.receivers.iter().any(|x| x == asker))
                    .map(|(req, _, _)| (r(req), r(e)));
            }
            _ => {}
        }
    }
    let honored = ix.any(|ev| {
        matches!(ev, Event::MessageReceived { kind: MessageKind::InterruptionNotice, effect, .. } if effect != "ignored")
    });
    match (exchange, honored) {
        (Some((a, b)), Some(h)) => evidence(
            id,
            true,
            vec![a, b, r(h)],
            "preference request answered and interruption notice honored",
        ),
        (None, _) => evidence(id, false, Vec::new(), "no preference request/reply exchange"),
        (_, None) => evidence(id, false, Vec::new(), "no interruption notice was honored"),
    }
}

/// First change notification on `topic` to `worker` in `[tick, tick + k]`.
fn notified<'a>(
    ix: &TraceIndex<'a>,
    workers: &[&str],
    topic: ChangeTopic,
    tick: u64,
    k: u64,
) -> Option<&'a TraceEvent> {
    ix.events
        .iter()
        .filter(|e| e.tick >= tick && e.tick <= tick + k)
        .find(|e| match &e.event {
            Event::MessageSent { message } => {
                matches!(&message.payload, MessagePayload::ChangeNotification { topic: t, .. } if *t == topic)
                    && message.receivers.iter().any(|x| workers.contains(&x.as_str()))
            }
            _ => false,
        })
}

fn consequences(id: &str, ix: &TraceIndex, p: &CheckParams) -> Evidence {
    let mut witness = Vec::new();
    let mut missed = Vec::new();
    for e in ix.events {
        let (worker, topic) = match &e.event {
            Event::PredictorPromoted { subject, .. } if ix.is_worker(subject) => {
                (subject.as_str(), ChangeTopic::Predictor)
            }
            Event::SupplyAdjusted { worker, .. } => (worker.as_str(), ChangeTopic::SupplyInterval),
            _ => continue,
        };
        match notified(ix, &[worker], topic, e.tick, p.notify_within) {
            Some(n) => {
                if witness.len() < WITNESS_LIMIT {
                    witness.push(r(e));
                    witness.push(r(n));
                }
            }
            None => missed.push(r(e)),
        }
    }
    if !missed.is_empty() {
        return evidence(
            id,
            false,
            missed,
            "change without a timely notification to the affected worker",
        );
    }
    if witness.is_empty() {
        return evidence(id, false, Vec::new(), "no predictor or supply change occurred");
    }
    evidence(
        id,
        true,
        witness,
        format!("every change was announced within {} ticks", p.notify_within),
    )
}

fn global_controls(id: &str, ix: &TraceIndex) -> Evidence {
    let configured = ix
        .events
        .iter()
        .find(|e| matches!(e.event, Event::LearningConfigured { .. }) && ix.is_amr(&e.actor));
    let mut round_trip = None;
    for (i, e) in ix.events.iter().enumerate() {
        let Event::Suppressed {
            reason: SuppressReason::Order,
            ..
        } = &e.event
        else {
            continue;
        };
        let resumed = ix.events[i..].iter().find(|x| {
            x.actor == e.actor
                && matches!(
                    x.event,
                    Event::Resumed {
                        reason: ResumeReason::Order
                    }
                )
        });
        if let Some(x) = resumed {
            round_trip = Some((r(e), r(x)));
            break;
        }
    }
    match (configured, round_trip) {
        (Some(c), Some((s, x))) => evidence(
            id,
            true,
            vec![r(c), s, x],
            "learning configured and a suppression order was honored and lifted",
        ),
        (None, _) => evidence(id, false, Vec::new(), "learning was never configured"),
        (_, None) => evidence(id, false, Vec::new(), "no honored suppression/resume round trip"),
    }
}

fn notify_changes(id: &str, ix: &TraceIndex, p: &CheckParams) -> Evidence {
    let mut witness = Vec::new();
    let mut missed = Vec::new();
    for e in ix.events {
        let Event::RouteReplanned { station: Some(s), .. } = &e.event else {
            continue;
        };
        let Some(workers) = ix.stations.get(s) else {
            continue;
        };
        let workers: Vec<&str> = workers.iter().map(String::as_str).collect();
        match notified(ix, &workers, ChangeTopic::Route, e.tick, p.notify_within) {
            Some(n) => {
                if witness.len() < WITNESS_LIMIT {
                    witness.push(r(e));
                    witness.push(r(n));
                }
            }
            None => missed.push(r(e)),
        }
    }
    if !missed.is_empty() {
        return evidence(
            id,
            false,
            missed,
            "route change not announced to the station's worker",
        );
    }
    if witness.is_empty() {
        return evidence(
            id,
            false,
            Vec::new(),
            "no route affecting a worker's station was replanned",
        );
    }
    evidence(
        id,
        true,
        witness,
        format!(
            "every replanned route was announced within {} ticks",
            p.notify_within
        ),
    )
}

fn novelty(id: &str, ix: &TraceIndex) -> Evidence {
    match ix.any(|e| {
        matches!(
            e,
            Event::Suppressed {
                reason: SuppressReason::Novelty,
                ..
            }
        )
    }) {
        Some(e) => evidence(id, true, vec![r(e)], "novelty guard suppressed or slowed an AMR"),
        None => evidence(id, false, Vec::new(), "novelty guard never triggered"),
    }
}

fn targeted(id: &str, ix: &TraceIndex) -> Evidence {
    let everyone: BTreeSet<&str> = ix.classes.keys().map(String::as_str).collect();
    let mut count = 0;
    let mut bad = Vec::new();
    let mut first = None;
    for (e, m) in ix.messages() {
        count += 1;
        first.get_or_insert(e);
        let affected: BTreeSet<&str> = m.affected.iter().map(String::as_str).collect();
        let receivers: BTreeSet<&str> = m.receivers.iter().map(String::as_str).collect();
        let others: BTreeSet<&str> = everyone.iter().copied().filter(|a| *a != m.sender).collect();
        let broadcast =
            !others.is_empty() && receivers.is_superset(&others) && !affected.is_superset(&others);
        if receivers.is_empty() || !receivers.is_subset(&affected) || broadcast {
            bad.push(r(e));
        }
    }
    if !bad.is_empty() {
        return evidence(id, false, bad, "message sent to agents it does not concern");
    }
    match first {
        Some(e) => evidence(
            id,
            true,
            vec![r(e)],
            format!("all {count} messages went to affected agents only"),
        ),
        None => evidence(id, false, Vec::new(), "no messages were sent"),
    }
}

fn preference(id: &str, ix: &TraceIndex) -> Evidence {
    let recs: Vec<String> = ix
        .events
        .iter()
        .filter(|e| matches!(e.event, Event::PreferenceRecorded { .. }))
        .map(r)
        .collect();
    if recs.is_empty() {
        return evidence(id, false, Vec::new(), "no preference was recorded");
    }
    evidence(
        id,
        true,
        recs,
        "skill-derived, preferred and effective settings reported together",
    )
}

fn interruptions(id: &str, ix: &TraceIndex, p: &CheckParams) -> Evidence {
    let mut per: BTreeMap<(&str, u64), Vec<&TraceEvent>> = BTreeMap::new();
    for (e, m) in ix.messages() {
        if m.kind != MessageKind::InterruptionNotice {
            continue;
        }
        for w in &m.receivers {
            per.entry((w.as_str(), e.tick / 100)).or_default().push(e);
        }
    }
    if per.is_empty() {
        return evidence(id, false, Vec::new(), "no interruption was ever sent");
    }
    let over: Vec<String> = per
        .iter()
        .filter(|(_, v)| v.len() > p.interruption_budget as usize)
        .flat_map(|(_, v)| v.iter().map(|e| r(e)))
        .collect();
    if !over.is_empty() {
        return evidence(
            id,
            false,
            over,
            format!(
                "more than {} interruptions for a worker in 100 ticks",
                p.interruption_budget
            ),
        );
    }
    let max = per.values().map(Vec::len).max().unwrap_or(0);
    evidence(
        id,
        true,
        per.values().flatten().map(|e| r(e)).collect(),
        format!(
            "at most {max} interruption(s) per worker per 100 ticks (budget {})",
            p.interruption_budget
        ),
    )
}

fn robustness(id: &str, ix: &TraceIndex) -> Evidence {
    let Some(fail) = ix.any(|e| matches!(e, Event::FailureInjected { .. })) else {
        return evidence(id, false, Vec::new(), "no AMR failure occurred");
    };
    let after = |e: &&TraceEvent| (e.tick, e.seq) > (fail.tick, fail.seq);
    let takeover = ix
        .events
        .iter()
        .filter(after)
        .find(|e| matches!(e.event, Event::TakeoverAssigned { .. }));
    let shipped = ix
        .events
        .iter()
        .filter(after)
        .find(|e| matches!(e.event, Event::Shipped { qty, .. } if qty > 0));
    match (takeover, shipped) {
        (Some(t), Some(s)) => evidence(
            id,
            true,
            vec![r(fail), r(t), r(s)],
            "shipping continued after the failure, with a worker taking over",
        ),
        (None, _) => evidence(id, false, vec![r(fail)], "no takeover after the failure"),
        (_, None) => evidence(id, false, vec![r(fail)], "nothing shipped after the failure"),
    }
}

/// Units shipped in `[lo, hi)`.
pub fn shipped_between(ix: &TraceIndex, lo: u64, hi: u64) -> u32 {
    ix.events
        .iter()
        .filter(|e| (lo..hi).contains(&e.tick))
        .map(|e| match e.event {
            Event::Shipped { qty, .. } => qty,
            _ => 0,
        })
        .sum()
}

fn throughput(id: &str, ix: &TraceIndex) -> Evidence {
    let Some(((a0, a1), (b0, b1))) = ix.quarters() else {
        return no_evidence(id);
    };
    let total = shipped_between(ix, 0, ix.end);
    if total == 0 {
        return no_evidence(id);
    }
    let (first, last) = (shipped_between(ix, a0, a1), shipped_between(ix, b0, b1));
    let witness = ix
        .events
        .iter()
        .filter(|e| matches!(e.event, Event::Shipped { .. }))
        .map(r)
        .collect();
    evidence(
        id,
        last >= first,
        witness,
        format!("{first} unit(s) shipped in the first quarter, {last} in the final quarter"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coevo::{ActionLabel, Message};
    use crate::trace::{AgentInfo, Recorder};
    use crate::world::Coord;

    fn header(rec: &mut Recorder) {
        let agent = |id: &str, class, stations: &[&str]| AgentInfo {
            id: id.into(),
            class,
            pos: Coord { x: 0, y: 0 },
            stations: stations.iter().map(|s| s.to_string()).collect(),
        };
        rec.emit(
            "control_center",
            Event::RunStarted {
                scenario: "t".into(),
                seed: 1,
                coevo_enabled: true,
                agents: vec![
                    agent("a1", AgentClass::Amr, &[]),
                    agent("w1", AgentClass::Worker, &["s1"]),
                    agent("w2", AgentClass::Worker, &["s2"]),
                ],
                goal: BTreeMap::new(),
            },
        );
    }

    fn msg(
        id: u64,
        tick: u64,
        sender: &str,
        receivers: &[&str],
        payload: MessagePayload,
        affected: &[&str],
    ) -> Event {
        Event::MessageSent {
            message: Message {
                id,
                tick,
                sender: sender.into(),
                receivers: receivers.iter().map(|s| s.to_string()).collect(),
                kind: payload.kind(),
                payload,
                affected: affected.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    fn build(f: impl FnOnce(&mut Vec<TraceEvent>)) -> Vec<TraceEvent> {
        let mut rec = Recorder::new(0);
        header(&mut rec);
        let mut evs = rec.finish();
        f(&mut evs);
        evs
    }

    fn at(evs: &mut Vec<TraceEvent>, tick: u64, actor: &str, event: Event) {
        let seq = evs.iter().filter(|e| e.tick == tick).count() as u32;
        evs.push(TraceEvent {
            tick,
            seq,
            actor: actor.into(),
            event,
        });
    }

    fn promote(evs: &mut Vec<TraceEvent>, tick: u64, eval: u64, from: u32, pass: bool) {
        at(
            evs,
            tick,
            "a1",
            Event::CandidateEvaluated {
                evaluation_id: eval,
                subject: "w1".into(),
                candidate_version: from + 1,
                candidate_accuracy: 0.9,
                incumbent_accuracy: 0.5,
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            },
        );
        at(
            evs,
            tick,
            "a1",
            Event::PredictorPromoted {
                subject: "w1".into(),
                evaluation_id: eval,
                from_version: from,
                to_version: from + 1,
            },
        );
    }

    fn predicted(evs: &mut Vec<TraceEvent>, tick: u64, version: u32) {
        at(
            evs,
            tick,
            "a1",
            Event::Predicted {
                subject: "w1".into(),
                predicted: ActionLabel::Stay,
                version,
            },
        );
    }

    #[test]
    fn gated_promotions_pass() {
        let evs = build(|e| {
            predicted(e, 1, 1);
            promote(e, 2, 0, 1, true);
            predicted(e, 3, 2);
        });
        let ix = TraceIndex::new(&evs);
        let ev = gating("g", &ix);
        assert!(ev.satisfied, "{ev:?}");
    }

    #[test]
    fn failed_verdict_promotion_is_flagged() {
        let evs = build(|e| promote(e, 2, 0, 1, false));
        let ix = TraceIndex::new(&evs);
        let ev = gating("g", &ix);
        assert!(!ev.satisfied);
        assert_eq!(ev.witness, ["2:1"]);
    }

    #[test]
    fn silent_version_bump_is_flagged() {
        let evs = build(|e| {
            promote(e, 2, 0, 1, true);
            predicted(e, 3, 3);
        });
        let ix = TraceIndex::new(&evs);
        let ev = gating("g", &ix);
        assert!(!ev.satisfied);
        assert_eq!(ev.witness, ["3:0"]);
    }

    #[test]
    fn evaluation_cannot_be_reused() {
        let evs = build(|e| {
            promote(e, 2, 0, 1, true);
            at(
                e,
                3,
                "a1",
                Event::PredictorPromoted {
                    subject: "w1".into(),
                    evaluation_id: 0,
                    from_version: 2,
                    to_version: 3,
                },
            );
        });
        let ix = TraceIndex::new(&evs);
        assert!(!gating("g", &ix).satisfied);
    }

    #[test]
    fn worker_promotion_is_flagged() {
        let evs = build(|e| {
            at(
                e,
                1,
                "w1",
                Event::CandidateEvaluated {
                    evaluation_id: 0,
                    subject: "a1".into(),
                    candidate_version: 2,
                    candidate_accuracy: 1.0,
                    incumbent_accuracy: 0.0,
                    verdict: Verdict::Pass,
                },
            );
            at(
                e,
                1,
                "w1",
                Event::PredictorPromoted {
                    subject: "a1".into(),
                    evaluation_id: 0,
                    from_version: 1,
                    to_version: 2,
                },
            );
        });
        assert!(!gating("g", &TraceIndex::new(&evs)).satisfied);
    }

    #[test]
    fn late_notification_fails() {
        let p = CheckParams::default();
        let evs = build(|e| {
            at(
                e,
                1,
                "control_center",
                Event::SupplyAdjusted {
                    worker: "w1".into(),
                    before: 3,
                    after: 2,
                    cause: "fast".into(),
                },
            );
            at(
                e,
                1 + p.notify_within + 1,
                "control_center",
                msg(
                    0,
                    7,
                    "control_center",
                    &["w1"],
                    MessagePayload::ChangeNotification {
                        topic: ChangeTopic::SupplyInterval,
                        before: "3".into(),
                        after: "2".into(),
                    },
                    &["w1"],
                ),
            );
        });
        let ev = consequences("c", &TraceIndex::new(&evs), &p);
        assert!(!ev.satisfied);
        assert_eq!(ev.witness, ["1:0"]);
    }

    #[test]
    fn timely_notification_passes() {
        let p = CheckParams::default();
        let evs = build(|e| {
            at(
                e,
                1,
                "control_center",
                Event::SupplyAdjusted {
                    worker: "w1".into(),
                    before: 3,
                    after: 2,
                    cause: "fast".into(),
                },
            );
            at(
                e,
                1,
                "control_center",
                msg(
                    0,
                    1,
                    "control_center",
                    &["w1"],
                    MessagePayload::ChangeNotification {
                        topic: ChangeTopic::SupplyInterval,
                        before: "3".into(),
                        after: "2".into(),
                    },
                    &["w1"],
                ),
            );
        });
        assert!(consequences("c", &TraceIndex::new(&evs), &p).satisfied);
    }

    #[test]
    fn broadcast_to_unaffected_fails() {
        let evs = build(|e| {
            at(
                e,
                1,
                "control_center",
                msg(
                    0,
                    1,
                    "control_center",
                    &["a1", "w1", "w2"],
                    MessagePayload::PreferenceRequest,
                    &["w1"],
                ),
            );
        });
        assert!(!targeted("t", &TraceIndex::new(&evs)).satisfied);
        let evs = build(|e| {
            at(
                e,
                1,
                "control_center",
                msg(
                    0,
                    1,
                    "control_center",
                    &["w1"],
                    MessagePayload::PreferenceRequest,
                    &["w1"],
                ),
            );
        });
        assert!(targeted("t", &TraceIndex::new(&evs)).satisfied);
    }

    #[test]
    fn interruption_budget_per_hundred_ticks() {
        let p = CheckParams::default();
        let notice = |i| {
            msg(
                i,
                0,
                "a1",
                &["w1"],
                MessagePayload::InterruptionNotice { reason: "x".into() },
                &["w1"],
            )
        };
        let evs = build(|e| {
            for t in 1..=3 {
                at(e, t, "a1", notice(t));
            }
            at(e, 100, "a1", notice(9));
        });
        assert!(interruptions("i", &TraceIndex::new(&evs), &p).satisfied);
        let evs = build(|e| {
            for t in 1..=4 {
                at(e, t, "a1", notice(t));
            }
        });
        assert!(!interruptions("i", &TraceIndex::new(&evs), &p).satisfied);
    }

    #[test]
    fn throughput_compares_quarters() {
        let ship = |q| Event::Shipped {
            product: "p".into(),
            qty: q,
        };
        let evs = build(|e| {
            at(e, 10, "w1", ship(1));
            at(e, 90, "w1", ship(2));
            at(
                e,
                99,
                "w1",
                Event::Resumed {
                    reason: ResumeReason::Order,
                },
            );
        });
        let ix = TraceIndex::new(&evs);
        assert_eq!(shipped_between(&ix, 0, 25), 1);
        assert!(throughput("p", &ix).satisfied);
        let evs = build(|e| {
            at(e, 10, "w1", ship(3));
            at(e, 99, "w1", ship(1));
        });
        assert!(!throughput("p", &TraceIndex::new(&evs)).satisfied);
    }
}
