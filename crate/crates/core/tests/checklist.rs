mod common;

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use hrc_coevo::checklist::{evaluate, MetricReport, Registry, Status};
use hrc_coevo::coevo::Verdict;
use hrc_coevo::fram::{shipped_improved, shipped_initial};
use hrc_coevo::trace::{trace_to_string, Event, TraceEvent};
use hrc_coevo::world::{run, Scenario};
use proptest::prelude::*;
use serde_json::Value;

const GATING: &str = "update_and_adapt_cautiously";

fn report(trace: &[TraceEvent]) -> MetricReport {
    evaluate(
        &shipped_initial(),
        &shipped_improved(),
        trace,
        &Registry::builtin(),
    )
    .unwrap()
}

fn default_trace() -> &'static [TraceEvent] {
    static TRACE: OnceLock<Vec<TraceEvent>> = OnceLock::new();
    TRACE.get_or_init(|| {
        run(&Scenario::builtin("default").unwrap(), None, 500)
            .unwrap()
            .events
    })
}

/// Scans the raw JSON lines: every predictor version a learner uses must
/// have been introduced by a promotion from an AMR that spends a fresh,
/// passing evaluation of exactly that version.
fn gating_oracle(text: &str) -> bool {
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let mut amrs = HashSet::new();
    for v in &lines {
        if v["kind"] == "run_started" {
            for a in v["payload"]["agents"].as_array().unwrap() {
                if a["class"] == "amr" {
                    amrs.insert(a["id"].as_str().unwrap().to_string());
                }
            }
        }
    }
    let mut version: HashMap<(String, String), u64> = HashMap::new();
    let mut used = HashSet::new();
    let mut promotions = 0;
    for (i, v) in lines.iter().enumerate() {
        let actor = v["actor"].as_str().unwrap().to_string();
        let p = &v["payload"];
        match v["kind"].as_str().unwrap() {
            "learning_configured" if !amrs.contains(&actor) => return false,
            "predicted" => {
                let key = (actor, p["subject"].as_str().unwrap().to_string());
                if p["version"].as_u64().unwrap() != *version.get(&key).unwrap_or(&1) {
                    return false;
                }
            }
            "predictor_promoted" => {
                let subject = p["subject"].as_str().unwrap().to_string();
                let eval = p["evaluation_id"].as_u64().unwrap();
                let to = p["to_version"].as_u64().unwrap();
                let key = (actor.clone(), subject.clone());
                let current = *version.get(&key).unwrap_or(&1);
                let authorized = lines[..i].iter().any(|e| {
                    e["kind"] == "candidate_evaluated"
                        && e["actor"] == actor.as_str()
                        && e["payload"]["evaluation_id"] == eval
                        && e["payload"]["subject"] == subject.as_str()
                        && e["payload"]["verdict"] == "pass"
                        && e["payload"]["candidate_version"] == to
                });
                if !amrs.contains(&actor)
                    || !authorized
                    || !used.insert((actor.clone(), eval))
                    || p["from_version"].as_u64().unwrap() != current
                    || to <= current
                {
                    return false;
                }
                version.insert(key, to);
                promotions += 1;
            }
            _ => {}
        }
    }
    promotions > 0
}

/// Ways of breaking gating in an otherwise valid trace.
fn inject(trace: &mut Vec<TraceEvent>, variant: u64) {
    let pi = trace
        .iter()
        .position(|e| matches!(e.event, Event::PredictorPromoted { .. }))
        .expect("trace has a promotion");
    let (owner, subject, eval, to) = match &trace[pi].event {
        Event::PredictorPromoted {
            subject,
            evaluation_id,
            to_version,
            ..
        } => (
            trace[pi].actor.clone(),
            subject.clone(),
            *evaluation_id,
            *to_version,
        ),
        _ => unreachable!(),
    };
    let ci = trace[..pi]
        .iter()
        .rposition(|e| {
            matches!(&e.event, Event::CandidateEvaluated { evaluation_id, .. } if *evaluation_id == eval)
                && e.actor == owner
        })
        .expect("promotion has an evaluation");
    match variant % 4 {
        0 => {
            if let Event::CandidateEvaluated { verdict, .. } = &mut trace[ci].event {
                *verdict = Verdict::Fail;
            }
        }
        1 => {
            let later = trace[pi..]
                .iter()
                .position(|e| {
                    e.actor == owner
                        && matches!(&e.event, Event::Predicted { subject: s, .. } if *s == subject)
                })
                .expect("the learner predicts again");
            if let Event::Predicted { version, .. } = &mut trace[pi + later].event {
                *version = to + 1;
            }
        }
        2 => {
            let tick = trace.remove(ci).tick;
            for (seq, e) in trace.iter_mut().filter(|e| e.tick == tick).enumerate() {
                e.seq = seq as u32;
            }
        }
        _ => {
            if let Event::PredictorPromoted { to_version, .. } = &mut trace[pi].event {
                *to_version += 1;
            }
        }
    }
}

#[test]
fn gating_check_agrees_with_trace_scan_oracle() {
    let s = Scenario::builtin("default").unwrap();
    let (mut accepted, mut rejected) = (0, 0);
    for seed in 0..100u64 {
        let mut trace = run(&s, Some(seed), 200).unwrap().events;
        let injected = seed % 2 == 1;
        if injected {
            inject(&mut trace, seed / 2);
        }
        let oracle = gating_oracle(&trace_to_string(&trace));
        let check = report(&trace).result(GATING).unwrap().evidence.satisfied;
        assert_eq!(check, oracle, "seed {seed}");
        assert_eq!(oracle, !injected, "seed {seed}");
        if oracle {
            accepted += 1;
        } else {
            rejected += 1;
        }
    }
    assert_eq!((accepted, rejected), (50, 50));
}

#[test]
fn ungated_version_bump_is_the_witness() {
    let mut trace = default_trace().to_vec();
    inject(&mut trace, 1);
    let bumped = trace
        .iter()
        .find(|e| matches!(&e.event, Event::Predicted { version, .. } if *version > 2))
        .map(|e| format!("{}:{}", e.tick, e.seq))
        .unwrap();
    let r = report(&trace);
    let res = r.result(GATING).unwrap();
    assert!(!res.evidence.satisfied);
    assert_eq!(res.status, Status::AN);
    assert_eq!(res.evidence.witness.first(), Some(&bumped));
}

#[test]
fn default_run_reproduces_expected_statuses() {
    let r = report(default_trace());
    assert!(r.all_match(&Registry::builtin()), "{r:#?}");
    assert_eq!(r.results.len(), 16);
}

#[test]
fn evaluation_is_deterministic() {
    let a = serde_json::to_string(&report(default_trace())).unwrap();
    let b = serde_json::to_string(&report(default_trace())).unwrap();
    assert_eq!(a, b);
}

#[test]
fn disabling_coevolution_breaks_the_learning_metrics() {
    let mut s = Scenario::builtin("default").unwrap();
    s.coevo.enabled = false;
    let trace = run(&s, None, 500).unwrap().events;
    let r = report(&trace);
    assert!(!r.all_match(&Registry::builtin()));
    for id in [
        "learn_from_user_behavior",
        GATING,
        "novel_situations",
        "provide_global_controls",
    ] {
        assert!(!r.result(id).unwrap().evidence.satisfied, "{id}");
    }
}

/// Metrics that only ask for something to have happened.
const EXISTENTIAL: [&str; 6] = [
    "remember_recent_interactions",
    "encourage_granular_feedback",
    "provide_global_controls",
    "novel_situations",
    "performance_vs_preference",
    "robustness",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn extending_a_trace_keeps_existential_evidence(cut in 0u64..500, extra in 1u64..100) {
        let full = default_trace();
        let prefix: Vec<_> = full.iter().filter(|e| e.tick < cut).cloned().collect();
        let longer: Vec<_> = full.iter().filter(|e| e.tick < cut + extra).cloned().collect();
        let (a, b) = (report(&prefix), report(&longer));
        for id in EXISTENTIAL {
            if a.result(id).unwrap().evidence.satisfied {
                prop_assert!(b.result(id).unwrap().evidence.satisfied, "{} at cut {}", id, cut);
            }
        }
    }
}
