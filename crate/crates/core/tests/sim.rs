mod common;

use std::collections::{BTreeMap, HashSet};

use hrc_coevo::trace::{read_trace, trace_to_string, Event};
use hrc_coevo::world::{run, RunOutcome, Scenario, WorldState};

#[test]
fn same_seed_gives_identical_trace_bytes() {
    let s = Scenario::builtin("default").unwrap();
    let a = run(&s, Some(42), 300).unwrap();
    let b = run(&s, Some(42), 300).unwrap();
    assert_eq!(trace_to_string(&a.events), trace_to_string(&b.events));
    let c = run(&s, Some(43), 300).unwrap();
    assert_ne!(trace_to_string(&a.events), trace_to_string(&c.events));
}

#[test]
fn trace_round_trips_through_text() {
    let r = run(&common::fixture("tiny"), None, 200).unwrap();
    let text = trace_to_string(&r.events);
    assert_eq!(read_trace(text.as_bytes()).unwrap(), r.events);
}

#[test]
fn zero_goal_completes_immediately() {
    let mut s = common::fixture("tiny");
    s.goal = BTreeMap::from([("widget".to_string(), 0)]);
    let r = run(&s, None, 500).unwrap();
    assert_eq!(r.outcome, RunOutcome::Completed);
    assert_eq!(r.state.tick, 0);
    assert!(matches!(r.events[0].event, Event::RunStarted { .. }));
}

#[test]
fn unreachable_station_deadlocks() {
    let r = run(&common::unreachable_port(), None, 2000).unwrap();
    assert_eq!(r.outcome, RunOutcome::Deadlock);
    assert!(r.state.tick < 2000);
}

#[test]
fn tiny_fixture_reaches_its_goal() {
    let r = run(&common::fixture("tiny"), None, 2000).unwrap();
    assert_eq!(r.outcome, RunOutcome::Completed);
    assert_eq!(r.state.shipped.get("widget"), Some(&3));
}

#[test]
fn items_are_conserved_and_shipments_match_trace() {
    for name in Scenario::builtin_names() {
        let s = Scenario::builtin(name).unwrap();
        for seed in 0..5 {
            let r = run(&s, Some(seed), 500).unwrap();
            assert!(
                r.state.ledger.conservation_violations().is_empty(),
                "{name} seed {seed}"
            );
            let mut shipped: BTreeMap<String, u32> = BTreeMap::new();
            for e in &r.events {
                if let Event::Shipped { product, qty } = &e.event {
                    *shipped.entry(product.clone()).or_default() += qty;
                }
            }
            assert_eq!(shipped, r.state.shipped, "{name} seed {seed}");
        }
    }
}

#[test]
fn agents_never_share_a_cell() {
    for name in Scenario::builtin_names() {
        let s = Scenario::builtin(name).unwrap();
        for seed in 0..5 {
            let mut st = WorldState::new(&s, Some(seed)).unwrap();
            for _ in 0..500 {
                st.step();
                let mut seen = HashSet::new();
                let cells = st
                    .workers
                    .iter()
                    .map(|w| w.pos)
                    .chain(st.amrs.iter().map(|a| a.pos));
                for c in cells {
                    assert!(
                        seen.insert(c),
                        "{name} seed {seed} tick {}: two agents at {c}",
                        st.tick
                    );
                }
            }
        }
    }
}

#[test]
fn halted_amrs_do_not_move_that_tick() {
    let s = Scenario::builtin("default").unwrap();
    let r = run(&s, Some(5), 500).unwrap();
    let halted: HashSet<(u64, &str)> = r
        .events
        .iter()
        .filter(|e| matches!(e.event, Event::Halted { .. }))
        .map(|e| (e.tick, e.actor.as_str()))
        .collect();
    assert!(!halted.is_empty());
    for e in &r.events {
        if matches!(e.event, Event::Moved { .. }) {
            assert!(!halted.contains(&(e.tick, e.actor.as_str())));
        }
    }
}

#[test]
fn shipped_scenarios_are_named_after_themselves() {
    for name in Scenario::builtin_names() {
        assert_eq!(Scenario::builtin(name).unwrap().name, name);
    }
}
