use super::*;
use crate::kernel::{State, Value};
use crate::parser::parse_spec;
use crate::parser::tests::COUNTER;

fn counter() -> Spec {
    parse_spec(COUNTER, "counter.ipa").unwrap()
}

fn invariant(spec: &Spec, src: &str) -> Vec<NamedExpr> {
    let text =
        format!("{}\ninvariant P: {src}\n", crate::parser::render_spec(&Spec { invariants: vec![], ..spec.clone() }));
    parse_spec(&text, "inv.ipa").unwrap().invariants
}

#[test]
fn counter_passes_with_exact_counts() {
    let s = counter();
    let r = explore(&s, &s.invariants, &Bounds::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert_eq!((r.distinct_states, r.transitions, r.depth), (4, 3, 3));
    assert!(r.deadlock.is_some(), "x = 3 has no successor");
}

#[test]
fn counter_violation_trace_is_shortest() {
    let s = counter();
    let r = explore(&s, &invariant(&s, "x < 3"), &Bounds::default()).unwrap();
    assert_eq!(r.verdict, Verdict::InvariantViolated);
    let v = r.violation.unwrap();
    assert_eq!(v.invariant, "P");
    assert_eq!(v.trace.len(), 3);
    assert!(v.trace.steps.iter().all(|(i, _)| i.action.as_ref() == "Inc"));
    assert_eq!(trace_replay(&s, &v.trace), ReplayVerdict::Valid);

    let mut bad = v.trace.clone();
    bad.steps[2].1 = State::new(vec![Value::Int(5)]);
    assert!(matches!(trace_replay(&s, &bad), ReplayVerdict::Invalid { step: 3, .. }));
}

#[test]
fn initial_violation_has_empty_trace() {
    let s = counter();
    let r = explore(&s, &invariant(&s, "x > 0"), &Bounds::default()).unwrap();
    assert_eq!(r.violation.unwrap().trace.len(), 0);
}

#[test]
fn deadlock_is_an_error_on_request() {
    let s = counter();
    let r = explore(&s, &[], &Bounds { deadlock_is_error: true, ..Bounds::default() }).unwrap();
    assert_eq!(r.verdict, Verdict::DeadlockFound);
    assert_eq!(r.deadlock.unwrap().len(), 3);
}

#[test]
fn bounds_are_verdicts() {
    let s = counter();
    let r = explore(&s, &[], &Bounds { max_depth: Some(2), ..Bounds::default() }).unwrap();
    assert_eq!((r.verdict, r.bound), (Verdict::BoundExceeded, Some("max-depth")));
    let r = explore(&s, &[], &Bounds { max_depth: Some(3), ..Bounds::default() }).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    let r = explore(&s, &[], &Bounds { max_states: 2, ..Bounds::default() }).unwrap();
    assert_eq!((r.verdict, r.bound), (Verdict::BoundExceeded, Some("max-states")));
}

const GRID: &str = "spec Grid\nvars\n  x : 0..4\n  y : 0..4\ninit\n  x = 0\n  y = 0\nmodule M\n  action R\n    when x < 4\n    then x' = x + 1\n  action U\n    when y < 4\n    then y' = y + 1\n  action D\n    when x > 0 /\\ y > 0\n    then x' = x - 1, y' = y - 1\n";

#[test]
fn worker_count_does_not_change_results() {
    let s = parse_spec(GRID, "grid.ipa").unwrap();
    let inv = invariant(&s, "x + y < 7");
    let runs: Vec<_> =
        [1, 2, 8].iter().map(|&w| explore(&s, &inv, &Bounds { workers: w, ..Bounds::default() }).unwrap()).collect();
    for r in &runs[1..] {
        assert_eq!(r.verdict, runs[0].verdict);
        assert_eq!(r.distinct_states, runs[0].distinct_states);
        assert_eq!(r.transitions, runs[0].transitions);
        assert_eq!(r.violation, runs[0].violation);
    }
    assert_eq!(runs[0].violation.as_ref().unwrap().trace.len(), 7);
}

#[test]
fn trace_json_round_trips() {
    let s = parse_spec(GRID, "grid.ipa").unwrap();
    let r = explore(&s, &invariant(&s, "x < 2"), &Bounds::default()).unwrap();
    let t = r.violation.unwrap().trace;
    let j = t.to_json(&s);
    assert_eq!(j["steps"][0]["state"]["x"], 1);
    assert_eq!(Trace::from_json(&s, &j).unwrap(), t);
}
