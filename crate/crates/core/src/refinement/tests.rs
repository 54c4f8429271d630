use super::*;
use crate::parser::parse_spec;
use crate::parser::tests::COUNTER;

const TICKING: &str = "spec Ticking\nvars\n  x : 0..3\n  ticks : 0..2\ninit\n  x = 0\n  ticks = 0\nmodule Main\n  action Inc\n    when x < 3\n    then x' = x + 1\n  action Tick\n    when ticks < 2\n    then ticks' = ticks + 1\n";

fn counter() -> Spec {
    parse_spec(COUNTER, "counter.ipa").unwrap()
}

fn ticking_map(b: &Spec) -> ActionMapping {
    let mut am = ActionMapping::identity(b);
    am.entries.retain(|(n, _)| n.as_ref() != "Tick");
    am.entries.push(("Tick".into(), ActionTarget::Void));
    am
}

fn check(b: &Spec, a: &Spec, am: &ActionMapping) -> RefinementReport {
    let sm = StateMapping::new(b, a, &[]).unwrap();
    check_strong_refinement(b, a, &sm, am, &Bounds::default()).unwrap()
}

#[test]
fn reflexive() {
    let s = counter();
    let r = check(&s, &s, &ActionMapping::identity(&s));
    assert!(r.verdict.holds());
    assert_eq!(r.distinct_states, 4);
    let sm = StateMapping::identity(&s);
    assert!(trace_inclusion_oracle(&s, &s, &sm, &ActionMapping::identity(&s), 4).unwrap().holds());
}

#[test]
fn projection_drops_hidden_variables() {
    let b = parse_spec(TICKING, "t.ipa").unwrap();
    let a = counter();
    let sm = StateMapping::new(&b, &a, &[]).unwrap();
    let s = State::new(vec![crate::Value::Int(1), crate::Value::Int(2)]);
    assert_eq!(project_state(&s, &sm).unwrap(), State::new(vec![crate::Value::Int(1)]));
}

#[test]
fn void_steps_are_stutters() {
    let b = parse_spec(TICKING, "t.ipa").unwrap();
    let a = counter();
    let am = ticking_map(&b);
    assert!(check(&b, &a, &am).verdict.holds());
    let sm = StateMapping::new(&b, &a, &[]).unwrap();
    assert!(trace_inclusion_oracle(&b, &a, &sm, &am, 8).unwrap().holds());
}

#[test]
fn secret_bump_is_a_wrong_post_state() {
    // Inc also bumps y, which the abstract Inc leaves alone.
    let a_src = "spec A\nvars\n  x : 0..3\n  y : 0..3\ninit\n  x = 0\n  y = 0\nmodule Main\n  action Inc\n    when x < 3\n    then x' = x + 1\n  action Bump\n    when y < 3\n    then y' = y + 1\n";
    let a = parse_spec(a_src, "a.ipa").unwrap();
    let b = parse_spec(&a_src.replace("then x' = x + 1", "then x' = x + 1, y' = IF y < 3 THEN y + 1 ELSE y"), "b.ipa")
        .unwrap();
    let am = ActionMapping::identity(&b);
    let r = check(&b, &a, &am);
    let RefinementVerdict::Fails(f) = r.verdict else { panic!("expected failure, got {:?}", r.verdict) };
    assert_eq!(f.reason, FailureReason::WrongPostState);
    assert_eq!(f.step, 1);
    assert_eq!(f.trace.len(), 1);
    assert!(crate::explorer::trace_replay(&b, &f.trace).is_valid());
    let sm = StateMapping::new(&b, &a, &[]).unwrap();
    assert!(!trace_inclusion_oracle(&b, &a, &sm, &am, 8).unwrap().holds());
}

#[test]
fn other_failure_reasons() {
    let a = counter();
    // Starts at 1: initial mismatch.
    let b = parse_spec(&COUNTER.replace("x = 0", "x = 1"), "b.ipa").unwrap();
    let RefinementVerdict::Fails(f) = check(&b, &a, &ActionMapping::identity(&b)).verdict else { panic!() };
    assert_eq!((f.reason, f.step), (FailureReason::InitialMismatch, 0));

    // Inc allowed past the abstract guard.
    let wide = COUNTER.replace("x : 0..3", "x : 0..4").replace("when x < 3", "when x < 4").replace("x <= 3", "x <= 4");
    let b = parse_spec(&wide, "b.ipa").unwrap();
    let RefinementVerdict::Fails(f) = check(&b, &a, &ActionMapping::identity(&b)).verdict else { panic!() };
    assert_eq!((f.reason, f.step), (FailureReason::MappedActionDisabled, 4));

    // A void action that moves x.
    let b = parse_spec(TICKING.replace("then ticks' = ticks + 1", "then ticks' = ticks + 1, x' = 0").as_str(), "b.ipa")
        .unwrap();
    let RefinementVerdict::Fails(f) = check(&b, &a, &ticking_map(&b)).verdict else { panic!() };
    assert_eq!(f.reason, FailureReason::VoidStepChangedProjection);
    assert_eq!(f.step, 2);
}

#[test]
fn bounds_make_it_inconclusive() {
    let s = counter();
    let sm = StateMapping::identity(&s);
    let am = ActionMapping::identity(&s);
    let r = check_strong_refinement(&s, &s, &sm, &am, &Bounds { max_states: 2, ..Bounds::default() }).unwrap();
    assert_eq!(r.verdict, RefinementVerdict::Inconclusive { bound: "max-states" });
}

#[test]
fn oracle_refuses_large_specs() {
    let src = "spec Big\nvars\n  x : 0..99\n  y : 0..99\ninit\n  x = 0\n  y = 0\nmodule M\n  action X\n    when x < 99\n    then x' = x + 1\n  action Y\n    when y < 99\n    then y' = y + 1\n";
    let s = parse_spec(src, "big.ipa").unwrap();
    let sm = StateMapping::identity(&s);
    let err = trace_inclusion_oracle(&s, &s, &sm, &ActionMapping::identity(&s), 2).unwrap_err();
    assert!(matches!(err, RefinementError::OracleTooLarge { limit: 5000 }));
}

#[test]
fn unmapped_abstract_variable_is_rejected() {
    let a = parse_spec(TICKING, "t.ipa").unwrap();
    let b = counter();
    assert!(matches!(StateMapping::new(&b, &a, &[]), Err(RefinementError::StateMapping(_))));
}
