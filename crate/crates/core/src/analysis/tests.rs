use std::path::Path;

use super::*;
use crate::parser::tests::files;
use crate::parser::{parse_spec, Project};

fn set(xs: &[&str]) -> VarSet {
    xs.iter().map(|x| Arc::from(*x)).collect()
}

fn spec(vars: &[&str], modules: &str) -> Spec {
    let mut src = String::from("spec T\nvars\n");
    for v in vars {
        src.push_str(&format!("  {v} : 0..3\n"));
    }
    src.push_str("init\n");
    for v in vars {
        src.push_str(&format!("  {v} = 0\n"));
    }
    src.push_str(modules);
    parse_spec(&src, "t.ipa").unwrap()
}

#[test]
fn guard_reads_only() {
    let s =
        spec(&["x", "y"], "module M\n  action A\n    when x > 0\n    then y' = y + 1\n  action B\n    then y' = 0\n");
    assert_eq!(action_deps(s.action("A").unwrap()), set(&["x"]));
    assert!(action_deps(s.action("B").unwrap()).is_empty());
}

#[test]
fn params_and_constants_are_not_read() {
    let src = "spec T\nconst N = 2\nsort P = {p1, p2}\nvars\n  st : [P -> 0..2]\n  term : [P -> 0..2]\ninit\n  st = [p \\in P |-> 0]\n  term = [p \\in P |-> 0]\nmodule M\n  action A(p \\in P, q \\in P)\n    when st[p] = 1 /\\ term[p] >= term[q] /\\ term[p] < N\n    then st' = [st EXCEPT ![p] = 2]\n";
    let s = parse_spec(src, "t.ipa").unwrap();
    assert_eq!(action_deps(s.action("A").unwrap()), set(&["st", "term"]));
}

#[test]
fn module_deps_close_over_updates() {
    let s = spec(&["x", "z"], "module M\n  action A\n    when x > 0\n    then x' = z\n");
    assert_eq!(module_deps(&s)["M"], set(&["x", "z"]));

    let s = spec(&["x", "y", "z"], "module M\n  action A\n    when x > 0\n    then y' = z\n");
    assert_eq!(module_deps(&s)["M"], set(&["x"]));

    let s = spec(
        &["x", "y", "z"],
        "module M\n  action A1\n    when x > 0\n    then x' = y\n  action A2\n    when TRUE\n    then y' = z\n",
    );
    assert_eq!(module_deps(&s)["M"], set(&["x", "y", "z"]));
}

#[test]
fn interaction_seeds_and_rules() {
    let s = spec(&["x", "y"], "module M1\n  action A\n    when x > 0\n    then y' = 1\nmodule M2\n  action B\n    when x < 3\n    then y' = 2\n");
    let d = module_deps(&s);
    assert!(interaction_vars(&s, &d).contains("x"));

    let s = spec(&["x"], "module M\n  action A\n    when x > 0\n    then x' = 0\n");
    assert!(interaction_vars(&s, &module_deps(&s)).is_empty());

    // M1 writes the shared x from w, which it does not depend on.
    let s = spec(
        &["x", "w", "y"],
        "module M1\n  action A\n    when x > 0\n    then x' = w\nmodule M2\n  action B\n    when x < 3 /\\ y = 0\n    then y' = 1\n",
    );
    let a = analyze(&s).unwrap();
    // Rule 3 on the dependency closure already put w in D_M1; it stays internal.
    assert_eq!(a.deps("M1"), &set(&["w", "x"]));
    assert_eq!(a.interaction, set(&["x"]));

    // Without the guard on x, w only reaches I through the shared update.
    let s = spec(
        &["x", "w", "y"],
        "module M1\n  action A\n    when y = 0\n    then x' = w\nmodule M2\n  action B\n    when x < 3 /\\ y = 0\n    then y' = 1\n",
    );
    let a = analyze(&s).unwrap();
    assert_eq!(a.interaction, set(&["w", "y"]));
}

#[test]
fn internal_is_deps_minus_interaction() {
    let s = spec(&["x", "p", "q"], "module M1\n  action A\n    when x > 0 /\\ p = 0\n    then p' = 1\nmodule M2\n  action B\n    when x < 3 /\\ q = 0\n    then q' = 1\n");
    let a = analyze(&s).unwrap();
    assert_eq!(a.interaction, set(&["x"]));
    assert_eq!(a.internal_of("M1"), &set(&["p"]));
    assert_eq!(a.internal_of("M2"), &set(&["q"]));

    let s = spec(&["x"], "module M\n  action A\n    when x > 0\n    then x' = 0\n");
    let a = analyze(&s).unwrap();
    assert_eq!(a.internal_of("M"), a.deps("M"));
}

#[test]
fn disjointness_failure_is_reported() {
    let mut d = BTreeMap::new();
    d.insert(Arc::from("A"), set(&["x"]));
    d.insert(Arc::from("B"), set(&["x"]));
    assert!(matches!(internal_vars(&d, &VarSet::new()), Err(AnalysisError::NotDisjoint { .. })));
}

#[test]
fn blind_write_warns() {
    let s = spec(&["x", "log"], "module M\n  action A\n    when x < 3\n    then x' = x + 1, log' = x\n");
    let a = analyze(&s).unwrap();
    let w = blind_writes(&s, &a);
    assert_eq!(w.len(), 1);
    assert_eq!(w[0].code, "W-blind-write");
    assert!(w[0].message.contains("`log`"));
}

pub(crate) const ROOT: &str = "spec R\nvars\n  x : 0..2\n  a : 0..2\n  b : 0..2\ninit\n  x = 0\n  a = 0\n  b = 0\nmodule A\n  action StepA\n    when x < 2 /\\ a < 2\n    then a' = a + 1\n  action PublishA\n    when a = 2 /\\ x < 2\n    then x' = x + 1, a' = 0\nmodule B\n  action StepB\n    when x > 0 /\\ b < 2\n    then b' = b + 1\n";
pub(crate) const ABS_A: &str =
    "spec AbsA\nvars\n  x : 0..2\ninit\n  x = 0\nmodule AbsA\n  action Publish\n    when x < 2\n    then x' = x + 1\n";
const ABS_A_PEEK: &str = "spec AbsA\nvars\n  x : 0..2\n  b : 0..2\ninit\n  x = 0\n  b = 0\nmodule AbsA\n  action Publish\n    when x < 2 /\\ b = 0\n    then x' = x + 1\n";
pub(crate) const ABS_B: &str = "spec AbsB\nvars\n  x : 0..2\n  b : 0..2\ninit\n  x = 0\n  b = 0\nmodule AbsB\n  action AbsStepB\n    when x > 0 /\\ b < 2\n    then b' = b + 1\n";

pub(crate) fn project(abs_a: &str, map_a: &str) -> Project {
    let m = format!(
        "manifest r\nspec \"r.ipa\"\nabstraction A \"a.ipa\"\nabstraction B \"b.ipa\"\n{map_a}map B.StepB -> AbsB.AbsStepB\n"
    );
    let read = files(&[("d/m.ipam", &m), ("d/r.ipa", ROOT), ("d/a.ipa", abs_a), ("d/b.ipa", ABS_B)]);
    Project::load_with(Path::new("d/m.ipam"), None, &read).unwrap()
}

fn report(p: &Project) -> ConstraintReport {
    let a = analyze(&p.spec).unwrap();
    check_abstraction_constraints(&p.spec, &p.manifest, &a)
}

#[test]
fn well_formed_abstraction_passes() {
    let p = project(ABS_A, "map A.StepA -> void\nmap A.PublishA -> AbsA.Publish\n");
    let r = report(&p);
    assert!(r.passed(), "{r:#?}");
    let a = r.module("A").unwrap();
    assert_eq!(a.results[3].verdict, ConstraintVerdict::SyntacticPass);
    assert_eq!(a.abstract_deps, set(&["x"]));
}

#[test]
fn reading_a_foreign_internal_fails_constraint_one() {
    let p = project(ABS_A_PEEK, "map A.StepA -> void\nmap A.PublishA -> AbsA.Publish\n");
    let r = report(&p);
    assert!(!r.passed());
    let fails: Vec<_> = r.failures().collect();
    assert_eq!(fails.len(), 1);
    assert_eq!(fails[0].1.constraint, 1);
    assert_eq!(fails[0].1.violations[0].var.as_deref(), Some("b"));
}

#[test]
fn void_must_touch_only_internals() {
    let p = project(ABS_A, "map A.StepA -> AbsA.Publish\nmap A.PublishA -> void\n");
    let r = report(&p);
    let fails: Vec<_> = r.failures().collect();
    assert_eq!(fails.len(), 1);
    assert_eq!(fails[0].1.constraint, 4);
    assert_eq!(fails[0].1.violations[0].var.as_deref(), Some("x"));
}

#[test]
fn report_serializes_sorted() {
    let p = project(ABS_A, "map A.StepA -> void\nmap A.PublishA -> AbsA.Publish\n");
    let a = analyze(&p.spec).unwrap();
    let r = AnalysisReport::new(&a, Some(report(&p)), &[]);
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["modules"]["A"]["deps"], serde_json::json!(["a", "x"]));
    assert_eq!(json["modules"]["B"]["internal"], serde_json::json!(["b"]));
    assert_eq!(json["interaction"], serde_json::json!(["x"]));
    assert_eq!(json["constraints"]["modules"][0]["results"][3]["verdict"], "syntactic-pass");
}
