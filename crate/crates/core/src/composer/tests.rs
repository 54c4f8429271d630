use super::*;
use crate::analysis::analyze;
use crate::analysis::tests::{project, ABS_A};
use crate::explorer::Bounds;
use crate::kernel::Spec;
use crate::parser::Project;
use crate::refinement::RefinementVerdict;

const MAP: &str = "map A.StepA -> void\nmap A.PublishA -> AbsA.Publish\n";

fn names(s: &Spec) -> Vec<String> {
    s.actions().map(|a| a.name.to_string()).collect()
}

fn healthy() -> Project {
    project(ABS_A, MAP)
}

#[test]
fn abstract_and_compositional_specs() {
    let p = healthy();
    let an = analyze(&p.spec).unwrap();
    let a = build_abstract_spec(&p.spec, &p.manifest, &an).unwrap();
    assert_eq!(names(&a.spec), ["Publish", "AbsStepB"]);
    assert_eq!(a.spec.var_names().iter().map(|v| v.to_string()).collect::<Vec<_>>(), ["x", "b"]);

    let ca = build_compositional_spec(&p.spec, &p.manifest, &an, "A").unwrap();
    assert_eq!(names(&ca.spec), ["StepA", "PublishA", "AbsStepB"]);
    assert_eq!(ca.provenance[0].1, Provenance::Concrete("A".into()));
    assert_eq!(ca.provenance[2].1, Provenance::Abstract("B".into()));
    assert!(a.scope.is_subset(&ca.scope));

    let cb = build_compositional_spec(&p.spec, &p.manifest, &an, "B").unwrap();
    assert_eq!(names(&cb.spec), ["Publish", "StepB"]);
    assert!(a.scope.is_subset(&cb.scope));
}

#[test]
fn mappings_compose() {
    let p = healthy();
    let an = analyze(&p.spec).unwrap();
    for m in ["A", "B"] {
        let c = build_compositional_spec(&p.spec, &p.manifest, &an, m).unwrap();
        let maps = compose_mappings(&p.spec, &p.manifest, &c, m).unwrap();
        assert_eq!(maps.g_i.entries.len(), 3);
        assert_eq!(maps.g_bar_i.entries.len(), c.spec.actions().count());
    }
}

#[test]
fn healthy_pipeline_concludes_and_agrees_with_direct() {
    let p = healthy();
    let r = compositional_check(&p.spec, &p.manifest, &Bounds::default()).unwrap();
    assert_eq!(r.conclusion, Conclusion::Refines, "{}", r.conclusion.describe());
    assert_eq!(r.modules.len(), 2);
    let d = direct_check(&p.spec, &p.manifest, &Bounds::default()).unwrap();
    assert!(d.holds());
    assert!(r.modules.iter().all(|m| m.report.distinct_states <= d.refinement.distinct_states));
    let cost = CostComparison::new(&r, &d);
    assert_eq!(cost.direct_states, d.refinement.distinct_states);
    assert!(cost.state_ratio.is_some());
    let j = r.to_json();
    assert_eq!(j["conclusion"]["result"], "refines");
}

#[test]
fn constraint_failure_blocks() {
    let p = project(
        crate::analysis::tests::ABS_A
            .replace("when x < 2", "when x < 2 /\\ b = 0")
            .replace("  x : 0..2\ninit", "  x : 0..2\n  b : 0..2\ninit")
            .replace("  x = 0\nmodule", "  x = 0\n  b = 0\nmodule")
            .as_str(),
        MAP,
    );
    let r = compositional_check(&p.spec, &p.manifest, &Bounds::default()).unwrap();
    assert!(matches!(&r.conclusion, Conclusion::Blocked { stage, .. } if stage == "constraints"));
}

#[test]
fn wrong_abstraction_fails_at_its_module() {
    // The abstraction publishes from any x, but the concrete module first
    // needs two internal steps; mapping those steps to Publish breaks C_A.
    let p = project(ABS_A, "map A.StepA -> AbsA.Publish\nmap A.PublishA -> AbsA.Publish\n");
    let r = compositional_check(&p.spec, &p.manifest, &Bounds::default()).unwrap();
    assert!(matches!(&r.conclusion, Conclusion::Blocked { stage, .. } if stage == "C_A"), "{:?}", r.conclusion);
    assert!(matches!(r.modules[0].report.verdict, RefinementVerdict::Fails(_)));
    assert!(r.modules[1].report.verdict.holds());
    let d = direct_check(&p.spec, &p.manifest, &Bounds::default()).unwrap();
    assert!(!d.holds());
}

#[test]
fn inconclusive_blocks() {
    let p = healthy();
    let r = compositional_check(&p.spec, &p.manifest, &Bounds { max_states: 2, ..Bounds::default() }).unwrap();
    assert!(r.is_inconclusive());
}
