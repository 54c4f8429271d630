//! The compositional pipeline, the direct baseline and their cost comparison.

use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value as Json};

use super::{build_abstract_spec, build_compositional_spec, compose_mappings, ComposeError, ComposedSpec};
use crate::analysis::{analyze, blind_writes, check_abstraction_constraints, AnalysisReport, VarSet};
use crate::explorer::{explore, Bounds, ExplorationReport, Verdict};
use crate::kernel::{NamedExpr, Spec, VarRef};
use crate::parser::IpaManifest;
use crate::refinement::{check_strong_refinement, ActionMapping, RefinementReport, RefinementVerdict, StateMapping};

/// Size and duration of one model-checking run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageStats {
    pub name: String,
    pub distinct_states: u64,
    pub transitions: u64,
    pub depth: usize,
    pub elapsed_secs: f64,
    pub verdict: String,
}

impl StageStats {
    fn of_refinement(name: String, r: &RefinementReport) -> StageStats {
        StageStats {
            name,
            distinct_states: r.distinct_states,
            transitions: r.transitions,
            depth: r.depth,
            elapsed_secs: r.elapsed.as_secs_f64(),
            verdict: r.verdict.label().to_string(),
        }
    }

    fn of_exploration(name: String, r: &ExplorationReport) -> StageStats {
        StageStats {
            name,
            distinct_states: r.distinct_states,
            transitions: r.transitions,
            depth: r.depth,
            elapsed_secs: r.elapsed.as_secs_f64(),
            verdict: serde_json::to_value(r.verdict)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModuleCheck {
    pub module: Arc<str>,
    pub composed: ComposedSpec,
    pub report: RefinementReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyStatus {
    /// Checked on A and carried over to S by the refinement.
    HoldsForS,
    /// Holds on A but mentions variables S does not have.
    HoldsForAOnly,
    ViolatedInA,
    /// Mentions variables outside A; nothing follows for S.
    NotTransferable,
    /// The pipeline stopped before this property could be settled.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum Conclusion {
    Refines,
    Blocked { stage: String, reason: String, inconclusive: bool },
}

impl Conclusion {
    pub fn refines(&self) -> bool {
        matches!(self, Conclusion::Refines)
    }

    pub fn describe(&self) -> String {
        match self {
            Conclusion::Refines => "S ⇒ A".into(),
            Conclusion::Blocked { stage, reason, inconclusive: true } => {
                format!("blocked: inconclusive at {stage} ({reason})")
            }
            Conclusion::Blocked { stage, reason, .. } => format!("blocked at {stage}: {reason}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompositionalReport {
    pub analysis: AnalysisReport,
    pub abstract_spec: Option<ComposedSpec>,
    pub abstract_check: Option<ExplorationReport>,
    pub modules: Vec<ModuleCheck>,
    pub properties: Vec<(Arc<str>, PropertyStatus)>,
    pub conclusion: Conclusion,
}

/// Properties to check: manifest invariants first, then the root spec's own.
pub fn properties(spec: &Spec, manifest: &IpaManifest) -> Vec<NamedExpr> {
    let mut out: Vec<NamedExpr> = manifest.invariants.clone();
    for inv in &spec.invariants {
        if !out.iter().any(|p| p.name == inv.name) {
            out.push(inv.clone());
        }
    }
    out
}

// Properties whose variables all exist in `target`, relinked to it.
fn restrict(props: &[NamedExpr], target: &Spec) -> Vec<NamedExpr> {
    props
        .iter()
        .filter(|p| p.expr.read_set().iter().all(|v| target.var_index(v).is_some()))
        .map(|p| {
            let mut p = p.clone();
            p.expr.map_vars(&mut |v: &mut VarRef| v.slot = target.var_index(&v.name).expect("filtered"));
            p
        })
        .collect()
}

fn refinement_failure(stage: &str, r: &RefinementReport) -> Option<Conclusion> {
    match &r.verdict {
        RefinementVerdict::Holds => None,
        RefinementVerdict::Fails(f) => Some(Conclusion::Blocked {
            stage: stage.to_string(),
            reason: format!("{} at step {}", serde_json::to_value(f.reason).unwrap().as_str().unwrap_or(""), f.step),
            inconclusive: false,
        }),
        RefinementVerdict::Inconclusive { bound } => Some(Conclusion::Blocked {
            stage: stage.to_string(),
            reason: format!("{bound} reached"),
            inconclusive: true,
        }),
    }
}

/// Refine entries for the abstract variables that `b` lacks.
fn mapping_into_a(b: &Spec, a: &Spec, manifest: &IpaManifest) -> Result<StateMapping, ComposeError> {
    let overrides: Vec<_> = a
        .vars
        .iter()
        .filter(|v| b.var_index(&v.name).is_none())
        .filter_map(|v| manifest.refine_expr(&v.name).map(|e| (v.name.clone(), e.clone())))
        .collect();
    Ok(StateMapping::new(b, a, &overrides)?)
}

/// Constraint check, exploration of A, then `C_i ⇒ A` for every module.
pub fn compositional_check(
    spec: &Spec,
    manifest: &IpaManifest,
    bounds: &Bounds,
) -> Result<CompositionalReport, ComposeError> {
    let analysis = analyze(spec)?;
    let constraints = check_abstraction_constraints(spec, manifest, &analysis);
    let warnings = blind_writes(spec, &analysis);
    let passed = constraints.passed();
    let first_fail = constraints
        .failures()
        .next()
        .map(|(m, r)| format!("constraint {} fails for {m}: {}", r.constraint, r.violations[0].message));
    let props = properties(spec, manifest);
    let mut report = CompositionalReport {
        analysis: AnalysisReport::new(&analysis, Some(constraints), &warnings),
        abstract_spec: None,
        abstract_check: None,
        modules: Vec::new(),
        properties: props.iter().map(|p| (p.name.clone(), PropertyStatus::Unknown)).collect(),
        conclusion: Conclusion::Refines,
    };
    if !passed {
        report.conclusion = Conclusion::Blocked {
            stage: "constraints".into(),
            reason: first_fail.unwrap_or_default(),
            inconclusive: false,
        };
        return Ok(report);
    }

    let a = build_abstract_spec(spec, manifest, &analysis)?;
    let on_a = restrict(&props, &a.spec);
    let a_report = explore(&a.spec, &on_a, bounds)?;
    let mut blocked: Option<Conclusion> = match a_report.verdict {
        Verdict::Pass => None,
        Verdict::InvariantViolated => Some(Conclusion::Blocked {
            stage: "A".into(),
            reason: format!("invariant {} violated", a_report.violation.as_ref().map_or("?", |v| v.invariant.as_str())),
            inconclusive: false,
        }),
        Verdict::DeadlockFound => {
            Some(Conclusion::Blocked { stage: "A".into(), reason: "deadlock".into(), inconclusive: false })
        }
        Verdict::BoundExceeded => Some(Conclusion::Blocked {
            stage: "A".into(),
            reason: format!("{} reached", a_report.bound.unwrap_or("bound")),
            inconclusive: true,
        }),
    };

    for m in &spec.modules {
        let c = build_compositional_spec(spec, manifest, &analysis, &m.name)?;
        let maps = compose_mappings(spec, manifest, &c, &m.name)?;
        let sm = mapping_into_a(&c.spec, &a.spec, manifest)?;
        let r = check_strong_refinement(&c.spec, &a.spec, &sm, &maps.g_bar_i, bounds)?;
        if blocked.is_none() {
            blocked = refinement_failure(&format!("C_{}", m.name), &r);
        }
        report.modules.push(ModuleCheck { module: m.name.clone(), composed: c, report: r });
    }

    let a_vars: VarSet = a.spec.var_names().into_iter().collect();
    let violated = a_report.violation.as_ref().map(|v| v.invariant.clone());
    for (p, (name, status)) in props.iter().zip(report.properties.iter_mut()) {
        let reads = p.expr.read_set();
        *status = if !reads.is_subset(&a_vars) {
            PropertyStatus::NotTransferable
        } else if violated.as_deref() == Some(name.as_ref()) {
            PropertyStatus::ViolatedInA
        } else if a_report.verdict != Verdict::Pass {
            PropertyStatus::Unknown
        } else if reads.iter().any(|v| spec.var_index(v).is_none()) {
            PropertyStatus::HoldsForAOnly
        } else if blocked.is_none() {
            PropertyStatus::HoldsForS
        } else {
            PropertyStatus::Unknown
        };
    }
    report.conclusion = blocked.unwrap_or(Conclusion::Refines);
    report.abstract_spec = Some(a);
    report.abstract_check = Some(a_report);
    Ok(report)
}

impl CompositionalReport {
    pub fn stats(&self) -> Vec<StageStats> {
        let mut out = Vec::new();
        if let Some(a) = &self.abstract_check {
            out.push(StageStats::of_exploration("A".into(), a));
        }
        for m in &self.modules {
            out.push(StageStats::of_refinement(format!("C_{}", m.module), &m.report));
        }
        out
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self.conclusion, Conclusion::Blocked { inconclusive: true, .. })
    }

    pub fn to_json(&self) -> Json {
        let a = self.abstract_spec.as_ref();
        let modules: Vec<Json> = self
            .modules
            .iter()
            .map(|m| {
                let mut j =
                    serde_json::to_value(StageStats::of_refinement(format!("C_{}", m.module), &m.report)).unwrap();
                j["module"] = json!(m.module.as_ref());
                j["scope"] = json!(m.composed.scope);
                if let (RefinementVerdict::Fails(f), Some(a)) = (&m.report.verdict, a) {
                    j["counterexample"] = f.to_json(&m.composed.spec, &a.spec);
                }
                j
            })
            .collect();
        let props: serde_json::Map<String, Json> =
            self.properties.iter().map(|(n, s)| (n.to_string(), json!(s))).collect();
        json!({
            "analysis": self.analysis,
            "abstract": match (a, &self.abstract_check) {
                (Some(a), Some(r)) => {
                    let mut j = r.to_json(&a.spec);
                    j["scope"] = json!(a.scope);
                    j["actions"] = json!(a.spec.actions().map(|x| x.name.as_ref()).collect::<Vec<_>>());
                    j
                }
                _ => Json::Null,
            },
            "modules": modules,
            "properties": props,
            "conclusion": self.conclusion,
            "summary": self.conclusion.describe(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct DirectReport {
    pub abstract_spec: ComposedSpec,
    pub refinement: RefinementReport,
    pub exploration: ExplorationReport,
}

impl DirectReport {
    pub fn holds(&self) -> bool {
        self.refinement.verdict.holds()
    }

    pub fn passed(&self) -> bool {
        self.holds() && matches!(self.exploration.verdict, Verdict::Pass)
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self.refinement.verdict, RefinementVerdict::Inconclusive { .. })
            || self.exploration.verdict == Verdict::BoundExceeded
    }

    pub fn to_json(&self, spec: &Spec) -> Json {
        let mut refinement = serde_json::to_value(StageStats::of_refinement("S".into(), &self.refinement)).unwrap();
        if let RefinementVerdict::Fails(f) = &self.refinement.verdict {
            refinement["counterexample"] = f.to_json(spec, &self.abstract_spec.spec);
        }
        json!({ "refinement": refinement, "exploration": self.exploration.to_json(spec) })
    }
}

/// `S ⇒ A` checked in one go, plus exploration of S against its properties.
pub fn direct_check(spec: &Spec, manifest: &IpaManifest, bounds: &Bounds) -> Result<DirectReport, ComposeError> {
    let analysis = analyze(spec)?;
    let a = build_abstract_spec(spec, manifest, &analysis)?;
    let sm = mapping_into_a(spec, &a.spec, manifest)?;
    let g = ActionMapping { entries: manifest.action_map.clone() };
    let refinement = check_strong_refinement(spec, &a.spec, &sm, &g, bounds)?;
    let on_s = restrict(&properties(spec, manifest), spec);
    let exploration = explore(spec, &on_s, bounds)?;
    Ok(DirectReport { abstract_spec: a, refinement, exploration })
}

/// Cost of the two routes. Compositional time sums the `C_i ⇒ A` checks;
/// direct time is the `S ⇒ A` check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostComparison {
    pub modules: Vec<StageStats>,
    pub direct: StageStats,
    pub t_comp: f64,
    pub t_direct: f64,
    pub ratio: Option<f64>,
    pub max_compositional_states: u64,
    pub direct_states: u64,
    pub state_ratio: Option<f64>,
}

impl CostComparison {
    pub fn new(comp: &CompositionalReport, direct: &DirectReport) -> CostComparison {
        let modules: Vec<StageStats> =
            comp.modules.iter().map(|m| StageStats::of_refinement(format!("T_{}", m.module), &m.report)).collect();
        let t_comp: Duration = comp.modules.iter().map(|m| m.report.elapsed).sum();
        let t_direct = direct.refinement.elapsed;
        let complete = !comp.modules.is_empty()
            && comp.modules.iter().all(|m| !matches!(m.report.verdict, RefinementVerdict::Inconclusive { .. }))
            && !matches!(direct.refinement.verdict, RefinementVerdict::Inconclusive { .. });
        let max_comp = comp
            .modules
            .iter()
            .map(|m| m.report.distinct_states)
            .chain(comp.abstract_check.as_ref().map(|a| a.distinct_states))
            .max()
            .unwrap_or(0);
        let ratio = (complete && !t_comp.is_zero()).then(|| t_direct.as_secs_f64() / t_comp.as_secs_f64());
        let state_ratio =
            (complete && max_comp > 0).then(|| direct.refinement.distinct_states as f64 / max_comp as f64);
        CostComparison {
            modules,
            direct: StageStats::of_refinement("T_direct".into(), &direct.refinement),
            t_comp: t_comp.as_secs_f64(),
            t_direct: t_direct.as_secs_f64(),
            ratio,
            max_compositional_states: max_comp,
            direct_states: direct.refinement.distinct_states,
            state_ratio,
        }
    }
}
