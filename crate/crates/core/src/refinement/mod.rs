//! Strong refinement `B ⇒ A`: every step of B, seen through a state mapping,
//! is either a step of the mapped abstract action or a stutter.

mod oracle;

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::explorer::engine::{self, Stop};
use crate::explorer::{Bounds, ExploreError, Trace};
use crate::kernel::{eval_expr, ActionInstance, Binding, Env, EvalError, Expr, ExprKind, Machine, Spec, State, VarRef};
use crate::parser::ActionTarget;

pub use oracle::{trace_inclusion_oracle, OracleVerdict, ORACLE_MAX_STATES};

#[derive(Debug, thiserror::Error)]
pub enum RefinementError {
    #[error("state mapping: {0}")]
    StateMapping(String),
    #[error("action mapping: {0}")]
    ActionMapping(String),
    #[error("projecting `{var}`: {source}")]
    Projection { var: Arc<str>, source: EvalError },
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error("oracle refused: B has more than {limit} reachable states")]
    OracleTooLarge { limit: usize },
}

// Points every variable of `e` at its slot in `target`.
fn relink(e: &Expr, target: &Spec) -> Result<Expr, String> {
    let mut e = e.clone();
    let mut missing = None;
    e.map_vars(&mut |v: &mut VarRef| match target.var_index(&v.name) {
        Some(i) => v.slot = i,
        None => missing = Some(v.name.clone()),
    });
    match missing {
        Some(n) => Err(format!("`{n}` is not a variable of {}", target.name)),
        None => Ok(e),
    }
}

/// One expression over B's variables per variable of A, in A's order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateMapping {
    pub exprs: Vec<(Arc<str>, Expr)>,
}

impl StateMapping {
    /// Identity on shared names, `overrides` for the rest.
    pub fn new(b: &Spec, a: &Spec, overrides: &[(Arc<str>, Expr)]) -> Result<StateMapping, RefinementError> {
        let mut exprs = Vec::with_capacity(a.vars.len());
        for v in &a.vars {
            let e = if let Some((_, e)) = overrides.iter().find(|(n, _)| n == &v.name) {
                relink(e, b).map_err(RefinementError::StateMapping)?
            } else if let Some(slot) = b.var_index(&v.name) {
                Expr::synth(ExprKind::Var(VarRef { name: v.name.clone(), slot }))
            } else {
                return Err(RefinementError::StateMapping(format!("no mapping for abstract variable `{}`", v.name)));
            };
            exprs.push((v.name.clone(), e));
        }
        Ok(StateMapping { exprs })
    }

    pub fn identity(spec: &Spec) -> StateMapping {
        StateMapping::new(spec, spec, &[]).expect("identity mapping is total")
    }
}

/// Abstract target for every action of B.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionMapping {
    pub entries: Vec<(Arc<str>, ActionTarget)>,
}

impl ActionMapping {
    pub fn identity(spec: &Spec) -> ActionMapping {
        let entries = spec
            .actions()
            .map(|a| {
                let args = a.params.iter().map(|p| Expr::synth(ExprKind::Local(p.name.clone()))).collect();
                (a.name.clone(), ActionTarget::Action { module: a.module.clone(), action: a.name.clone(), args })
            })
            .collect();
        ActionMapping { entries }
    }

    pub fn get(&self, action: &str) -> Option<&ActionTarget> {
        self.entries.iter().find(|(n, _)| n.as_ref() == action).map(|(_, t)| t)
    }
}

pub fn project_state(s: &State, m: &StateMapping) -> Result<State, RefinementError> {
    let mut env = Env::new();
    let mut out = Vec::with_capacity(m.exprs.len());
    for (v, e) in &m.exprs {
        out.push(eval_expr(e, s, &mut env).map_err(|source| RefinementError::Projection { var: v.clone(), source })?);
    }
    Ok(State::new(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    InitialMismatch,
    MappedActionDisabled,
    WrongPostState,
    VoidStepChangedProjection,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementFailure {
    pub reason: FailureReason,
    /// Behavior of B whose last step breaks the mapping; empty for an initial mismatch.
    pub trace: Trace,
    pub step: usize,
    pub projected_pre: State,
    pub projected_post: State,
    /// The abstract step that was attempted, if the action is not void.
    pub abstract_step: Option<ActionInstance>,
}

impl RefinementFailure {
    pub fn to_json(&self, b: &Spec, a: &Spec) -> serde_json::Value {
        let named = |s: &State| -> serde_json::Value {
            a.vars
                .iter()
                .zip(s.values())
                .map(|(v, x)| (v.name.to_string(), x.to_json()))
                .collect::<serde_json::Map<_, _>>()
                .into()
        };
        let mut j = self.trace.to_json(b);
        j["step"] = self.step.into();
        j["reason"] = serde_json::to_value(self.reason).expect("reason serializes");
        j["projected_pre"] = named(&self.projected_pre);
        j["projected_post"] = named(&self.projected_post);
        j["abstract_step"] = self.abstract_step.as_ref().map(|i| i.to_string()).into();
        j
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefinementVerdict {
    Holds,
    Fails(Box<RefinementFailure>),
    /// A bound stopped the search before every transition was checked.
    Inconclusive {
        bound: &'static str,
    },
}

impl RefinementVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, RefinementVerdict::Holds)
    }

    pub fn label(&self) -> &'static str {
        match self {
            RefinementVerdict::Holds => "holds",
            RefinementVerdict::Fails(_) => "fails",
            RefinementVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefinementReport {
    pub verdict: RefinementVerdict,
    pub distinct_states: u64,
    pub transitions: u64,
    pub depth: usize,
    pub elapsed: Duration,
}

/// Prepared checker: both machines plus mappings resolved to indices.
pub(crate) struct Simulation<'a> {
    pub b: &'a Machine,
    pub a: &'a Machine,
    pub sm: &'a StateMapping,
    /// Per B action: `None` for void, else (A action index, argument exprs).
    targets: Vec<Option<(usize, Vec<Expr>)>>,
}

pub(crate) struct StepFailure {
    pub reason: FailureReason,
    pub pre: State,
    pub post: State,
    pub abstract_step: Option<ActionInstance>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        b: &'a Machine,
        a: &'a Machine,
        sm: &'a StateMapping,
        am: &ActionMapping,
    ) -> Result<Self, RefinementError> {
        if sm.exprs.len() != a.spec().vars.len() {
            return Err(RefinementError::StateMapping("mapping does not cover every abstract variable".into()));
        }
        let mut targets = Vec::with_capacity(b.action_count());
        for i in 0..b.action_count() {
            let ba = b.action(i);
            let t = match am.get(&ba.name) {
                None => return Err(RefinementError::ActionMapping(format!("action {} is not mapped", ba.name))),
                Some(ActionTarget::Void) => None,
                Some(ActionTarget::Action { action, args, .. }) => {
                    let idx = a.action_index(action).ok_or_else(|| {
                        RefinementError::ActionMapping(format!("{} has no action {action}", a.spec().name))
                    })?;
                    if a.action(idx).params.len() != args.len() {
                        return Err(RefinementError::ActionMapping(format!(
                            "{} -> {action}: expected {} arguments, got {}",
                            ba.name,
                            a.action(idx).params.len(),
                            args.len()
                        )));
                    }
                    let args = args
                        .iter()
                        .map(|e| relink(e, b.spec()))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(RefinementError::ActionMapping)?;
                    Some((idx, args))
                }
            };
            targets.push(t);
        }
        Ok(Simulation { b, a, sm, targets })
    }

    fn project(&self, s: &State) -> Result<State, EvalError> {
        project_state(s, self.sm).map_err(|e| match e {
            RefinementError::Projection { source, .. } => source,
            other => EvalError::Setup { span: Default::default(), message: other.to_string() },
        })
    }

    pub fn initial_mismatch(&self) -> Result<Option<StepFailure>, RefinementError> {
        let b0 = self.b.initial_state().map_err(|e| ExploreError::Setup(e.to_string()))?;
        let a0 = self.a.initial_state().map_err(|e| ExploreError::Setup(e.to_string()))?;
        let p = project_state(&b0, self.sm)?;
        Ok((p != a0).then_some(StepFailure {
            reason: FailureReason::InitialMismatch,
            pre: p,
            post: a0,
            abstract_step: None,
        }))
    }

    /// Checks one transition of B against A.
    pub fn step(
        &self,
        s: &State,
        action: usize,
        binding: &Binding,
        t: &State,
    ) -> Result<Option<StepFailure>, EvalError> {
        let pre = self.project(s)?;
        let post = self.project(t)?;
        let Some((idx, args)) = &self.targets[action] else {
            return Ok((pre != post).then_some(StepFailure {
                reason: FailureReason::VoidStepChangedProjection,
                pre,
                post,
                abstract_step: None,
            }));
        };
        let mut env = Env::from_binding(binding);
        let mut abinding = Vec::with_capacity(args.len());
        for (p, e) in self.a.action(*idx).params.iter().zip(args) {
            abinding.push((p.name.clone(), eval_expr(e, s, &mut env)?));
        }
        let inst = self.a.instance(*idx, &abinding);
        if !self.a.is_enabled(*idx, &abinding, &pre)? {
            return Ok(Some(StepFailure {
                reason: FailureReason::MappedActionDisabled,
                pre,
                post,
                abstract_step: Some(inst),
            }));
        }
        // The abstract action may leave its declared domain; that is a wrong
        // post-state as far as the mapping is concerned.
        let ok = matches!(self.a.apply(*idx, &abinding, &pre), Ok(r) if r == post);
        Ok((!ok).then_some(StepFailure { reason: FailureReason::WrongPostState, pre, post, abstract_step: Some(inst) }))
    }
}

/// Checks `B ⇒ A` transition by transition over B's reachable states.
pub fn check_strong_refinement(
    b: &Spec,
    a: &Spec,
    sm: &StateMapping,
    am: &ActionMapping,
    bounds: &Bounds,
) -> Result<RefinementReport, RefinementError> {
    let bm = Machine::new(b.clone()).map_err(|e| ExploreError::Setup(e.to_string()))?;
    let amach = Machine::new(a.clone()).map_err(|e| ExploreError::Setup(e.to_string()))?;
    check_machines(&bm, &amach, sm, am, bounds)
}

pub(crate) fn check_machines(
    b: &Machine,
    a: &Machine,
    sm: &StateMapping,
    am: &ActionMapping,
    bounds: &Bounds,
) -> Result<RefinementReport, RefinementError> {
    let start = Instant::now();
    let sim = Simulation::new(b, a, sm, am)?;
    if let Some(f) = sim.initial_mismatch()? {
        let initial = b.initial_state().map_err(|e| ExploreError::Setup(e.to_string()))?;
        let failure = RefinementFailure {
            reason: f.reason,
            trace: Trace { initial, steps: Vec::new() },
            step: 0,
            projected_pre: f.pre,
            projected_post: f.post,
            abstract_step: None,
        };
        return Ok(RefinementReport {
            verdict: RefinementVerdict::Fails(Box::new(failure)),
            distinct_states: 1,
            transitions: 0,
            depth: 0,
            elapsed: start.elapsed(),
        });
    }
    let hooks = engine::Hooks {
        on_state: |_: &State| Ok(None),
        on_edge: |s: &State, action: usize, binding: &Binding, t: &State| sim.step(s, action, binding, t),
    };
    // A terminal state says nothing about refinement, so never stop on one.
    let bounds = Bounds { deadlock_is_error: false, ..bounds.clone() };
    let mut out = engine::run(b, &bounds, hooks)?;
    let verdict = match out.stop.take() {
        None => RefinementVerdict::Holds,
        Some(Stop::MaxStates) => RefinementVerdict::Inconclusive { bound: "max-states" },
        Some(Stop::MaxDepth) => RefinementVerdict::Inconclusive { bound: "max-depth" },
        Some(Stop::State { .. } | Stop::Deadlock { .. }) => unreachable!("no state hook and deadlocks allowed"),
        Some(Stop::Edge { node, action, binding, post, finding }) => {
            let mut trace = out.trace_to(b, node);
            trace.steps.push((b.instance(action, &binding), post));
            RefinementVerdict::Fails(Box::new(RefinementFailure {
                reason: finding.reason,
                step: trace.len(),
                trace,
                projected_pre: finding.pre,
                projected_post: finding.post,
                abstract_step: finding.abstract_step,
            }))
        }
    };
    Ok(RefinementReport {
        verdict,
        distinct_states: out.distinct,
        transitions: out.transitions,
        depth: out.depth,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests;
