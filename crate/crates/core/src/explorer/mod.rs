//! Explicit-state breadth-first exploration with invariant checking.

pub(crate) mod engine;
mod trace;

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::kernel::{bool_of, Env, EvalError, Machine, NamedExpr, Spec};

pub(crate) use trace::replay_on;
pub use trace::{trace_replay, ReplayVerdict, Trace};

pub const DEFAULT_MAX_STATES: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub max_states: usize,
    pub max_depth: Option<usize>,
    pub deadlock_is_error: bool,
    /// Worker threads; 0 lets the pool pick one per core.
    pub workers: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_states: DEFAULT_MAX_STATES, max_depth: None, deadlock_is_error: false, workers: 0 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExploreError {
    #[error("cannot compute the initial state: {0}")]
    Setup(String),
    #[error("evaluation failed in state [{state}]{}: {source}", action.as_ref().map(|a| format!(" while firing {a}")).unwrap_or_default())]
    Eval { state: String, action: Option<String>, source: Box<EvalError> },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    InvariantViolated,
    DeadlockFound,
    BoundExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub invariant: String,
    pub trace: Trace,
}

#[derive(Debug, Clone)]
pub struct ExplorationReport {
    pub verdict: Verdict,
    pub distinct_states: u64,
    pub transitions: u64,
    pub depth: usize,
    pub elapsed: Duration,
    pub violation: Option<Violation>,
    /// Path to a state without successors; fatal only under `deadlock_is_error`.
    pub deadlock: Option<Trace>,
    /// Which bound stopped the search.
    pub bound: Option<&'static str>,
}

impl ExplorationReport {
    pub fn to_json(&self, spec: &Spec) -> serde_json::Value {
        serde_json::json!({
            "verdict": self.verdict,
            "distinct_states": self.distinct_states,
            "transitions": self.transitions,
            "depth": self.depth,
            "elapsed_secs": self.elapsed.as_secs_f64(),
            "violation": self.violation.as_ref().map(|v| serde_json::json!({
                "invariant": v.invariant,
                "trace": v.trace.to_json(spec),
            })),
            "deadlock": self.deadlock.as_ref().map(|t| t.to_json(spec)),
            "bound": self.bound,
        })
    }
}

/// Breadth-first search of the reachable states of `spec`, checking each
/// invariant on every distinct state.
pub fn explore(spec: &Spec, invariants: &[NamedExpr], bounds: &Bounds) -> Result<ExplorationReport, ExploreError> {
    let machine = Machine::new(spec.clone()).map_err(|e| ExploreError::Setup(e.to_string()))?;
    explore_machine(&machine, invariants, bounds)
}

pub fn explore_machine(
    machine: &Machine,
    invariants: &[NamedExpr],
    bounds: &Bounds,
) -> Result<ExplorationReport, ExploreError> {
    let start = Instant::now();
    let hooks = engine::Hooks {
        on_state: |s: &crate::kernel::State| -> Result<Option<usize>, EvalError> {
            for (i, inv) in invariants.iter().enumerate() {
                if !bool_of(&inv.expr, s, &mut Env::new())? {
                    return Ok(Some(i));
                }
            }
            Ok(None)
        },
        on_edge: |_: &_, _, _: &_, _: &_| Ok(None),
    };
    let out = engine::run(machine, bounds, hooks)?;
    let mut report = ExplorationReport {
        verdict: Verdict::Pass,
        distinct_states: out.distinct,
        transitions: out.transitions,
        depth: out.depth,
        elapsed: Duration::ZERO,
        violation: None,
        deadlock: out.deadlock.map(|n| out.trace_to(machine, n)),
        bound: None,
    };
    match &out.stop {
        None => {}
        Some(engine::Stop::State { node, finding }) => {
            report.verdict = Verdict::InvariantViolated;
            let trace = out.trace_to(machine, *node);
            assert!(replay_on(machine, &trace).is_valid(), "counterexample does not replay");
            report.violation = Some(Violation { invariant: invariants[*finding].name.to_string(), trace });
        }
        Some(engine::Stop::Deadlock { node }) => {
            report.verdict = Verdict::DeadlockFound;
            report.deadlock = Some(out.trace_to(machine, *node));
        }
        Some(engine::Stop::MaxStates) => {
            report.verdict = Verdict::BoundExceeded;
            report.bound = Some("max-states");
        }
        Some(engine::Stop::MaxDepth) => {
            report.verdict = Verdict::BoundExceeded;
            report.bound = Some("max-depth");
        }
        Some(engine::Stop::Edge { .. }) => unreachable!("exploration installs no edge hook"),
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests;
