//! Brute-force trace inclusion, kept deliberately separate from the
//! simulation checker so the two can be compared.

use std::collections::{HashSet, VecDeque};

use super::{project_state, ActionMapping, RefinementError, StateMapping};
use crate::explorer::{ExploreError, Trace};
use crate::kernel::{eval_expr, ActionInstance, Env, Machine, Spec, State};
use crate::parser::ActionTarget;

pub const ORACLE_MAX_STATES: usize = 5_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    Holds,
    /// A behavior of B whose image is not a behavior of A.
    Fails {
        trace: Trace,
        reason: String,
    },
}

impl OracleVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, OracleVerdict::Holds)
    }
}

fn setup(e: impl ToString) -> RefinementError {
    ExploreError::Setup(e.to_string()).into()
}

struct Oracle<'a> {
    b: Machine,
    a: Machine,
    sm: &'a StateMapping,
    am: &'a ActionMapping,
    // (state, remaining depth) pairs already known to be fine.
    clean: HashSet<(State, usize)>,
}

impl Oracle<'_> {
    // Image of one B step in A: `None` if it is a legal A step or a stutter.
    fn bad_step(&self, s: &State, inst: &ActionInstance, t: &State) -> Result<Option<String>, RefinementError> {
        let (ps, pt) = (project_state(s, self.sm)?, project_state(t, self.sm)?);
        match self.am.get(&inst.action) {
            None => Err(RefinementError::ActionMapping(format!("action {} is not mapped", inst.action))),
            Some(ActionTarget::Void) => Ok((ps != pt).then(|| format!("void step {inst} changes the abstract state"))),
            Some(ActionTarget::Action { action, args, .. }) => {
                let idx = self
                    .a
                    .action_index(action)
                    .ok_or_else(|| RefinementError::ActionMapping(format!("unknown abstract action {action}")))?;
                let mut env = Env::from_binding(&inst.binding);
                let mut binding = Vec::new();
                for (p, e) in self.a.action(idx).params.iter().zip(args) {
                    let e = super::relink(e, self.b.spec()).map_err(RefinementError::ActionMapping)?;
                    binding.push((p.name.clone(), eval_expr(&e, s, &mut env).map_err(setup)?));
                }
                let legal = self.a.is_enabled(idx, &binding, &ps).map_err(setup)?
                    && self.a.apply(idx, &binding, &ps).map(|r| r == pt).unwrap_or(false);
                Ok((!legal).then(|| format!("{inst} maps to {action}, which cannot make that step")))
            }
        }
    }

    fn dfs(&mut self, path: &mut Trace, depth: usize) -> Result<Option<String>, RefinementError> {
        let s = path.last_state().clone();
        if depth == 0 || self.clean.contains(&(s.clone(), depth)) {
            return Ok(None);
        }
        for succ in self.b.successors(&s).map_err(setup)? {
            let inst = self.b.instance(succ.action, &succ.binding);
            if let Some(why) = self.bad_step(&s, &inst, &succ.state)? {
                path.steps.push((inst, succ.state));
                return Ok(Some(why));
            }
            path.steps.push((inst, succ.state));
            if let Some(why) = self.dfs(path, depth - 1)? {
                return Ok(Some(why));
            }
            path.steps.pop();
        }
        self.clean.insert((s, depth));
        Ok(None)
    }
}

fn reachable(m: &Machine, limit: usize) -> Result<usize, RefinementError> {
    let init = m.initial_state().map_err(setup)?;
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([init.clone()]);
    seen.insert(init);
    while let Some(s) = queue.pop_front() {
        for succ in m.successors(&s).map_err(setup)? {
            if seen.insert(succ.state.clone()) {
                if seen.len() > limit {
                    return Err(RefinementError::OracleTooLarge { limit });
                }
                queue.push_back(succ.state);
            }
        }
    }
    Ok(seen.len())
}

/// Enumerates every behavior of B with at most `depth` steps and checks that
/// its image, with void steps as stutters, is a behavior of A.
pub fn trace_inclusion_oracle(
    b: &Spec,
    a: &Spec,
    sm: &StateMapping,
    am: &ActionMapping,
    depth: usize,
) -> Result<OracleVerdict, RefinementError> {
    let bm = Machine::new(b.clone()).map_err(setup)?;
    let amach = Machine::new(a.clone()).map_err(setup)?;
    reachable(&bm, ORACLE_MAX_STATES)?;
    let init = bm.initial_state().map_err(setup)?;
    if project_state(&init, sm)? != amach.initial_state().map_err(setup)? {
        return Ok(OracleVerdict::Fails {
            trace: Trace { initial: init, steps: Vec::new() },
            reason: "initial states differ".into(),
        });
    }
    let mut oracle = Oracle { b: bm, a: amach, sm, am, clean: HashSet::new() };
    let mut path = Trace { initial: init, steps: Vec::new() };
    Ok(match oracle.dfs(&mut path, depth)? {
        None => OracleVerdict::Holds,
        Some(reason) => OracleVerdict::Fails { trace: path, reason },
    })
}
