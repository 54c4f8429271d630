//! Values, syntax trees and the transition semantics of specifications.

pub mod ast;
pub mod eval;
pub mod machine;
pub mod value;

pub use ast::*;
pub use eval::{apply_action, bool_of, eval_expr, Env, EvalError};
pub use machine::{Binding, Machine, Successor};
pub use value::Value;

/// The unique initial state of `spec`.
pub fn initial_state(spec: &Spec) -> Result<State, EvalError> {
    Machine::new(spec.clone())?.initial_state()
}

/// Enabled instances of the named action in `s`, in enumeration order.
/// Unknown action names yield no instances.
pub fn enabled_bindings(spec: &Spec, action: &str, s: &State) -> Result<Vec<ActionInstance>, EvalError> {
    let m = Machine::new(spec.clone())?;
    let Some(idx) = m.action_index(action) else {
        return Ok(Vec::new());
    };
    Ok(m.enabled(idx, s)?.iter().map(|b| m.instance(idx, b)).collect())
}

/// Every (instance, successor) pair of `s` in module, action, binding order.
pub fn successors(spec: &Spec, s: &State) -> Result<Vec<(ActionInstance, State)>, EvalError> {
    let m = Machine::new(spec.clone())?;
    Ok(m.successors(s)?.into_iter().map(|succ| (m.instance(succ.action, &succ.binding), succ.state)).collect())
}
