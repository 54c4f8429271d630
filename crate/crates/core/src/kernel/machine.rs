use std::sync::Arc;

use super::ast::{Action, ActionInstance, BinOp, Domain, Expr, ExprKind, Spec, State};
use super::eval::{apply_action, bool_of, eval_expr, free_locals, Env, EvalError};
use super::value::Value;

/// Parameter binding in parameter order.
pub type Binding = Vec<(Arc<str>, Value)>;

#[derive(Debug, Clone)]
struct ActionPlan {
    param_values: Vec<Vec<Value>>,
    /// `guards_at[k]` holds the guard conjuncts evaluated once the first `k`
    /// parameters are bound. Conjuncts keep their source order.
    guards_at: Vec<Vec<Expr>>,
}

#[derive(Debug, Clone)]
pub struct Successor {
    pub action: usize,
    pub binding: Binding,
    pub state: State,
}

/// Executable form of a spec: the flattened action list (module order, then
/// action order) with enumerated parameter domains.
#[derive(Debug, Clone)]
pub struct Machine {
    spec: Spec,
    domains: Vec<Domain>,
    actions: Vec<(usize, usize)>,
    plans: Vec<ActionPlan>,
}

impl Machine {
    pub fn new(spec: Spec) -> Result<Machine, EvalError> {
        let domains = spec.vars.iter().map(|v| v.domain.clone()).collect();
        let mut actions = Vec::new();
        let mut plans = Vec::new();
        for (mi, m) in spec.modules.iter().enumerate() {
            for (ai, a) in m.actions.iter().enumerate() {
                actions.push((mi, ai));
                plans.push(plan(a)?);
            }
        }
        Ok(Machine { spec, domains, actions, plans })
    }

    pub fn spec(&self) -> &Spec {
        &self.spec
    }

    pub fn into_spec(self) -> Spec {
        self.spec
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn action(&self, idx: usize) -> &Action {
        let (m, a) = self.actions[idx];
        &self.spec.modules[m].actions[a]
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        (0..self.actions.len()).find(|&i| self.action(i).name.as_ref() == name)
    }

    pub fn instance(&self, idx: usize, binding: &Binding) -> ActionInstance {
        ActionInstance { action: self.action(idx).name.clone(), binding: binding.clone() }
    }

    pub fn initial_state(&self) -> Result<State, EvalError> {
        let empty = State::new(Vec::new());
        let mut values = Vec::with_capacity(self.spec.vars.len());
        for (decl, e) in self.spec.vars.iter().zip(&self.spec.init) {
            let v = eval_expr(e, &empty, &mut Env::new())?;
            if !decl.domain.contains(&v) {
                return Err(EvalError::Setup {
                    span: e.span.clone(),
                    message: format!("initial value {v} of `{}` lies outside its declared domain", decl.name),
                });
            }
            values.push(v);
        }
        Ok(State::new(values))
    }

    /// Every binding of action `idx` whose guards all hold in `s`, in
    /// parameter-declaration order and then value order.
    pub fn enabled(&self, idx: usize, s: &State) -> Result<Vec<Binding>, EvalError> {
        let action = self.action(idx);
        let plan = &self.plans[idx];
        let mut out = Vec::new();
        let mut env = Env::new();
        self.enumerate(action, plan, s, 0, &mut env, &mut out)?;
        Ok(out)
    }

    fn enumerate(
        &self,
        action: &Action,
        plan: &ActionPlan,
        s: &State,
        depth: usize,
        env: &mut Env,
        out: &mut Vec<Binding>,
    ) -> Result<(), EvalError> {
        for g in &plan.guards_at[depth] {
            if !bool_of(g, s, env)? {
                return Ok(());
            }
        }
        if depth == action.params.len() {
            out.push(action.params.iter().zip(env.values()).map(|(p, v)| (p.name.clone(), v.clone())).collect());
            return Ok(());
        }
        let name = action.params[depth].name.clone();
        for v in &plan.param_values[depth] {
            env.push(name.clone(), v.clone());
            let r = self.enumerate(action, plan, s, depth + 1, env, out);
            env.pop();
            r?;
        }
        Ok(())
    }

    pub fn is_enabled(&self, idx: usize, binding: &Binding, s: &State) -> Result<bool, EvalError> {
        let action = self.action(idx);
        if binding.len() != action.params.len()
            || !action.params.iter().zip(binding).all(|(p, (_, v))| p.domain.contains(v))
        {
            return Ok(false);
        }
        let mut env = Env::from_binding(binding);
        for g in &action.guards {
            if !bool_of(g, s, &mut env)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Mixed-radix position of `binding` among the action's parameter tuples.
    pub fn binding_code(&self, idx: usize, binding: &Binding) -> u32 {
        let plan = &self.plans[idx];
        let mut code = 0u64;
        for (vals, (_, v)) in plan.param_values.iter().zip(binding) {
            let pos = vals.iter().position(|x| x == v).expect("binding value from the parameter domain");
            code = code * vals.len() as u64 + pos as u64;
        }
        u32::try_from(code).expect("parameter space fits in u32")
    }

    pub fn binding_from_code(&self, idx: usize, mut code: u32) -> Binding {
        let action = self.action(idx);
        let plan = &self.plans[idx];
        let mut out: Binding = Vec::with_capacity(action.params.len());
        for (p, vals) in action.params.iter().zip(&plan.param_values).rev() {
            let n = vals.len() as u32;
            out.push((p.name.clone(), vals[(code % n) as usize].clone()));
            code /= n;
        }
        out.reverse();
        out
    }

    pub fn apply(&self, idx: usize, binding: &Binding, s: &State) -> Result<State, EvalError> {
        apply_action(self.action(idx), &self.domains, binding, s)
    }

    /// All (instance, successor) pairs of `s` in module, action, binding order.
    pub fn successors(&self, s: &State) -> Result<Vec<Successor>, EvalError> {
        let mut out = Vec::new();
        for idx in 0..self.actions.len() {
            for binding in self.enabled(idx, s)? {
                let state = self.apply(idx, &binding, s)?;
                out.push(Successor { action: idx, binding, state });
            }
        }
        Ok(out)
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }
}

fn plan(a: &Action) -> Result<ActionPlan, EvalError> {
    let mut param_values = Vec::with_capacity(a.params.len());
    for p in &a.params {
        let vals = p.domain.enumerate().ok_or_else(|| EvalError::Setup {
            span: a.span.clone(),
            message: format!("parameter `{}` of `{}` ranges over a domain too large to enumerate", p.name, a.name),
        })?;
        param_values.push(vals);
    }
    let mut conjuncts = Vec::new();
    for g in &a.guards {
        flatten_and(g, &mut conjuncts);
    }
    let mut guards_at = vec![Vec::new(); a.params.len() + 1];
    let mut needed = 0;
    for c in conjuncts {
        let n = free_locals(&c)
            .iter()
            .filter_map(|n| a.params.iter().position(|p| &p.name == n))
            .map(|i| i + 1)
            .max()
            .unwrap_or(0);
        needed = needed.max(n);
        guards_at[needed].push(c);
    }
    Ok(ActionPlan { param_values, guards_at })
}

fn flatten_and(e: &Expr, out: &mut Vec<Expr>) {
    match &e.kind {
        ExprKind::Bin(BinOp::And, l, r) => {
            flatten_and(l, out);
            flatten_and(r, out);
        }
        _ => out.push(e.clone()),
    }
}
