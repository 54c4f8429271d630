use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use super::ast::{Action, BinOp, Builtin, ExceptClause, Expr, ExprKind, PathElem, Span, State};
use super::value::Value;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("{span}: {message}")]
    Expr { span: Span, message: String },
    #[error("{span}: value {value} of `{var}` lies outside its declared domain (after {instance})")]
    BoundViolation { span: Span, instance: String, var: String, value: String },
    #[error("{span}: {message}")]
    Setup { span: Span, message: String },
}

impl EvalError {
    fn at(span: &Span, message: impl Into<String>) -> EvalError {
        EvalError::Expr { span: span.clone(), message: message.into() }
    }
}

/// Bindings of action parameters and quantifier variables, innermost last.
#[derive(Debug, Clone, Default)]
pub struct Env {
    frames: Vec<(Arc<str>, Value)>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn from_binding(binding: &[(Arc<str>, Value)]) -> Env {
        Env { frames: binding.to_vec() }
    }

    pub fn push(&mut self, name: Arc<str>, value: Value) {
        self.frames.push((name, value));
    }

    pub fn pop(&mut self) {
        self.frames.pop();
    }

    pub fn truncate(&mut self, len: usize) {
        self.frames.truncate(len);
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Bound values, outermost first.
    pub fn values(&self) -> impl Iterator<Item = &Value> {
        self.frames.iter().map(|(_, v)| v)
    }

    fn lookup(&self, name: &str) -> Option<&Value> {
        self.frames.iter().rev().find(|(n, _)| n.as_ref() == name).map(|(_, v)| v)
    }
}

const MAX_RANGE: i64 = 1 << 16;

/// Evaluates `e` in state `s` under local bindings `env`. Pure: the
/// environment is restored before returning.
pub fn eval_expr(e: &Expr, s: &State, env: &mut Env) -> Result<Value, EvalError> {
    match &e.kind {
        ExprKind::Bool(b) => Ok(Value::Bool(*b)),
        ExprKind::Int(i) => Ok(Value::Int(*i)),
        ExprKind::Sym(name) => Ok(Value::Sym(name.clone())),
        ExprKind::Const(_, v) => Ok(Value::Int(*v)),
        ExprKind::SortSet(_, v) => Ok(v.clone()),
        ExprKind::Name(n) => Err(EvalError::at(&e.span, format!("unresolved name `{n}`"))),
        ExprKind::Var(v) => {
            s.0.get(v.slot)
                .cloned()
                .ok_or_else(|| EvalError::at(&e.span, format!("variable `{}` is not part of this state", v.name)))
        }
        ExprKind::Local(n) => {
            env.lookup(n).cloned().ok_or_else(|| EvalError::at(&e.span, format!("unbound parameter `{n}`")))
        }
        ExprKind::Not(x) => Ok(Value::Bool(!bool_of(x, s, env)?)),
        ExprKind::Neg(x) => {
            let v = int_of(x, s, env)?;
            v.checked_neg().map(Value::Int).ok_or_else(|| EvalError::at(&e.span, "integer overflow"))
        }
        ExprKind::Bin(op, l, r) => eval_bin(e, *op, l, r, s, env),
        ExprKind::SetLit(items) => {
            let mut out = BTreeSet::new();
            for it in items {
                out.insert(eval_expr(it, s, env)?);
            }
            Ok(Value::Set(Arc::new(out)))
        }
        ExprKind::SeqLit(items) => {
            Ok(Value::seq(items.iter().map(|it| eval_expr(it, s, env)).collect::<Result<Vec<_>, _>>()?))
        }
        ExprKind::RecordLit(fields) => {
            let mut out = BTreeMap::new();
            for (name, fe) in fields {
                out.insert(name.clone(), eval_expr(fe, s, env)?);
            }
            Ok(Value::Record(Arc::new(out)))
        }
        ExprKind::MapComp { var, domain, body } => {
            let dom = set_of(domain, s, env)?;
            let mut out = BTreeMap::new();
            for k in dom.iter() {
                env.push(var.clone(), k.clone());
                let v = eval_expr(body, s, env);
                env.pop();
                out.insert(k.clone(), v?);
            }
            Ok(Value::Map(Arc::new(out)))
        }
        ExprKind::SetFilter { var, domain, pred } => {
            let dom = set_of(domain, s, env)?;
            let mut out = BTreeSet::new();
            for k in dom.iter() {
                env.push(var.clone(), k.clone());
                let keep = bool_of(pred, s, env);
                env.pop();
                if keep? {
                    out.insert(k.clone());
                }
            }
            Ok(Value::Set(Arc::new(out)))
        }
        ExprKind::Quant { forall, var, domain, body } => {
            let dom = set_of(domain, s, env)?;
            for k in dom.iter() {
                env.push(var.clone(), k.clone());
                let b = bool_of(body, s, env);
                env.pop();
                if b? != *forall {
                    return Ok(Value::Bool(!*forall));
                }
            }
            Ok(Value::Bool(*forall))
        }
        ExprKind::If(c, t, f) => {
            if bool_of(c, s, env)? {
                eval_expr(t, s, env)
            } else {
                eval_expr(f, s, env)
            }
        }
        ExprKind::Call(b, args) => eval_call(e, *b, args, s, env),
        ExprKind::Apply(f, x) => {
            let fv = eval_expr(f, s, env)?;
            let xv = eval_expr(x, s, env)?;
            apply_value(&fv, &xv).map_err(|m| EvalError::at(&e.span, m))
        }
        ExprKind::Field(r, name) => match eval_expr(r, s, env)? {
            Value::Record(fields) => {
                fields.get(name).cloned().ok_or_else(|| EvalError::at(&e.span, format!("record has no field `{name}`")))
            }
            other => Err(EvalError::at(&e.span, format!("field access on a {}", other.kind()))),
        },
        ExprKind::Except(base, clauses) => {
            let mut v = eval_expr(base, s, env)?;
            for ExceptClause { path, value } in clauses {
                let mut keys = Vec::with_capacity(path.len());
                for p in path {
                    keys.push(match p {
                        PathElem::Index(ix) => PathKey::Index(eval_expr(ix, s, env)?),
                        PathElem::Field(f) => PathKey::Field(f.clone()),
                    });
                }
                let new = eval_expr(value, s, env)?;
                v = update_path(&v, &keys, new).map_err(|m| EvalError::at(&e.span, m))?;
            }
            Ok(v)
        }
    }
}

pub fn bool_of(e: &Expr, s: &State, env: &mut Env) -> Result<bool, EvalError> {
    match eval_expr(e, s, env)? {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::at(&e.span, format!("expected a boolean, found a {}", other.kind()))),
    }
}

fn int_of(e: &Expr, s: &State, env: &mut Env) -> Result<i64, EvalError> {
    match eval_expr(e, s, env)? {
        Value::Int(i) => Ok(i),
        other => Err(EvalError::at(&e.span, format!("expected an integer, found a {}", other.kind()))),
    }
}

fn set_of(e: &Expr, s: &State, env: &mut Env) -> Result<Arc<BTreeSet<Value>>, EvalError> {
    match eval_expr(e, s, env)? {
        Value::Set(items) => Ok(items),
        other => Err(EvalError::at(&e.span, format!("expected a set, found a {}", other.kind()))),
    }
}

fn seq_of(e: &Expr, s: &State, env: &mut Env) -> Result<Arc<Vec<Value>>, EvalError> {
    match eval_expr(e, s, env)? {
        Value::Seq(items) => Ok(items),
        other => Err(EvalError::at(&e.span, format!("expected a sequence, found a {}", other.kind()))),
    }
}

fn eval_bin(e: &Expr, op: BinOp, l: &Expr, r: &Expr, s: &State, env: &mut Env) -> Result<Value, EvalError> {
    let overflow = || EvalError::at(&e.span, "integer overflow");
    match op {
        BinOp::And => Ok(Value::Bool(bool_of(l, s, env)? && bool_of(r, s, env)?)),
        BinOp::Or => Ok(Value::Bool(bool_of(l, s, env)? || bool_of(r, s, env)?)),
        BinOp::Implies => Ok(Value::Bool(!bool_of(l, s, env)? || bool_of(r, s, env)?)),
        BinOp::Eq => Ok(Value::Bool(eval_expr(l, s, env)? == eval_expr(r, s, env)?)),
        BinOp::Ne => Ok(Value::Bool(eval_expr(l, s, env)? != eval_expr(r, s, env)?)),
        BinOp::Lt => Ok(Value::Bool(int_of(l, s, env)? < int_of(r, s, env)?)),
        BinOp::Le => Ok(Value::Bool(int_of(l, s, env)? <= int_of(r, s, env)?)),
        BinOp::Gt => Ok(Value::Bool(int_of(l, s, env)? > int_of(r, s, env)?)),
        BinOp::Ge => Ok(Value::Bool(int_of(l, s, env)? >= int_of(r, s, env)?)),
        BinOp::Add => int_of(l, s, env)?.checked_add(int_of(r, s, env)?).map(Value::Int).ok_or_else(overflow),
        BinOp::Sub => int_of(l, s, env)?.checked_sub(int_of(r, s, env)?).map(Value::Int).ok_or_else(overflow),
        BinOp::Mul => int_of(l, s, env)?.checked_mul(int_of(r, s, env)?).map(Value::Int).ok_or_else(overflow),
        BinOp::In | BinOp::NotIn => {
            let x = eval_expr(l, s, env)?;
            let set = set_of(r, s, env)?;
            Ok(Value::Bool(set.contains(&x) == (op == BinOp::In)))
        }
        BinOp::Subseteq => {
            let a = set_of(l, s, env)?;
            let b = set_of(r, s, env)?;
            Ok(Value::Bool(a.is_subset(&b)))
        }
        BinOp::Range => {
            let lo = int_of(l, s, env)?;
            let hi = int_of(r, s, env)?;
            if hi.saturating_sub(lo) > MAX_RANGE {
                return Err(EvalError::at(&e.span, format!("range {lo}..{hi} is too large")));
            }
            Ok(Value::set((lo..=hi).map(Value::Int)))
        }
        BinOp::Union | BinOp::Intersect | BinOp::SetMinus => {
            let a = set_of(l, s, env)?;
            let b = set_of(r, s, env)?;
            let out: BTreeSet<Value> = match op {
                BinOp::Union => a.union(&b).cloned().collect(),
                BinOp::Intersect => a.intersection(&b).cloned().collect(),
                _ => a.difference(&b).cloned().collect(),
            };
            Ok(Value::Set(Arc::new(out)))
        }
    }
}

fn eval_call(e: &Expr, b: Builtin, args: &[Expr], s: &State, env: &mut Env) -> Result<Value, EvalError> {
    match b {
        Builtin::Cardinality => Ok(Value::Int(set_of(&args[0], s, env)?.len() as i64)),
        Builtin::Len => Ok(Value::Int(seq_of(&args[0], s, env)?.len() as i64)),
        Builtin::Append => {
            let seq = seq_of(&args[0], s, env)?;
            let x = eval_expr(&args[1], s, env)?;
            let mut out = (*seq).clone();
            out.push(x);
            Ok(Value::seq(out))
        }
        Builtin::SubSeq => {
            let seq = seq_of(&args[0], s, env)?;
            let from = int_of(&args[1], s, env)?;
            let to = int_of(&args[2], s, env)?;
            if to < from {
                return Ok(Value::seq([]));
            }
            if from < 1 || to > seq.len() as i64 {
                return Err(EvalError::at(
                    &e.span,
                    format!("SubSeq bounds {from}..{to} outside sequence of length {}", seq.len()),
                ));
            }
            Ok(Value::seq(seq[(from - 1) as usize..to as usize].iter().cloned()))
        }
        Builtin::Head | Builtin::Tail => {
            let seq = seq_of(&args[0], s, env)?;
            if seq.is_empty() {
                return Err(EvalError::at(&e.span, format!("{} of an empty sequence", b.name())));
            }
            Ok(if b == Builtin::Head { seq[0].clone() } else { Value::seq(seq[1..].iter().cloned()) })
        }
        Builtin::Max | Builtin::Min => {
            let x = int_of(&args[0], s, env)?;
            let y = int_of(&args[1], s, env)?;
            Ok(Value::Int(if b == Builtin::Max { x.max(y) } else { x.min(y) }))
        }
    }
}

fn apply_value(f: &Value, x: &Value) -> Result<Value, String> {
    match (f, x) {
        (Value::Map(m), k) => m.get(k).cloned().ok_or_else(|| format!("{k} is not in the domain of the map")),
        (Value::Seq(items), Value::Int(i)) => {
            if *i >= 1 && (*i as usize) <= items.len() {
                Ok(items[(*i - 1) as usize].clone())
            } else {
                Err(format!("index {i} out of range for sequence of length {}", items.len()))
            }
        }
        (other, _) => Err(format!("cannot index a {} with a {}", other.kind(), x.kind())),
    }
}

enum PathKey {
    Index(Value),
    Field(Arc<str>),
}

fn update_path(base: &Value, path: &[PathKey], new: Value) -> Result<Value, String> {
    let Some((head, rest)) = path.split_first() else {
        return Ok(new);
    };
    match (base, head) {
        (Value::Map(m), PathKey::Index(k)) => {
            let old = m.get(k).ok_or_else(|| format!("{k} is not in the domain of the map"))?;
            let inner = update_path(old, rest, new)?;
            let mut out = (**m).clone();
            out.insert(k.clone(), inner);
            Ok(Value::Map(Arc::new(out)))
        }
        (Value::Seq(items), PathKey::Index(Value::Int(i))) => {
            if *i < 1 || *i as usize > items.len() {
                return Err(format!("index {i} out of range for sequence of length {}", items.len()));
            }
            let ix = (*i - 1) as usize;
            let inner = update_path(&items[ix], rest, new)?;
            let mut out = (**items).clone();
            out[ix] = inner;
            Ok(Value::seq(out))
        }
        (Value::Record(r), PathKey::Field(f)) => {
            let old = r.get(f).ok_or_else(|| format!("record has no field `{f}`"))?;
            let inner = update_path(old, rest, new)?;
            let mut out = (**r).clone();
            out.insert(f.clone(), inner);
            Ok(Value::Record(Arc::new(out)))
        }
        (other, _) => Err(format!("EXCEPT path does not fit a {}", other.kind())),
    }
}

/// Local names occurring free in `e`.
pub fn free_locals(e: &Expr) -> BTreeSet<Arc<str>> {
    fn go(e: &Expr, bound: &mut Vec<Arc<str>>, out: &mut BTreeSet<Arc<str>>) {
        match &e.kind {
            ExprKind::Local(n) => {
                if !bound.contains(n) {
                    out.insert(n.clone());
                }
            }
            ExprKind::MapComp { var, domain, body: inner }
            | ExprKind::SetFilter { var, domain, pred: inner }
            | ExprKind::Quant { var, domain, body: inner, .. } => {
                go(domain, bound, out);
                bound.push(var.clone());
                go(inner, bound, out);
                bound.pop();
            }
            _ => e.for_each_child(|c| go(c, bound, out)),
        }
    }
    let mut out = BTreeSet::new();
    go(e, &mut Vec::new(), &mut out);
    out
}

/// Evaluates every update right-hand side against the pre-state and builds
/// the post-state, checking the declared domain of each assigned variable.
pub fn apply_action(
    action: &Action,
    domains: &[super::ast::Domain],
    binding: &[(Arc<str>, Value)],
    s: &State,
) -> Result<State, EvalError> {
    let mut env = Env::from_binding(binding);
    let mut values: Vec<Value> = s.values().to_vec();
    for u in &action.updates {
        let v = eval_expr(&u.expr, s, &mut env)?;
        if !domains[u.var.slot].contains(&v) {
            return Err(EvalError::BoundViolation {
                span: u.span.clone(),
                instance: super::ast::ActionInstance { action: action.name.clone(), binding: binding.to_vec() }
                    .to_string(),
                var: u.var.name.to_string(),
                value: v.to_string(),
            });
        }
        values[u.var.slot] = v;
    }
    Ok(State::new(values))
}
