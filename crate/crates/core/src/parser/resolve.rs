//! Name resolution and light type checking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::diag::Diagnostic;
use super::syntax::SpecSyntax;
use crate::kernel::{
    eval_expr, BinOp, Builtin, ConstDecl, Domain, Env, Expr, ExprKind, PathElem, SortDecl, Span, Spec, State, VarDecl,
    VarRef,
};

/// Declarations visible to an expression.
pub(crate) struct Scope<'a> {
    pub vars: &'a [VarDecl],
    pub consts: &'a [ConstDecl],
    pub sorts: &'a [SortDecl],
    /// When set, references to state variables are reported with this
    /// description of the context (for example an init expression).
    pub forbid_vars: Option<&'a str>,
}

impl Scope<'_> {
    fn lookup(&self, name: &Arc<str>, span: &Span, locals: &[(Arc<str>, Ty)]) -> Result<ExprKind, Diagnostic> {
        if locals.iter().any(|(n, _)| n == name) {
            return Ok(ExprKind::Local(name.clone()));
        }
        if let Some(slot) = self.vars.iter().position(|v| v.name == *name) {
            if let Some(ctx) = self.forbid_vars {
                return Err(Diagnostic::error(
                    "E-init",
                    format!("{ctx} references state variable `{name}`"),
                    span.clone(),
                ));
            }
            return Ok(ExprKind::Var(VarRef { name: name.clone(), slot }));
        }
        if let Some(c) = self.consts.iter().find(|c| c.name == *name) {
            return Ok(ExprKind::Const(name.clone(), c.value));
        }
        if self.sorts.iter().any(|s| s.members.contains(name)) {
            return Ok(ExprKind::Sym(name.clone()));
        }
        if let Some(s) = self.sorts.iter().find(|s| s.name == *name) {
            return Ok(ExprKind::SortSet(name.clone(), s.as_set()));
        }
        Err(Diagnostic::error("E-unresolved", format!("unresolved variable `{name}`"), span.clone()))
    }
}

/// Coarse static type used to catch obvious mistakes before exploration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Ty {
    Any,
    Bool,
    Int,
    Sym,
    Set(Box<Ty>),
    Seq(Box<Ty>),
    Record(Vec<(Arc<str>, Ty)>),
    Map(Box<Ty>, Box<Ty>),
}

impl Ty {
    pub(crate) fn of(d: &Domain) -> Ty {
        match d {
            Domain::Bool => Ty::Bool,
            Domain::Range(..) => Ty::Int,
            Domain::Sort(..) => Ty::Sym,
            Domain::Set(e) => Ty::Set(Box::new(Ty::of(e))),
            Domain::Seq(e, _) => Ty::Seq(Box::new(Ty::of(e))),
            Domain::Record(fs) => Ty::Record(fs.iter().map(|(n, d)| (n.clone(), Ty::of(d))).collect()),
            Domain::Map(k, v) => Ty::Map(Box::new(Ty::of(k)), Box::new(Ty::of(v))),
        }
    }

    pub(crate) fn fits(&self, other: &Ty) -> bool {
        match (self, other) {
            (Ty::Any, _) | (_, Ty::Any) => true,
            (Ty::Set(a), Ty::Set(b)) | (Ty::Seq(a), Ty::Seq(b)) => a.fits(b),
            (Ty::Map(k1, v1), Ty::Map(k2, v2)) => k1.fits(k2) && v1.fits(v2),
            (Ty::Record(a), Ty::Record(b)) => {
                let a: BTreeMap<_, _> = a.iter().cloned().collect();
                let b: BTreeMap<_, _> = b.iter().cloned().collect();
                a.len() == b.len() && a.iter().all(|(n, t)| b.get(n).is_some_and(|u| t.fits(u)))
            }
            (a, b) => a == b,
        }
    }

    fn join(self, other: Ty) -> Ty {
        if self == Ty::Any {
            other
        } else {
            self
        }
    }

    fn elem(&self) -> Ty {
        match self {
            Ty::Set(e) => (**e).clone(),
            _ => Ty::Any,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Any => f.write_str("value"),
            Ty::Bool => f.write_str("boolean"),
            Ty::Int => f.write_str("integer"),
            Ty::Sym => f.write_str("symbol"),
            Ty::Set(e) => write!(f, "set of {e}"),
            Ty::Seq(e) => write!(f, "sequence of {e}"),
            Ty::Record(_) => f.write_str("record"),
            Ty::Map(k, v) => write!(f, "map from {k} to {v}"),
        }
    }
}

/// Resolves names in `e` and returns its inferred type. Problems are pushed
/// onto `diags`; resolution continues so that one pass reports them all.
pub(crate) fn resolve_expr(
    e: &mut Expr,
    scope: &Scope,
    locals: &mut Vec<(Arc<str>, Ty)>,
    diags: &mut Vec<Diagnostic>,
) -> Ty {
    let span = e.span.clone();
    if let ExprKind::Name(n) = &e.kind {
        match scope.lookup(n, &span, locals) {
            Ok(kind) => e.kind = kind,
            Err(d) => {
                diags.push(d);
                return Ty::Any;
            }
        }
    }
    let expect = |t: &Ty, want: &Ty, what: &str, diags: &mut Vec<Diagnostic>| {
        if !t.fits(want) {
            diags.push(Diagnostic::error("E-type", format!("{what} must be a {want}, found a {t}"), span.clone()));
        }
    };
    match &mut e.kind {
        ExprKind::Bool(_) => Ty::Bool,
        ExprKind::Int(_) | ExprKind::Const(..) => Ty::Int,
        ExprKind::Sym(_) => Ty::Sym,
        ExprKind::SortSet(..) => Ty::Set(Box::new(Ty::Sym)),
        ExprKind::Var(v) => scope.vars.iter().find(|d| d.name == v.name).map_or(Ty::Any, |d| Ty::of(&d.domain)),
        ExprKind::Local(n) => locals.iter().rev().find(|(m, _)| m == n).map_or(Ty::Any, |(_, t)| t.clone()),
        ExprKind::Name(_) => Ty::Any,
        ExprKind::Not(x) => {
            let t = resolve_expr(x, scope, locals, diags);
            expect(&t, &Ty::Bool, "operand of `~`", diags);
            Ty::Bool
        }
        ExprKind::Neg(x) => {
            let t = resolve_expr(x, scope, locals, diags);
            expect(&t, &Ty::Int, "operand of `-`", diags);
            Ty::Int
        }
        ExprKind::Bin(op, l, r) => {
            let op = *op;
            let lt = resolve_expr(l, scope, locals, diags);
            let rt = resolve_expr(r, scope, locals, diags);
            let what = format!("operand of `{}`", op.symbol());
            let anyset = Ty::Set(Box::new(Ty::Any));
            match op {
                BinOp::Implies | BinOp::Or | BinOp::And => {
                    expect(&lt, &Ty::Bool, &what, diags);
                    expect(&rt, &Ty::Bool, &what, diags);
                    Ty::Bool
                }
                BinOp::Eq | BinOp::Ne => {
                    if !lt.fits(&rt) {
                        diags.push(Diagnostic::error(
                            "E-type",
                            format!("cannot compare a {lt} with a {rt}"),
                            span.clone(),
                        ));
                    }
                    Ty::Bool
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    expect(&lt, &Ty::Int, &what, diags);
                    expect(&rt, &Ty::Int, &what, diags);
                    Ty::Bool
                }
                BinOp::In | BinOp::NotIn => {
                    expect(&rt, &Ty::Set(Box::new(lt)), &what, diags);
                    Ty::Bool
                }
                BinOp::Subseteq => {
                    expect(&lt, &anyset, &what, diags);
                    expect(&rt, &lt, &what, diags);
                    Ty::Bool
                }
                BinOp::Range => {
                    expect(&lt, &Ty::Int, &what, diags);
                    expect(&rt, &Ty::Int, &what, diags);
                    Ty::Set(Box::new(Ty::Int))
                }
                BinOp::Union | BinOp::Intersect | BinOp::SetMinus => {
                    expect(&lt, &anyset, &what, diags);
                    expect(&rt, &lt, &what, diags);
                    lt.join(rt)
                }
                BinOp::Add | BinOp::Sub | BinOp::Mul => {
                    expect(&lt, &Ty::Int, &what, diags);
                    expect(&rt, &Ty::Int, &what, diags);
                    Ty::Int
                }
            }
        }
        ExprKind::SetLit(items) => {
            let mut elem = Ty::Any;
            for it in items {
                let t = resolve_expr(it, scope, locals, diags);
                expect(&t, &elem, "set element", diags);
                elem = elem.join(t);
            }
            Ty::Set(Box::new(elem))
        }
        ExprKind::SeqLit(items) => {
            let mut elem = Ty::Any;
            for it in items {
                let t = resolve_expr(it, scope, locals, diags);
                expect(&t, &elem, "sequence element", diags);
                elem = elem.join(t);
            }
            Ty::Seq(Box::new(elem))
        }
        ExprKind::RecordLit(fields) => {
            Ty::Record(fields.iter_mut().map(|(n, fe)| (n.clone(), resolve_expr(fe, scope, locals, diags))).collect())
        }
        ExprKind::MapComp { var, domain, body } => {
            let dt = resolve_expr(domain, scope, locals, diags);
            expect(&dt, &Ty::Set(Box::new(Ty::Any)), "map domain", diags);
            locals.push((var.clone(), dt.elem()));
            let bt = resolve_expr(body, scope, locals, diags);
            locals.pop();
            Ty::Map(Box::new(dt.elem()), Box::new(bt))
        }
        ExprKind::SetFilter { var, domain, pred } => {
            let dt = resolve_expr(domain, scope, locals, diags);
            expect(&dt, &Ty::Set(Box::new(Ty::Any)), "filtered collection", diags);
            locals.push((var.clone(), dt.elem()));
            let pt = resolve_expr(pred, scope, locals, diags);
            locals.pop();
            expect(&pt, &Ty::Bool, "filter predicate", diags);
            dt
        }
        ExprKind::Quant { var, domain, body, .. } => {
            let dt = resolve_expr(domain, scope, locals, diags);
            expect(&dt, &Ty::Set(Box::new(Ty::Any)), "quantifier domain", diags);
            locals.push((var.clone(), dt.elem()));
            let bt = resolve_expr(body, scope, locals, diags);
            locals.pop();
            expect(&bt, &Ty::Bool, "quantifier body", diags);
            Ty::Bool
        }
        ExprKind::If(c, t, f) => {
            let ct = resolve_expr(c, scope, locals, diags);
            expect(&ct, &Ty::Bool, "condition", diags);
            let tt = resolve_expr(t, scope, locals, diags);
            let ft = resolve_expr(f, scope, locals, diags);
            if !tt.fits(&ft) {
                diags.push(Diagnostic::error("E-type", format!("branches differ: a {tt} and a {ft}"), span.clone()));
            }
            tt.join(ft)
        }
        ExprKind::Call(b, args) => {
            let b = *b;
            let ts: Vec<Ty> = args.iter_mut().map(|a| resolve_expr(a, scope, locals, diags)).collect();
            let what = format!("argument of {}", b.name());
            let anyseq = Ty::Seq(Box::new(Ty::Any));
            match b {
                Builtin::Cardinality => {
                    expect(&ts[0], &Ty::Set(Box::new(Ty::Any)), &what, diags);
                    Ty::Int
                }
                Builtin::Len => {
                    expect(&ts[0], &anyseq, &what, diags);
                    Ty::Int
                }
                Builtin::Append => {
                    expect(&ts[0], &Ty::Seq(Box::new(ts[1].clone())), &what, diags);
                    ts[0].clone()
                }
                Builtin::SubSeq => {
                    expect(&ts[0], &anyseq, &what, diags);
                    expect(&ts[1], &Ty::Int, &what, diags);
                    expect(&ts[2], &Ty::Int, &what, diags);
                    ts[0].clone()
                }
                Builtin::Head => {
                    expect(&ts[0], &anyseq, &what, diags);
                    match &ts[0] {
                        Ty::Seq(e) => (**e).clone(),
                        _ => Ty::Any,
                    }
                }
                Builtin::Tail => {
                    expect(&ts[0], &anyseq, &what, diags);
                    ts[0].clone()
                }
                Builtin::Max | Builtin::Min => {
                    expect(&ts[0], &Ty::Int, &what, diags);
                    expect(&ts[1], &Ty::Int, &what, diags);
                    Ty::Int
                }
            }
        }
        ExprKind::Apply(f, x) => {
            let ft = resolve_expr(f, scope, locals, diags);
            let xt = resolve_expr(x, scope, locals, diags);
            match ft {
                Ty::Map(k, v) => {
                    expect(&xt, &k, "map key", diags);
                    *v
                }
                Ty::Seq(e) => {
                    expect(&xt, &Ty::Int, "sequence index", diags);
                    *e
                }
                Ty::Any => Ty::Any,
                other => {
                    diags.push(Diagnostic::error("E-type", format!("cannot index a {other}"), span.clone()));
                    Ty::Any
                }
            }
        }
        ExprKind::Field(r, name) => {
            let name = name.clone();
            match resolve_expr(r, scope, locals, diags) {
                Ty::Record(fs) => match fs.into_iter().find(|(n, _)| *n == name) {
                    Some((_, t)) => t,
                    None => {
                        diags.push(Diagnostic::error("E-type", format!("record has no field `{name}`"), span.clone()));
                        Ty::Any
                    }
                },
                Ty::Any => Ty::Any,
                other => {
                    diags.push(Diagnostic::error("E-type", format!("field access on a {other}"), span.clone()));
                    Ty::Any
                }
            }
        }
        ExprKind::Except(base, clauses) => {
            let bt = resolve_expr(base, scope, locals, diags);
            for c in clauses {
                for p in &mut c.path {
                    if let PathElem::Index(ix) = p {
                        resolve_expr(ix, scope, locals, diags);
                    }
                }
                resolve_expr(&mut c.value, scope, locals, diags);
            }
            bt
        }
    }
}

fn dup_check<'a>(items: impl Iterator<Item = (&'a Arc<str>, &'a Span)>, what: &str, diags: &mut Vec<Diagnostic>) {
    let mut seen = BTreeSet::new();
    for (name, span) in items {
        if !seen.insert(name.clone()) {
            diags.push(Diagnostic::error("E-duplicate", format!("duplicate {what} `{name}`"), span.clone()));
        }
    }
}

/// Turns parsed syntax into a validated [`Spec`].
pub fn resolve_spec(syn: SpecSyntax) -> Result<Spec, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let SpecSyntax { name, span: _, sorts, consts, vars, init, mut modules, unchanged, mut invariants } = syn;

    // One namespace for sorts, sort members, constants and variables.
    let mut global: Vec<(&Arc<str>, &Span)> = Vec::new();
    for s in &sorts {
        global.push((&s.name, &s.span));
        for m in &s.members {
            global.push((m, &s.span));
        }
    }
    global.extend(consts.iter().map(|c| (&c.name, &c.span)));
    global.extend(vars.iter().map(|v| (&v.name, &v.span)));
    dup_check(global.into_iter(), "name", &mut diags);

    dup_check(modules.iter().map(|m| (&m.name, &m.span)), "module", &mut diags);
    dup_check(invariants.iter().map(|i| (&i.name, &i.span)), "invariant", &mut diags);
    let mut owner: BTreeMap<Arc<str>, Arc<str>> = BTreeMap::new();
    for m in &modules {
        for a in &m.actions {
            match owner.get(&a.name) {
                Some(prev) if *prev == m.name => diags.push(Diagnostic::error(
                    "E-duplicate",
                    format!("duplicate action `{}` in module `{}`", a.name, m.name),
                    a.span.clone(),
                )),
                Some(prev) => diags.push(Diagnostic::error(
                    "E-partition",
                    format!("action `{}` is declared in modules `{prev}` and `{}`", a.name, m.name),
                    a.span.clone(),
                )),
                None => {
                    owner.insert(a.name.clone(), m.name.clone());
                }
            }
            let pspans: Vec<(&Arc<str>, &Span)> = a.params.iter().map(|p| (&p.name, &a.span)).collect();
            dup_check(pspans.into_iter(), "parameter", &mut diags);
        }
    }

    // Init: exactly one entry per variable, constant, in range.
    let mut init_exprs: Vec<Option<Expr>> = vec![None; vars.len()];
    for (vname, mut e, span) in init {
        let Some(i) = vars.iter().position(|v| v.name == vname) else {
            diags.push(Diagnostic::error("E-unresolved", format!("unresolved variable `{vname}`"), span));
            continue;
        };
        if init_exprs[i].is_some() {
            diags.push(Diagnostic::error("E-duplicate", format!("`{vname}` is initialised twice"), span));
            continue;
        }
        let ctx = format!("init expression for `{vname}`");
        let scope = Scope { vars: &vars, consts: &consts, sorts: &sorts, forbid_vars: Some(&ctx) };
        let before = diags.len();
        let t = resolve_expr(&mut e, &scope, &mut Vec::new(), &mut diags);
        let want = Ty::of(&vars[i].domain);
        if !t.fits(&want) {
            diags.push(Diagnostic::error(
                "E-type",
                format!("`{vname}` is a {want} but is initialised with a {t}"),
                e.span.clone(),
            ));
        }
        if diags.len() == before {
            match eval_expr(&e, &State::new(Vec::new()), &mut Env::new()) {
                Ok(v) if !vars[i].domain.contains(&v) => diags.push(Diagnostic::error(
                    "E-init",
                    format!("initial value {v} of `{vname}` lies outside its declared domain"),
                    e.span.clone(),
                )),
                Ok(_) => {}
                Err(err) => diags.push(Diagnostic::error("E-init", err.to_string(), e.span.clone())),
            }
        }
        init_exprs[i] = Some(e);
    }
    for (v, e) in vars.iter().zip(&init_exprs) {
        if e.is_none() {
            diags.push(Diagnostic::error("E-init", format!("variable `{}` has no init entry", v.name), v.span.clone()));
        }
    }

    let scope = Scope { vars: &vars, consts: &consts, sorts: &sorts, forbid_vars: None };
    for (mi, m) in modules.iter_mut().enumerate() {
        for (ai, a) in m.actions.iter_mut().enumerate() {
            let mut locals: Vec<(Arc<str>, Ty)> =
                a.params.iter().map(|p| (p.name.clone(), Ty::of(&p.domain))).collect();
            for g in &mut a.guards {
                let t = resolve_expr(g, &scope, &mut locals, &mut diags);
                if !t.fits(&Ty::Bool) {
                    diags.push(Diagnostic::error(
                        "E-type",
                        format!("guard must be a boolean, found a {t}"),
                        g.span.clone(),
                    ));
                }
            }
            let mut assigned: BTreeSet<Arc<str>> = BTreeSet::new();
            for u in &mut a.updates {
                let t = resolve_expr(&mut u.expr, &scope, &mut locals, &mut diags);
                match vars.iter().position(|v| v.name == u.var.name) {
                    Some(slot) => {
                        u.var.slot = slot;
                        let want = Ty::of(&vars[slot].domain);
                        if !t.fits(&want) {
                            diags.push(Diagnostic::error(
                                "E-type",
                                format!("`{}` is a {want} but is assigned a {t}", u.var.name),
                                u.expr.span.clone(),
                            ));
                        }
                    }
                    None => diags.push(Diagnostic::error(
                        "E-unresolved",
                        format!("unresolved variable `{}`", u.var.name),
                        u.span.clone(),
                    )),
                }
                if !assigned.insert(u.var.name.clone()) {
                    diags.push(Diagnostic::error(
                        "E-update",
                        format!("`{}` is assigned twice in action `{}`", u.var.name, a.name),
                        u.span.clone(),
                    ));
                }
            }
            for (umi, uai, v, span) in &unchanged {
                if (*umi, *uai) != (mi, ai) {
                    continue;
                }
                if !vars.iter().any(|d| d.name == *v) {
                    diags.push(Diagnostic::error("E-unresolved", format!("unresolved variable `{v}`"), span.clone()));
                } else if assigned.contains(v) {
                    diags.push(Diagnostic::error(
                        "E-update",
                        format!("`{v}` is both assigned and unchanged in action `{}`", a.name),
                        span.clone(),
                    ));
                }
            }
        }
    }
    for inv in &mut invariants {
        let t = resolve_expr(&mut inv.expr, &scope, &mut Vec::new(), &mut diags);
        if !t.fits(&Ty::Bool) {
            diags.push(Diagnostic::error(
                "E-type",
                format!("invariant `{}` must be a boolean, found a {t}", inv.name),
                inv.expr.span.clone(),
            ));
        }
    }

    if !diags.is_empty() {
        diags.sort_by_key(|a| (a.span.line, a.span.col));
        return Err(diags);
    }
    let mut spec = Spec {
        name,
        sorts,
        consts,
        vars,
        init: init_exprs.into_iter().map(|e| e.expect("checked above")).collect(),
        modules,
        invariants,
    };
    spec.relink();
    Ok(spec)
}
