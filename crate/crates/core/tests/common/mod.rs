//! Oracles and generators shared by the integration tests. Nothing here calls
//! into the explorer, the refinement checker or the analysis fixpoints.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use proptest::prelude::*;

use ipa_core::kernel::{
    apply_action, bool_of, eval_expr, Action, BinOp, Builtin, Domain, Env, ExceptClause, Expr, ExprKind, NamedExpr,
    PathElem, Spec, State, Value,
};
use ipa_core::parser::{parse_spec, render_spec, IpaManifest};
use ipa_core::refinement::StateMapping;

pub type Set = BTreeSet<Arc<str>>;

pub const ENUM_LIMIT: usize = 50_000;

type Binding = Vec<(Arc<str>, Value)>;

fn bindings(a: &Action) -> Vec<Binding> {
    let mut out = vec![Vec::new()];
    for p in &a.params {
        let values = p.domain.enumerate().expect("enumerable parameter");
        out = out
            .into_iter()
            .flat_map(|b| {
                values.iter().map(move |v| {
                    let mut b = b.clone();
                    b.push((p.name.clone(), v.clone()));
                    b
                })
            })
            .collect();
    }
    out
}

/// BFS levels of the reachable states, or `None` past `ENUM_LIMIT`.
pub fn oracle_levels(spec: &Spec) -> Option<Vec<Vec<State>>> {
    let blank = State::new(Vec::new());
    let init: Vec<Value> = spec.init.iter().map(|e| eval_expr(e, &blank, &mut Env::new()).unwrap()).collect();
    let domains: Vec<Domain> = spec.vars.iter().map(|v| v.domain.clone()).collect();
    let actions: Vec<(&Action, Vec<Binding>)> =
        spec.modules.iter().flat_map(|m| &m.actions).map(|a| (a, bindings(a))).collect();
    let init = State::new(init);
    let mut seen: BTreeSet<State> = BTreeSet::from([init.clone()]);
    let mut levels = vec![vec![init]];
    loop {
        let mut next = Vec::new();
        for s in levels.last().unwrap() {
            for (a, bs) in &actions {
                for b in bs {
                    let mut env = Env::from_binding(b);
                    if a.guards.iter().all(|g| bool_of(g, s, &mut env).unwrap()) {
                        let t = apply_action(a, &domains, b, s).unwrap();
                        if seen.insert(t.clone()) {
                            next.push(t);
                        }
                    }
                }
            }
        }
        if seen.len() > ENUM_LIMIT {
            return None;
        }
        if next.is_empty() {
            return Some(levels);
        }
        levels.push(next);
    }
}

/// Adds `invariant Probe: <src>` to a copy of `spec` and returns it resolved.
pub fn probe_invariant(spec: &Spec, src: &str) -> Vec<NamedExpr> {
    let base = render_spec(&Spec { invariants: vec![], ..spec.clone() });
    parse_spec(&format!("{base}\ninvariant Probe: {src}\n"), "probe.ipa").unwrap().invariants
}

/// Projection of `b` onto `a`, using the manifest's refine expressions for
/// abstract variables `b` lacks.
pub fn mapping_into(b: &Spec, a: &Spec, manifest: &IpaManifest) -> StateMapping {
    let overrides: Vec<_> = a
        .vars
        .iter()
        .filter(|v| b.var_index(&v.name).is_none())
        .filter_map(|v| manifest.refine_expr(&v.name).map(|e| (v.name.clone(), e.clone())))
        .collect();
    StateMapping::new(b, a, &overrides).unwrap()
}

pub fn effective_updates(a: &Action) -> Vec<(Arc<str>, Set)> {
    a.updates
        .iter()
        .filter(|u| !matches!(&u.expr.kind, ExprKind::Var(v) if v.name == u.var.name))
        .map(|u| (u.var.name.clone(), u.expr.read_set()))
        .collect()
}

/// D_M as reachability: from every guard read, follow "updated variable to
/// the variables its right-hand side reads".
pub fn oracle_deps(spec: &Spec) -> BTreeMap<Arc<str>, Set> {
    let mut out = BTreeMap::new();
    for m in &spec.modules {
        let mut edges: BTreeMap<Arc<str>, Set> = BTreeMap::new();
        for a in &m.actions {
            for (v, reads) in effective_updates(a) {
                edges.entry(v).or_default().extend(reads);
            }
        }
        let mut seen: Set = m.actions.iter().flat_map(|a| a.guards.iter().flat_map(|g| g.read_set())).collect();
        let mut queue: VecDeque<Arc<str>> = seen.iter().cloned().collect();
        while let Some(v) = queue.pop_front() {
            for r in edges.get(&v).into_iter().flatten() {
                if seen.insert(r.clone()) {
                    queue.push_back(r.clone());
                }
            }
        }
        out.insert(m.name.clone(), seen);
    }
    out
}

/// I as the limit of F(I) = I ∪ rule2(I) ∪ rule3(I), starting from the
/// pairwise overlaps.
pub fn oracle_interaction(spec: &Spec, deps: &BTreeMap<Arc<str>, Set>) -> Set {
    let mut seed = Set::new();
    for (x, dx) in deps {
        for (y, dy) in deps {
            if x < y {
                seed.extend(dx.intersection(dy).cloned());
            }
        }
    }
    let step = |i: &Set| -> Set {
        let mut next = seed.clone();
        for m in &spec.modules {
            let dm = &deps[&m.name];
            for a in &m.actions {
                for (v, reads) in effective_updates(a) {
                    if i.contains(&v) {
                        next.extend(reads.difference(dm).cloned());
                    }
                }
            }
            for a in spec.modules.iter().flat_map(|n| &n.actions) {
                for (v, reads) in effective_updates(a) {
                    if dm.contains(&v) && !i.contains(&v) {
                        next.extend(reads.difference(dm).cloned());
                    }
                }
            }
        }
        next.extend(i.iter().cloned());
        next
    };
    let mut cur = seed.clone();
    loop {
        let next = step(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

const NAMES: [&str; 6] = ["x", "y", "votes", "log", "Server", "s1"];
const FIELDS: [&str; 3] = ["term", "val", "ok"];
const OPS: [BinOp; 19] = [
    BinOp::Implies,
    BinOp::Or,
    BinOp::And,
    BinOp::Eq,
    BinOp::Ne,
    BinOp::Lt,
    BinOp::Le,
    BinOp::Gt,
    BinOp::Ge,
    BinOp::In,
    BinOp::NotIn,
    BinOp::Subseteq,
    BinOp::Range,
    BinOp::Union,
    BinOp::Intersect,
    BinOp::SetMinus,
    BinOp::Add,
    BinOp::Sub,
    BinOp::Mul,
];
const BUILTINS: [Builtin; 8] = [
    Builtin::Cardinality,
    Builtin::Len,
    Builtin::Append,
    Builtin::SubSeq,
    Builtin::Head,
    Builtin::Tail,
    Builtin::Max,
    Builtin::Min,
];

fn e(kind: ExprKind) -> Expr {
    Expr::synth(kind)
}

fn name() -> impl Strategy<Value = Arc<str>> {
    prop::sample::select(&NAMES[..]).prop_map(Arc::from)
}

fn field() -> impl Strategy<Value = Arc<str>> {
    prop::sample::select(&FIELDS[..]).prop_map(Arc::from)
}

/// Syntax-level expression trees covering every expression form.
pub fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        any::<bool>().prop_map(|b| e(ExprKind::Bool(b))),
        (-5i64..20).prop_map(|i| e(ExprKind::Int(i))),
        name().prop_map(|n| e(ExprKind::Name(n))),
    ];
    leaf.prop_recursive(4, 48, 4, |inner| {
        let b = |x: Expr| Box::new(x);
        prop_oneof![
            inner.clone().prop_map(move |x| e(ExprKind::Not(b(x)))),
            inner.clone().prop_map(move |x| e(ExprKind::Neg(b(x)))),
            (prop::sample::select(&OPS[..]), inner.clone(), inner.clone())
                .prop_map(move |(op, l, r)| e(ExprKind::Bin(op, b(l), b(r)))),
            prop::collection::vec(inner.clone(), 0..3).prop_map(|v| e(ExprKind::SetLit(v))),
            prop::collection::vec(inner.clone(), 0..3).prop_map(|v| e(ExprKind::SeqLit(v))),
            prop::collection::btree_map(field(), inner.clone(), 1..3)
                .prop_map(|m| e(ExprKind::RecordLit(m.into_iter().collect()))),
            (name(), inner.clone(), inner.clone()).prop_map(move |(var, d, x)| e(ExprKind::MapComp {
                var,
                domain: b(d),
                body: b(x)
            })),
            (name(), inner.clone(), inner.clone()).prop_map(move |(var, d, p)| e(ExprKind::SetFilter {
                var,
                domain: b(d),
                pred: b(p)
            })),
            (any::<bool>(), name(), inner.clone(), inner.clone())
                .prop_map(move |(forall, var, d, x)| e(ExprKind::Quant { forall, var, domain: b(d), body: b(x) })),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(move |(c, t, f)| e(ExprKind::If(b(c), b(t), b(f)))),
            (prop::sample::select(&BUILTINS[..]), prop::collection::vec(inner.clone(), 3)).prop_map(|(f, mut args)| {
                args.truncate(f.arity());
                e(ExprKind::Call(f, args))
            }),
            (inner.clone(), inner.clone()).prop_map(move |(f, x)| e(ExprKind::Apply(b(f), b(x)))),
            (inner.clone(), field()).prop_map(move |(r, f)| e(ExprKind::Field(b(r), f))),
            (inner.clone(), prop::collection::vec((path(inner.clone()), inner.clone()), 1..3)).prop_map(
                move |(base, cs)| {
                    let clauses = cs.into_iter().map(|(path, value)| ExceptClause { path, value }).collect();
                    e(ExprKind::Except(b(base), clauses))
                }
            ),
        ]
    })
}

fn path(inner: impl Strategy<Value = Expr> + Clone) -> impl Strategy<Value = Vec<PathElem>> {
    prop::collection::vec(prop_oneof![inner.prop_map(PathElem::Index), field().prop_map(PathElem::Field)], 1..3)
}
