use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use super::value::Value;

/// Location of a syntax node. Spans never participate in structural
/// equality, so two specs that differ only in layout compare equal.
#[derive(Debug, Clone, Default)]
pub struct Span {
    pub file: Arc<str>,
    pub line: u32,
    pub col: u32,
    pub len: u32,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col)
    }
}

/// Reference to a state variable. `slot` is the position of the variable in
/// the owning spec's state vector and is recomputed whenever a spec is
/// relinked, so it is excluded from equality.
#[derive(Debug, Clone)]
pub struct VarRef {
    pub name: Arc<str>,
    pub slot: usize,
}

impl PartialEq for VarRef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for VarRef {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Implies,
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    NotIn,
    Subseteq,
    Range,
    Union,
    Intersect,
    SetMinus,
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Implies => "=>",
            BinOp::Or => "\\/",
            BinOp::And => "/\\",
            BinOp::Eq => "=",
            BinOp::Ne => "#",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::In => "\\in",
            BinOp::NotIn => "\\notin",
            BinOp::Subseteq => "\\subseteq",
            BinOp::Range => "..",
            BinOp::Union => "\\union",
            BinOp::Intersect => "\\intersect",
            BinOp::SetMinus => "\\setminus",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Cardinality,
    Len,
    Append,
    SubSeq,
    Head,
    Tail,
    Max,
    Min,
}

impl Builtin {
    pub const ALL: [Builtin; 8] = [
        Builtin::Cardinality,
        Builtin::Len,
        Builtin::Append,
        Builtin::SubSeq,
        Builtin::Head,
        Builtin::Tail,
        Builtin::Max,
        Builtin::Min,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Cardinality => "Cardinality",
            Builtin::Len => "Len",
            Builtin::Append => "Append",
            Builtin::SubSeq => "SubSeq",
            Builtin::Head => "Head",
            Builtin::Tail => "Tail",
            Builtin::Max => "Max",
            Builtin::Min => "Min",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Cardinality | Builtin::Len | Builtin::Head | Builtin::Tail => 1,
            Builtin::Append | Builtin::Max | Builtin::Min => 2,
            Builtin::SubSeq => 3,
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathElem {
    Index(Expr),
    Field(Arc<str>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExceptClause {
    pub path: Vec<PathElem>,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Bool(bool),
    Int(i64),
    /// Unresolved identifier; only present between parsing and resolution.
    Name(Arc<str>),
    /// Member of an enumerated sort.
    Sym(Arc<str>),
    /// Named integer constant, with its value inlined.
    Const(Arc<str>, i64),
    /// An enumerated sort used as a set; the set value is inlined.
    SortSet(Arc<str>, Value),
    Var(VarRef),
    /// Action parameter or quantifier-bound variable.
    Local(Arc<str>),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    SetLit(Vec<Expr>),
    SeqLit(Vec<Expr>),
    RecordLit(Vec<(Arc<str>, Expr)>),
    MapComp {
        var: Arc<str>,
        domain: Box<Expr>,
        body: Box<Expr>,
    },
    SetFilter {
        var: Arc<str>,
        domain: Box<Expr>,
        pred: Box<Expr>,
    },
    Quant {
        forall: bool,
        var: Arc<str>,
        domain: Box<Expr>,
        body: Box<Expr>,
    },
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(Builtin, Vec<Expr>),
    Apply(Box<Expr>, Box<Expr>),
    Field(Box<Expr>, Arc<str>),
    Except(Box<Expr>, Vec<ExceptClause>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    /// Builds a node with an empty span, for programmatically built trees.
    pub fn synth(kind: ExprKind) -> Expr {
        Expr { kind, span: Span::default() }
    }

    /// Calls `f` on every direct child expression.
    pub fn for_each_child<'a>(&'a self, mut f: impl FnMut(&'a Expr)) {
        match &self.kind {
            ExprKind::Bool(_)
            | ExprKind::Int(_)
            | ExprKind::Name(_)
            | ExprKind::Sym(_)
            | ExprKind::Const(..)
            | ExprKind::SortSet(..)
            | ExprKind::Var(_)
            | ExprKind::Local(_) => {}
            ExprKind::Not(e) | ExprKind::Neg(e) | ExprKind::Field(e, _) => f(e),
            ExprKind::Bin(_, l, r) | ExprKind::Apply(l, r) => {
                f(l);
                f(r);
            }
            ExprKind::SetLit(items) | ExprKind::SeqLit(items) | ExprKind::Call(_, items) => items.iter().for_each(f),
            ExprKind::RecordLit(fields) => fields.iter().for_each(|(_, e)| f(e)),
            ExprKind::MapComp { domain, body, .. } => {
                f(domain);
                f(body);
            }
            ExprKind::SetFilter { domain, pred, .. } => {
                f(domain);
                f(pred);
            }
            ExprKind::Quant { domain, body, .. } => {
                f(domain);
                f(body);
            }
            ExprKind::If(c, t, e) => {
                f(c);
                f(t);
                f(e);
            }
            ExprKind::Except(base, clauses) => {
                f(base);
                for c in clauses {
                    for p in &c.path {
                        if let PathElem::Index(e) = p {
                            f(e);
                        }
                    }
                    f(&c.value);
                }
            }
        }
    }

    /// State variables read by this expression, syntactically.
    pub fn read_set(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        if let ExprKind::Var(v) = &self.kind {
            out.insert(v.name.clone());
        }
        self.for_each_child(|c| c.collect_vars(out));
    }

    /// Rewrites every variable reference through `f`.
    pub fn map_vars(&mut self, f: &mut impl FnMut(&mut VarRef)) {
        if let ExprKind::Var(v) = &mut self.kind {
            f(v);
        }
        self.for_each_child_mut(|c| c.map_vars(f));
    }

    pub fn for_each_child_mut(&mut self, mut f: impl FnMut(&mut Expr)) {
        match &mut self.kind {
            ExprKind::Bool(_)
            | ExprKind::Int(_)
            | ExprKind::Name(_)
            | ExprKind::Sym(_)
            | ExprKind::Const(..)
            | ExprKind::SortSet(..)
            | ExprKind::Var(_)
            | ExprKind::Local(_) => {}
            ExprKind::Not(e) | ExprKind::Neg(e) | ExprKind::Field(e, _) => f(e),
            ExprKind::Bin(_, l, r) | ExprKind::Apply(l, r) => {
                f(l);
                f(r);
            }
            ExprKind::SetLit(items) | ExprKind::SeqLit(items) | ExprKind::Call(_, items) => {
                items.iter_mut().for_each(f)
            }
            ExprKind::RecordLit(fields) => fields.iter_mut().for_each(|(_, e)| f(e)),
            ExprKind::MapComp { domain, body, .. } => {
                f(domain);
                f(body);
            }
            ExprKind::SetFilter { domain, pred, .. } => {
                f(domain);
                f(pred);
            }
            ExprKind::Quant { domain, body, .. } => {
                f(domain);
                f(body);
            }
            ExprKind::If(c, t, e) => {
                f(c);
                f(t);
                f(e);
            }
            ExprKind::Except(base, clauses) => {
                f(base);
                for c in clauses {
                    for p in &mut c.path {
                        if let PathElem::Index(e) = p {
                            f(e);
                        }
                    }
                    f(&mut c.value);
                }
            }
        }
    }

    /// Replaces free occurrences of local names according to `subst`.
    /// Binders shadow: a quantifier over `x` hides substitutions for `x`
    /// inside its body.
    pub fn substitute_locals(&self, subst: &[(Arc<str>, Expr)]) -> Expr {
        if subst.is_empty() {
            return self.clone();
        }
        match &self.kind {
            ExprKind::Local(name) => {
                subst.iter().find(|(n, _)| n == name).map(|(_, e)| e.clone()).unwrap_or_else(|| self.clone())
            }
            ExprKind::MapComp { var, domain, body } => {
                let inner = shadow(subst, var);
                Expr::new(
                    ExprKind::MapComp {
                        var: var.clone(),
                        domain: Box::new(domain.substitute_locals(subst)),
                        body: Box::new(body.substitute_locals(&inner)),
                    },
                    self.span.clone(),
                )
            }
            ExprKind::SetFilter { var, domain, pred } => {
                let inner = shadow(subst, var);
                Expr::new(
                    ExprKind::SetFilter {
                        var: var.clone(),
                        domain: Box::new(domain.substitute_locals(subst)),
                        pred: Box::new(pred.substitute_locals(&inner)),
                    },
                    self.span.clone(),
                )
            }
            ExprKind::Quant { forall, var, domain, body } => {
                let inner = shadow(subst, var);
                Expr::new(
                    ExprKind::Quant {
                        forall: *forall,
                        var: var.clone(),
                        domain: Box::new(domain.substitute_locals(subst)),
                        body: Box::new(body.substitute_locals(&inner)),
                    },
                    self.span.clone(),
                )
            }
            _ => {
                let mut out = self.clone();
                out.for_each_child_mut(|c| *c = c.substitute_locals(subst));
                out
            }
        }
    }
}

fn shadow(subst: &[(Arc<str>, Expr)], var: &Arc<str>) -> Vec<(Arc<str>, Expr)> {
    subst.iter().filter(|(n, _)| n != var).cloned().collect()
}

/// Integer bound appearing in a domain: a literal or a named constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bound {
    Lit(i64),
    Const(Arc<str>, i64),
}

impl Bound {
    pub fn value(&self) -> i64 {
        match self {
            Bound::Lit(v) | Bound::Const(_, v) => *v,
        }
    }
}

/// Finite type of a variable or parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Bool,
    Range(Bound, Bound),
    /// Enumerated sort; members are inlined after resolution.
    Sort(Arc<str>, Vec<Arc<str>>),
    Set(Box<Domain>),
    Seq(Box<Domain>, Bound),
    Record(Vec<(Arc<str>, Domain)>),
    Map(Box<Domain>, Box<Domain>),
}

impl Domain {
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::Range(lo, hi), Value::Int(i)) => lo.value() <= *i && *i <= hi.value(),
            (Domain::Sort(_, members), Value::Sym(s)) => members.iter().any(|m| m == s),
            (Domain::Set(elem), Value::Set(items)) => items.iter().all(|x| elem.contains(x)),
            (Domain::Seq(elem, max), Value::Seq(items)) => {
                items.len() as i64 <= max.value() && items.iter().all(|x| elem.contains(x))
            }
            (Domain::Record(fields), Value::Record(r)) => {
                fields.len() == r.len() && fields.iter().all(|(name, d)| r.get(name).is_some_and(|x| d.contains(x)))
            }
            (Domain::Map(key, val), Value::Map(m)) => match key.enumerate() {
                Some(keys) => keys.len() == m.len() && keys.iter().all(|k| m.get(k).is_some_and(|x| val.contains(x))),
                None => false,
            },
            _ => false,
        }
    }

    /// All values of the domain in canonical enumeration order, or `None`
    /// if the domain is too large to enumerate (more than 2^16 values).
    pub fn enumerate(&self) -> Option<Vec<Value>> {
        const LIMIT: usize = 1 << 16;
        let out = match self {
            Domain::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Domain::Range(lo, hi) => {
                let (lo, hi) = (lo.value(), hi.value());
                if hi >= lo && (hi - lo) as usize >= LIMIT {
                    return None;
                }
                (lo..=hi).map(Value::Int).collect()
            }
            Domain::Sort(_, members) => members.iter().map(|m| Value::Sym(m.clone())).collect(),
            Domain::Set(elem) => {
                let items = elem.enumerate()?;
                if items.len() > 16 {
                    return None;
                }
                (0u32..(1 << items.len()))
                    .map(|mask| {
                        Value::set(
                            items.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, v)| v.clone()),
                        )
                    })
                    .collect()
            }
            Domain::Seq(elem, max) => {
                let items = elem.enumerate()?;
                let mut out = vec![Value::seq([])];
                let mut layer: Vec<Vec<Value>> = vec![vec![]];
                for _ in 0..max.value().max(0) {
                    let mut next = Vec::new();
                    for prefix in &layer {
                        for item in &items {
                            let mut s = prefix.clone();
                            s.push(item.clone());
                            next.push(s);
                        }
                    }
                    if out.len() + next.len() > LIMIT {
                        return None;
                    }
                    out.extend(next.iter().cloned().map(Value::seq));
                    layer = next;
                }
                out
            }
            Domain::Record(fields) => {
                let mut acc: Vec<Vec<(Arc<str>, Value)>> = vec![vec![]];
                for (name, d) in fields {
                    let vals = d.enumerate()?;
                    if acc.len() * vals.len() > LIMIT {
                        return None;
                    }
                    acc = acc
                        .into_iter()
                        .flat_map(|prefix| {
                            vals.iter().map(move |v| {
                                let mut p = prefix.clone();
                                p.push((name.clone(), v.clone()));
                                p
                            })
                        })
                        .collect();
                }
                acc.into_iter().map(|fs| Value::Record(Arc::new(fs.into_iter().collect()))).collect()
            }
            Domain::Map(key, val) => {
                let keys = key.enumerate()?;
                let vals = val.enumerate()?;
                let mut acc: Vec<Vec<(Value, Value)>> = vec![vec![]];
                for k in &keys {
                    if acc.len() * vals.len() > LIMIT {
                        return None;
                    }
                    acc = acc
                        .into_iter()
                        .flat_map(|prefix| {
                            vals.iter().map(move |v| {
                                let mut p = prefix.clone();
                                p.push((k.clone(), v.clone()));
                                p
                            })
                        })
                        .collect();
                }
                acc.into_iter().map(Value::map).collect()
            }
        };
        (out.len() <= LIMIT).then_some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortDecl {
    pub name: Arc<str>,
    pub members: Vec<Arc<str>>,
    pub span: Span,
}

impl SortDecl {
    pub fn as_set(&self) -> Value {
        Value::set(self.members.iter().map(|m| Value::Sym(m.clone())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstDecl {
    pub name: Arc<str>,
    pub value: i64,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: Arc<str>,
    pub domain: Domain,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: Arc<str>,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Update {
    pub var: VarRef,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub name: Arc<str>,
    pub module: Arc<str>,
    pub params: Vec<Param>,
    pub guards: Vec<Expr>,
    pub updates: Vec<Update>,
    pub span: Span,
}

impl Action {
    /// Variables read by the enabling conditions.
    pub fn guard_reads(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        for g in &self.guards {
            g.collect_vars(&mut out);
        }
        out
    }

    /// Updates that actually change something; `x' = x` is a no-op.
    pub fn effective_updates(&self) -> impl Iterator<Item = &Update> {
        self.updates.iter().filter(|u| !matches!(&u.expr.kind, ExprKind::Var(v) if v.name == u.var.name))
    }

    pub fn writes(&self) -> BTreeSet<Arc<str>> {
        self.effective_updates().map(|u| u.var.name.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Module {
    pub name: Arc<str>,
    pub actions: Vec<Action>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedExpr {
    pub name: Arc<str>,
    pub expr: Expr,
    pub span: Span,
}

/// A validated specification: declarations, a deterministic initial
/// assignment and a partition of its actions into modules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spec {
    pub name: Arc<str>,
    pub sorts: Vec<SortDecl>,
    pub consts: Vec<ConstDecl>,
    pub vars: Vec<VarDecl>,
    /// One constant expression per variable, aligned with `vars`.
    pub init: Vec<Expr>,
    pub modules: Vec<Module>,
    pub invariants: Vec<NamedExpr>,
}

impl Spec {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name.as_ref() == name)
    }

    pub fn var_names(&self) -> Vec<Arc<str>> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn actions(&self) -> impl Iterator<Item = &Action> {
        self.modules.iter().flat_map(|m| m.actions.iter())
    }

    pub fn action(&self, name: &str) -> Option<&Action> {
        self.actions().find(|a| a.name.as_ref() == name)
    }

    pub fn module(&self, name: &str) -> Option<&Module> {
        self.modules.iter().find(|m| m.name.as_ref() == name)
    }

    pub fn sort(&self, name: &str) -> Option<&SortDecl> {
        self.sorts.iter().find(|s| s.name.as_ref() == name)
    }

    pub fn constant(&self, name: &str) -> Option<&ConstDecl> {
        self.consts.iter().find(|c| c.name.as_ref() == name)
    }

    /// Recomputes every variable slot by name. Returns the names that do not
    /// resolve in this spec.
    pub fn relink(&mut self) -> BTreeSet<Arc<str>> {
        let names: Vec<Arc<str>> = self.var_names();
        let mut missing = BTreeSet::new();
        let mut fix = |v: &mut VarRef| match names.iter().position(|n| *n == v.name) {
            Some(i) => v.slot = i,
            None => {
                missing.insert(v.name.clone());
            }
        };
        for e in &mut self.init {
            e.map_vars(&mut fix);
        }
        for m in &mut self.modules {
            for a in &mut m.actions {
                for g in &mut a.guards {
                    g.map_vars(&mut fix);
                }
                for u in &mut a.updates {
                    fix(&mut u.var);
                    u.expr.map_vars(&mut fix);
                }
            }
        }
        for inv in &mut self.invariants {
            inv.expr.map_vars(&mut fix);
        }
        missing
    }
}

/// Total assignment of values to a spec's variables, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(pub Arc<[Value]>);

impl State {
    pub fn new(values: Vec<Value>) -> State {
        State(values.into())
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn get(&self, slot: usize) -> &Value {
        &self.0[slot]
    }
}

/// An action name together with a binding of its parameters, in parameter
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionInstance {
    pub action: Arc<str>,
    pub binding: Vec<(Arc<str>, Value)>,
}

impl ActionInstance {
    pub fn values(&self) -> Vec<Value> {
        self.binding.iter().map(|(_, v)| v.clone()).collect()
    }
}

impl fmt::Display for ActionInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.action)?;
        if !self.binding.is_empty() {
            f.write_str("(")?;
            for (i, (n, v)) in self.binding.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{n} = {v}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powerset_enumeration_counts() {
        let d = Domain::Set(Box::new(Domain::Sort("S".into(), vec!["a".into(), "b".into(), "c".into()])));
        let all = d.enumerate().unwrap();
        assert_eq!(all.len(), 8);
        assert!(all.iter().all(|v| d.contains(v)));
    }

    #[test]
    fn map_domain_requires_total_keys() {
        let d = Domain::Map(Box::new(Domain::Range(Bound::Lit(1), Bound::Lit(2))), Box::new(Domain::Bool));
        let partial = Value::map([(Value::Int(1), Value::Bool(true))]);
        let total = Value::map([(Value::Int(1), Value::Bool(true)), (Value::Int(2), Value::Bool(false))]);
        assert!(!d.contains(&partial));
        assert!(d.contains(&total));
        assert_eq!(d.enumerate().unwrap().len(), 4);
    }

    #[test]
    fn substitution_respects_shadowing() {
        let local = |n: &str| Expr::synth(ExprKind::Local(n.into()));
        let e = Expr::synth(ExprKind::Bin(
            BinOp::And,
            Box::new(local("p")),
            Box::new(Expr::synth(ExprKind::Quant {
                forall: true,
                var: "p".into(),
                domain: Box::new(Expr::synth(ExprKind::SetLit(vec![]))),
                body: Box::new(local("p")),
            })),
        ));
        let out = e.substitute_locals(&[("p".into(), local("q"))]);
        match &out.kind {
            ExprKind::Bin(_, l, r) => {
                assert_eq!(**l, local("q"));
                match &r.kind {
                    ExprKind::Quant { body, .. } => assert_eq!(**body, local("p")),
                    _ => unreachable!(),
                }
            }
            _ => unreachable!(),
        }
    }
}
