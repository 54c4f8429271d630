//! Canonical text for specs and expressions. Output re-parses to an equal tree.

use std::fmt::Write as _;

use crate::kernel::{BinOp, Bound, Domain, Expr, ExprKind, PathElem, Spec};

// Binding strength, loosest first. Quantifiers and IF extend as far right as
// possible, so they sit below everything and get parenthesized as operands.
const OPEN: u8 = 0;
const NOT: u8 = 4;
const NEG: u8 = 10;
const POSTFIX: u8 = 11;
const ATOM: u8 = 12;

fn bin_level(op: BinOp) -> u8 {
    match op {
        BinOp::Implies => 1,
        BinOp::Or => 2,
        BinOp::And => 3,
        BinOp::Eq
        | BinOp::Ne
        | BinOp::Lt
        | BinOp::Le
        | BinOp::Gt
        | BinOp::Ge
        | BinOp::In
        | BinOp::NotIn
        | BinOp::Subseteq => 5,
        BinOp::Range => 6,
        BinOp::Union | BinOp::Intersect | BinOp::SetMinus => 7,
        BinOp::Add | BinOp::Sub => 8,
        BinOp::Mul => 9,
    }
}

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Quant { .. } | ExprKind::If(..) => OPEN,
        ExprKind::Bin(op, ..) => bin_level(*op),
        ExprKind::Not(_) => NOT,
        ExprKind::Neg(_) => NEG,
        ExprKind::Apply(..) | ExprKind::Field(..) => POSTFIX,
        _ => ATOM,
    }
}

pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, OPEN);
    out
}

fn write_list(out: &mut String, items: &[Expr]) {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, it, OPEN);
    }
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let paren = level(e) < min;
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Bool(true) => out.push_str("TRUE"),
        ExprKind::Bool(false) => out.push_str("FALSE"),
        ExprKind::Int(i) => {
            let _ = write!(out, "{i}");
        }
        ExprKind::Name(n) | ExprKind::Sym(n) | ExprKind::Local(n) | ExprKind::Const(n, _) | ExprKind::SortSet(n, _) => {
            out.push_str(n)
        }
        ExprKind::Var(v) => out.push_str(&v.name),
        ExprKind::Not(x) => {
            out.push('~');
            write_expr(out, x, NOT);
        }
        ExprKind::Neg(x) => {
            out.push_str("-(");
            write_expr(out, x, OPEN);
            out.push(')');
        }
        ExprKind::Bin(op, l, r) => {
            let lv = bin_level(*op);
            let (lmin, rmin) = match op {
                BinOp::Implies => (lv + 1, lv),
                _ if lv == 5 || lv == 6 => (lv + 1, lv + 1),
                _ => (lv, lv + 1),
            };
            write_expr(out, l, lmin);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, r, rmin);
        }
        ExprKind::SetLit(items) => {
            out.push('{');
            write_list(out, items);
            out.push('}');
        }
        ExprKind::SeqLit(items) => {
            out.push_str("<<");
            write_list(out, items);
            out.push_str(">>");
        }
        ExprKind::RecordLit(fields) => {
            out.push('[');
            for (i, (n, fe)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{n} |-> ");
                write_expr(out, fe, OPEN);
            }
            out.push(']');
        }
        ExprKind::MapComp { var, domain, body } => {
            let _ = write!(out, "[{var} \\in ");
            write_expr(out, domain, OPEN);
            out.push_str(" |-> ");
            write_expr(out, body, OPEN);
            out.push(']');
        }
        ExprKind::SetFilter { var, domain, pred } => {
            let _ = write!(out, "{{{var} \\in ");
            write_expr(out, domain, OPEN);
            out.push_str(" : ");
            write_expr(out, pred, OPEN);
            out.push('}');
        }
        ExprKind::Quant { forall, var, domain, body } => {
            let _ = write!(out, "{} {var} \\in ", if *forall { "\\A" } else { "\\E" });
            write_expr(out, domain, OPEN);
            out.push_str(" : ");
            write_expr(out, body, OPEN);
        }
        ExprKind::If(c, t, f) => {
            out.push_str("IF ");
            write_expr(out, c, OPEN);
            out.push_str(" THEN ");
            write_expr(out, t, OPEN);
            out.push_str(" ELSE ");
            write_expr(out, f, OPEN);
        }
        ExprKind::Call(b, args) => {
            out.push_str(b.name());
            out.push('(');
            write_list(out, args);
            out.push(')');
        }
        ExprKind::Apply(f, x) => {
            write_expr(out, f, POSTFIX);
            out.push('[');
            write_expr(out, x, OPEN);
            out.push(']');
        }
        ExprKind::Field(r, name) => {
            write_expr(out, r, POSTFIX);
            let _ = write!(out, ".{name}");
        }
        ExprKind::Except(base, clauses) => {
            out.push('[');
            write_expr(out, base, OPEN);
            out.push_str(" EXCEPT ");
            for (i, c) in clauses.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push('!');
                for p in &c.path {
                    match p {
                        PathElem::Index(ix) => {
                            out.push('[');
                            write_expr(out, ix, OPEN);
                            out.push(']');
                        }
                        PathElem::Field(f) => {
                            let _ = write!(out, ".{f}");
                        }
                    }
                }
                out.push_str(" = ");
                write_expr(out, &c.value, OPEN);
            }
            out.push(']');
        }
    }
    if paren {
        out.push(')');
    }
}

fn bound(b: &Bound) -> String {
    match b {
        Bound::Lit(v) => v.to_string(),
        Bound::Const(n, _) => n.to_string(),
    }
}

pub fn render_domain(d: &Domain) -> String {
    match d {
        Domain::Bool => "Bool".into(),
        Domain::Range(lo, hi) => format!("{}..{}", bound(lo), bound(hi)),
        Domain::Sort(n, _) => n.to_string(),
        Domain::Set(e) => format!("Set({})", render_domain(e)),
        Domain::Seq(e, n) => format!("Seq({}, {})", render_domain(e), bound(n)),
        Domain::Record(fs) => {
            format!("[{}]", fs.iter().map(|(n, d)| format!("{n}: {}", render_domain(d))).collect::<Vec<_>>().join(", "))
        }
        Domain::Map(k, v) => format!("[{} -> {}]", render_domain(k), render_domain(v)),
    }
}

/// Canonical source text for `spec`.
pub fn render_spec(spec: &Spec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "spec {}", spec.name);
    if !spec.consts.is_empty() || !spec.sorts.is_empty() {
        out.push('\n');
    }
    for c in &spec.consts {
        let _ = writeln!(out, "const {} = {}", c.name, c.value);
    }
    for s in &spec.sorts {
        let members: Vec<&str> = s.members.iter().map(|m| m.as_ref()).collect();
        let _ = writeln!(out, "sort {} = {{{}}}", s.name, members.join(", "));
    }
    if !spec.vars.is_empty() {
        out.push_str("\nvars\n");
        for v in &spec.vars {
            let _ = writeln!(out, "  {} : {}", v.name, render_domain(&v.domain));
        }
        out.push_str("\ninit\n");
        for (v, e) in spec.vars.iter().zip(&spec.init) {
            let _ = writeln!(out, "  {} = {}", v.name, render_expr(e));
        }
    }
    for m in &spec.modules {
        let _ = writeln!(out, "\nmodule {}", m.name);
        for a in &m.actions {
            let _ = write!(out, "  action {}", a.name);
            if !a.params.is_empty() {
                let ps: Vec<String> =
                    a.params.iter().map(|p| format!("{} \\in {}", p.name, render_domain(&p.domain))).collect();
                let _ = write!(out, "({})", ps.join(", "));
            }
            out.push('\n');
            for g in &a.guards {
                let _ = writeln!(out, "    when {}", render_expr(g));
            }
            for u in &a.updates {
                let _ = writeln!(out, "    then {}' = {}", u.var.name, render_expr(&u.expr));
            }
        }
    }
    if !spec.invariants.is_empty() {
        out.push('\n');
    }
    for inv in &spec.invariants {
        let _ = writeln!(out, "invariant {}: {}", inv.name, render_expr(&inv.expr));
    }
    out
}
