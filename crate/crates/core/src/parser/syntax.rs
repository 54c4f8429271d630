//! Recursive-descent parser producing unresolved syntax trees.

use std::sync::Arc;

use super::diag::Diagnostic;
use super::lexer::{lex, Tok, Token};
use crate::kernel::{
    Action, BinOp, Bound, Builtin, ConstDecl, Domain, ExceptClause, Expr, ExprKind, Module, NamedExpr, Param, PathElem,
    SortDecl, Span, Update, VarDecl, VarRef,
};

pub(crate) type PResult<T> = Result<T, Diagnostic>;

const RESERVED: &[&str] = &[
    "spec",
    "const",
    "sort",
    "vars",
    "init",
    "module",
    "action",
    "when",
    "then",
    "unchanged",
    "invariant",
    "manifest",
    "abstraction",
    "map",
    "refine",
    "void",
    "TRUE",
    "FALSE",
    "IF",
    "THEN",
    "ELSE",
    "EXCEPT",
    "Bool",
    "Set",
    "Seq",
];

/// Words that start a new top-level block in either file kind.
const BLOCK_WORDS: &[&str] =
    &["spec", "const", "sort", "vars", "init", "module", "invariant", "manifest", "abstraction", "map", "refine"];

pub fn is_reserved(name: &str) -> bool {
    RESERVED.contains(&name) || Builtin::from_name(name).is_some()
}

/// A spec as written, before names are resolved.
#[derive(Debug, Clone)]
pub struct SpecSyntax {
    pub name: Arc<str>,
    pub span: Span,
    pub sorts: Vec<SortDecl>,
    pub consts: Vec<ConstDecl>,
    pub vars: Vec<VarDecl>,
    pub init: Vec<(Arc<str>, Expr, Span)>,
    pub modules: Vec<Module>,
    /// `unchanged` entries: (module index, action index, variable, span).
    pub unchanged: Vec<(usize, usize, Arc<str>, Span)>,
    pub invariants: Vec<NamedExpr>,
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    sorts: Vec<SortDecl>,
    consts: Vec<ConstDecl>,
}

impl Parser {
    pub(crate) fn new(text: &str, origin: &str) -> PResult<Parser> {
        let file: Arc<str> = Arc::from(origin);
        Ok(Parser { toks: lex(text, &file)?, pos: 0, sorts: Vec::new(), consts: Vec::new() })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub(crate) fn span(&self) -> Span {
        self.toks[self.pos].span.clone()
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(n) if n.as_ref() == w)
    }

    pub(crate) fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::error("E-syntax", message, self.span()))
    }

    pub(crate) fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    pub(crate) fn expect(&mut self, t: &Tok) -> PResult<Span> {
        if self.peek() == t {
            Ok(self.bump().span)
        } else {
            self.unexpected(&t.to_string())
        }
    }

    pub(crate) fn expect_word(&mut self, w: &str) -> PResult<Span> {
        if self.is_word(w) {
            Ok(self.bump().span)
        } else {
            self.unexpected(&format!("`{w}`"))
        }
    }

    /// A user-chosen identifier (not a reserved word).
    pub(crate) fn ident(&mut self, what: &str) -> PResult<(Arc<str>, Span)> {
        match self.peek().clone() {
            Tok::Ident(n) if !is_reserved(&n) => Ok((n, self.bump().span)),
            Tok::Ident(n) => self.error(format!("`{n}` is a reserved word and cannot name {what}")),
            _ => self.unexpected(what),
        }
    }

    /// Any identifier, reserved or not; used after `.` and in EXCEPT paths.
    fn field_name(&mut self) -> PResult<Arc<str>> {
        match self.peek().clone() {
            Tok::Ident(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.unexpected("a field name"),
        }
    }

    pub(crate) fn end_line(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => self.unexpected("end of line"),
        }
    }

    pub(crate) fn skip_newlines(&mut self) {
        while self.peek() == &Tok::Newline {
            self.bump();
        }
    }

    pub(crate) fn at_block_start(&self) -> bool {
        match self.peek() {
            Tok::Ident(n) => BLOCK_WORDS.contains(&n.as_ref()),
            Tok::Eof => true,
            _ => false,
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        self.peek() == &Tok::Eof
    }

    fn int_literal(&mut self) -> PResult<i64> {
        let neg = self.eat(&Tok::Minus);
        match *self.peek() {
            Tok::Int(v) => {
                let v = if neg { -v } else { v };
                let span = self.bump().span;
                i64::try_from(v).map_err(|_| Diagnostic::error("E-syntax", "integer literal out of range", span))
            }
            _ => self.unexpected("an integer literal"),
        }
    }

    // ---- spec files ------------------------------------------------------

    pub(crate) fn spec_file(mut self) -> PResult<SpecSyntax> {
        self.skip_newlines();
        let span = self.expect_word("spec")?;
        let (name, _) = self.ident("the spec")?;
        self.end_line()?;
        let mut out = SpecSyntax {
            name,
            span,
            sorts: Vec::new(),
            consts: Vec::new(),
            vars: Vec::new(),
            init: Vec::new(),
            modules: Vec::new(),
            unchanged: Vec::new(),
            invariants: Vec::new(),
        };
        loop {
            self.skip_newlines();
            if self.at_eof() {
                break;
            }
            if self.eat_word("const") {
                let (name, span) = self.ident("a constant")?;
                self.expect(&Tok::Eq)?;
                let value = self.int_literal()?;
                self.end_line()?;
                let decl = ConstDecl { name, value, span };
                self.consts.push(decl.clone());
                out.consts.push(decl);
            } else if self.eat_word("sort") {
                let (name, span) = self.ident("a sort")?;
                self.expect(&Tok::Eq)?;
                self.expect(&Tok::LBrace)?;
                let mut members = Vec::new();
                loop {
                    members.push(self.ident("a sort member")?.0);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::RBrace)?;
                self.end_line()?;
                let decl = SortDecl { name, members, span };
                self.sorts.push(decl.clone());
                out.sorts.push(decl);
            } else if self.eat_word("vars") {
                self.skip_newlines();
                while !self.at_block_start() {
                    let (name, span) = self.ident("a variable")?;
                    self.expect(&Tok::Colon)?;
                    let domain = self.domain()?;
                    self.end_line()?;
                    self.skip_newlines();
                    out.vars.push(VarDecl { name, domain, span });
                }
            } else if self.eat_word("init") {
                self.skip_newlines();
                while !self.at_block_start() {
                    let (name, span) = self.ident("a variable")?;
                    self.expect(&Tok::Eq)?;
                    let e = self.expr()?;
                    self.end_line()?;
                    self.skip_newlines();
                    out.init.push((name, e, span));
                }
            } else if self.is_word("module") {
                let mi = out.modules.len();
                let m = self.module(mi, &mut out.unchanged)?;
                out.modules.push(m);
            } else if self.eat_word("invariant") {
                out.invariants.push(self.named_expr()?);
            } else {
                return self.unexpected("a declaration (`const`, `sort`, `vars`, `init`, `module` or `invariant`)");
            }
        }
        out.sorts = std::mem::take(&mut self.sorts);
        out.consts = std::mem::take(&mut self.consts);
        Ok(out)
    }

    pub(crate) fn named_expr(&mut self) -> PResult<NamedExpr> {
        let (name, span) = self.ident("an invariant")?;
        self.expect(&Tok::Colon)?;
        let expr = self.expr()?;
        self.end_line()?;
        Ok(NamedExpr { name, expr, span })
    }

    fn module(&mut self, mi: usize, unchanged: &mut Vec<(usize, usize, Arc<str>, Span)>) -> PResult<Module> {
        let span = self.expect_word("module")?;
        let (name, _) = self.ident("a module")?;
        self.end_line()?;
        let mut actions = Vec::new();
        loop {
            self.skip_newlines();
            if !self.is_word("action") {
                break;
            }
            let aspan = self.bump().span;
            let (aname, _) = self.ident("an action")?;
            let mut params = Vec::new();
            if self.eat(&Tok::LParen) {
                loop {
                    let (pname, _) = self.ident("a parameter")?;
                    self.expect(&Tok::In)?;
                    params.push(Param { name: pname, domain: self.domain()? });
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::RParen)?;
            }
            self.end_line()?;
            let mut guards = Vec::new();
            let mut updates = Vec::new();
            loop {
                self.skip_newlines();
                if self.eat_word("when") {
                    guards.push(self.expr()?);
                } else if self.eat_word("then") {
                    loop {
                        let (var, span) = self.ident("a variable")?;
                        self.expect(&Tok::Prime)?;
                        self.expect(&Tok::Eq)?;
                        let expr = self.expr()?;
                        updates.push(Update { var: VarRef { name: var, slot: usize::MAX }, expr, span });
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                } else if self.eat_word("unchanged") {
                    loop {
                        let (var, span) = self.ident("a variable")?;
                        unchanged.push((mi, actions.len(), var, span));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                } else {
                    break;
                }
                self.end_line()?;
            }
            actions.push(Action { name: aname, module: name.clone(), params, guards, updates, span: aspan });
        }
        Ok(Module { name, actions, span })
    }

    fn bound(&mut self) -> PResult<Bound> {
        if let Tok::Ident(n) = self.peek().clone() {
            let span = self.bump().span;
            return match self.consts.iter().find(|c| c.name == n) {
                Some(c) => Ok(Bound::Const(n, c.value)),
                None => Err(Diagnostic::error("E-unresolved", format!("unknown constant `{n}`"), span)),
            };
        }
        Ok(Bound::Lit(self.int_literal()?))
    }

    fn domain(&mut self) -> PResult<Domain> {
        let span = self.span();
        if self.eat_word("Bool") {
            return Ok(Domain::Bool);
        }
        if self.eat_word("Set") {
            self.expect(&Tok::LParen)?;
            let d = self.domain()?;
            self.expect(&Tok::RParen)?;
            return Ok(Domain::Set(Box::new(d)));
        }
        if self.eat_word("Seq") {
            self.expect(&Tok::LParen)?;
            let d = self.domain()?;
            self.expect(&Tok::Comma)?;
            let b = self.bound()?;
            self.expect(&Tok::RParen)?;
            if b.value() < 0 {
                return Err(Diagnostic::error("E-domain", "sequence length bound must be non-negative", span));
            }
            return Ok(Domain::Seq(Box::new(d), b));
        }
        if self.eat(&Tok::LBrack) {
            if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Colon {
                let mut fields: Vec<(Arc<str>, Domain)> = Vec::new();
                loop {
                    let fspan = self.span();
                    let f = self.field_name()?;
                    if fields.iter().any(|(g, _)| *g == f) {
                        return Err(Diagnostic::error("E-duplicate", format!("duplicate record field `{f}`"), fspan));
                    }
                    self.expect(&Tok::Colon)?;
                    fields.push((f, self.domain()?));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::RBrack)?;
                return Ok(Domain::Record(fields));
            }
            let k = self.domain()?;
            self.expect(&Tok::Arrow)?;
            let v = self.domain()?;
            self.expect(&Tok::RBrack)?;
            return Ok(Domain::Map(Box::new(k), Box::new(v)));
        }
        if let Tok::Ident(n) = self.peek().clone() {
            if let Some(members) = self.sorts.iter().find(|s| s.name == n).map(|s| s.members.clone()) {
                self.bump();
                return Ok(Domain::Sort(n, members));
            }
            if !self.consts.iter().any(|c| c.name == n) {
                return Err(Diagnostic::error("E-unresolved", format!("unknown sort `{n}`"), span));
            }
        }
        let lo = self.bound()?;
        self.expect(&Tok::DotDot)?;
        let hi = self.bound()?;
        if lo.value() > hi.value() {
            return Err(Diagnostic::error("E-domain", format!("empty range {}..{}", lo.value(), hi.value()), span));
        }
        Ok(Domain::Range(lo, hi))
    }

    // ---- expressions -----------------------------------------------------

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        // A leading bullet, as in `when /\ a /\ b`, is accepted and ignored.
        if matches!(self.peek(), Tok::And | Tok::Or) {
            self.bump();
        }
        self.implies()
    }

    fn bin(op: BinOp, l: Expr, r: Expr, span: Span) -> Expr {
        Expr::new(ExprKind::Bin(op, Box::new(l), Box::new(r)), span)
    }

    fn implies(&mut self) -> PResult<Expr> {
        let l = self.or()?;
        if self.peek() == &Tok::Implies {
            let span = self.bump().span;
            let r = self.implies()?;
            return Ok(Self::bin(BinOp::Implies, l, r, span));
        }
        Ok(l)
    }

    fn or(&mut self) -> PResult<Expr> {
        let mut l = self.and()?;
        while self.peek() == &Tok::Or {
            let span = self.bump().span;
            let r = self.and()?;
            l = Self::bin(BinOp::Or, l, r, span);
        }
        Ok(l)
    }

    fn and(&mut self) -> PResult<Expr> {
        let mut l = self.not()?;
        while self.peek() == &Tok::And {
            let span = self.bump().span;
            let r = self.not()?;
            l = Self::bin(BinOp::And, l, r, span);
        }
        Ok(l)
    }

    fn not(&mut self) -> PResult<Expr> {
        if self.peek() == &Tok::Not {
            let span = self.bump().span;
            let e = self.not()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(e)), span));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> PResult<Expr> {
        let l = self.range()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::In => BinOp::In,
            Tok::NotIn => BinOp::NotIn,
            Tok::Subseteq => BinOp::Subseteq,
            _ => return Ok(l),
        };
        let span = self.bump().span;
        let r = self.range()?;
        Ok(Self::bin(op, l, r, span))
    }

    fn range(&mut self) -> PResult<Expr> {
        let l = self.setop()?;
        if self.peek() == &Tok::DotDot {
            let span = self.bump().span;
            let r = self.setop()?;
            return Ok(Self::bin(BinOp::Range, l, r, span));
        }
        Ok(l)
    }

    fn setop(&mut self) -> PResult<Expr> {
        let mut l = self.add()?;
        loop {
            let op = match self.peek() {
                Tok::Union => BinOp::Union,
                Tok::Intersect => BinOp::Intersect,
                Tok::SetMinus => BinOp::SetMinus,
                _ => return Ok(l),
            };
            let span = self.bump().span;
            let r = self.add()?;
            l = Self::bin(op, l, r, span);
        }
    }

    fn add(&mut self) -> PResult<Expr> {
        let mut l = self.mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(l),
            };
            let span = self.bump().span;
            let r = self.mul()?;
            l = Self::bin(op, l, r, span);
        }
    }

    fn mul(&mut self) -> PResult<Expr> {
        let mut l = self.unary()?;
        while self.peek() == &Tok::Star {
            let span = self.bump().span;
            let r = self.unary()?;
            l = Self::bin(BinOp::Mul, l, r, span);
        }
        Ok(l)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.peek() == &Tok::Minus {
            let span = self.bump().span;
            if let Tok::Int(v) = *self.peek() {
                let lit = self.bump().span;
                let v = i64::try_from(-v)
                    .map_err(|_| Diagnostic::error("E-syntax", "integer literal out of range", lit))?;
                return self.postfix(Expr::new(ExprKind::Int(v), span));
            }
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Neg(Box::new(e)), span));
        }
        let p = self.primary()?;
        self.postfix(p)
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        loop {
            match self.peek() {
                Tok::LBrack => {
                    let span = self.bump().span;
                    let ix = self.expr()?;
                    self.expect(&Tok::RBrack)?;
                    e = Expr::new(ExprKind::Apply(Box::new(e), Box::new(ix)), span);
                }
                Tok::Dot => {
                    let span = self.bump().span;
                    let f = self.field_name()?;
                    e = Expr::new(ExprKind::Field(Box::new(e), f), span);
                }
                _ => return Ok(e),
            }
        }
    }

    fn list(&mut self, close: &Tok) -> PResult<Vec<Expr>> {
        let mut items = Vec::new();
        if self.eat(close) {
            return Ok(items);
        }
        loop {
            items.push(self.expr()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(close)?;
        Ok(items)
    }

    /// Tries `x \in D` followed by `sep`; rewinds and returns `None` if the
    /// input does not have that shape.
    fn try_binder(&mut self, sep: &Tok) -> PResult<Option<(Arc<str>, Expr)>> {
        let start = self.pos;
        let Tok::Ident(name) = self.peek().clone() else { return Ok(None) };
        if is_reserved(&name) || self.peek_at(1) != &Tok::In {
            return Ok(None);
        }
        self.bump();
        self.bump();
        match self.expr() {
            Ok(d) if self.peek() == sep => {
                self.bump();
                Ok(Some((name, d)))
            }
            _ => {
                self.pos = start;
                Ok(None)
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                let v = i64::try_from(v)
                    .map_err(|_| Diagnostic::error("E-syntax", "integer literal out of range", span.clone()))?;
                Ok(Expr::new(ExprKind::Int(v), span))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::LBrace => {
                self.bump();
                if let Some((var, domain)) = self.try_binder(&Tok::Colon)? {
                    let pred = self.expr()?;
                    self.expect(&Tok::RBrace)?;
                    return Ok(Expr::new(
                        ExprKind::SetFilter { var, domain: Box::new(domain), pred: Box::new(pred) },
                        span,
                    ));
                }
                Ok(Expr::new(ExprKind::SetLit(self.list(&Tok::RBrace)?), span))
            }
            Tok::LSeq => {
                self.bump();
                Ok(Expr::new(ExprKind::SeqLit(self.list(&Tok::RSeq)?), span))
            }
            Tok::LBrack => {
                self.bump();
                self.bracket(span)
            }
            Tok::Forall | Tok::Exists => {
                let forall = self.bump().tok == Tok::Forall;
                let mut binders = Vec::new();
                loop {
                    let (var, _) = self.ident("a bound variable")?;
                    self.expect(&Tok::In)?;
                    binders.push((var, self.expr()?));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::Colon)?;
                let mut body = self.expr()?;
                for (var, domain) in binders.into_iter().rev() {
                    body = Expr::new(
                        ExprKind::Quant { forall, var, domain: Box::new(domain), body: Box::new(body) },
                        span.clone(),
                    );
                }
                Ok(body)
            }
            Tok::Ident(w) => match w.as_ref() {
                "TRUE" | "FALSE" => {
                    self.bump();
                    Ok(Expr::new(ExprKind::Bool(w.as_ref() == "TRUE"), span))
                }
                "IF" => {
                    self.bump();
                    let c = self.expr()?;
                    self.expect_word("THEN")?;
                    let t = self.expr()?;
                    self.expect_word("ELSE")?;
                    let f = self.expr()?;
                    Ok(Expr::new(ExprKind::If(Box::new(c), Box::new(t), Box::new(f)), span))
                }
                _ => {
                    if let Some(b) = Builtin::from_name(&w) {
                        self.bump();
                        self.expect(&Tok::LParen)?;
                        let args = self.list(&Tok::RParen)?;
                        if args.len() != b.arity() {
                            return Err(Diagnostic::error(
                                "E-arity",
                                format!("{} takes {} argument(s), found {}", b.name(), b.arity(), args.len()),
                                span,
                            ));
                        }
                        return Ok(Expr::new(ExprKind::Call(b, args), span));
                    }
                    let (name, span) = self.ident("an expression")?;
                    Ok(Expr::new(ExprKind::Name(name), span))
                }
            },
            _ => self.unexpected("an expression"),
        }
    }

    /// Everything that starts with `[`: records, map comprehensions, EXCEPT.
    fn bracket(&mut self, span: Span) -> PResult<Expr> {
        if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::MapsTo {
            let mut fields: Vec<(Arc<str>, Expr)> = Vec::new();
            loop {
                let fspan = self.span();
                let f = self.field_name()?;
                if fields.iter().any(|(g, _)| *g == f) {
                    return Err(Diagnostic::error("E-duplicate", format!("duplicate record field `{f}`"), fspan));
                }
                self.expect(&Tok::MapsTo)?;
                fields.push((f, self.expr()?));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RBrack)?;
            return Ok(Expr::new(ExprKind::RecordLit(fields), span));
        }
        if let Some((var, domain)) = self.try_binder(&Tok::MapsTo)? {
            let body = self.expr()?;
            self.expect(&Tok::RBrack)?;
            return Ok(Expr::new(ExprKind::MapComp { var, domain: Box::new(domain), body: Box::new(body) }, span));
        }
        let base = self.expr()?;
        self.expect_word("EXCEPT")?;
        let mut clauses = Vec::new();
        loop {
            self.expect(&Tok::Bang)?;
            let mut path = Vec::new();
            loop {
                if self.eat(&Tok::LBrack) {
                    path.push(PathElem::Index(self.expr()?));
                    self.expect(&Tok::RBrack)?;
                } else if self.eat(&Tok::Dot) {
                    path.push(PathElem::Field(self.field_name()?));
                } else {
                    break;
                }
            }
            if path.is_empty() {
                return self.unexpected("`[` or `.` after `!`");
            }
            self.expect(&Tok::Eq)?;
            clauses.push(ExceptClause { path, value: self.expr()? });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RBrack)?;
        Ok(Expr::new(ExprKind::Except(Box::new(base), clauses), span))
    }
}

/// Parses a single expression with no declarations in scope (tests and
/// command-line helpers).
pub fn parse_expr_syntax(text: &str, origin: &str) -> PResult<Expr> {
    let mut p = Parser::new(text, origin)?;
    p.skip_newlines();
    let e = p.expr()?;
    p.skip_newlines();
    if !p.at_eof() {
        return p.unexpected("end of input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Expr {
        parse_expr_syntax(src, "t").unwrap()
    }

    #[test]
    fn precedence() {
        let e = parse("a \\/ b /\\ c => d");
        let ExprKind::Bin(BinOp::Implies, l, _) = &e.kind else { panic!("{e:?}") };
        let ExprKind::Bin(BinOp::Or, _, r) = &l.kind else { panic!() };
        assert!(matches!(r.kind, ExprKind::Bin(BinOp::And, ..)));
    }

    #[test]
    fn negative_literals_fold() {
        assert_eq!(parse("-3").kind, ExprKind::Int(-3));
        assert!(matches!(parse("-(3)").kind, ExprKind::Neg(_)));
        assert!(matches!(parse("x - -3").kind, ExprKind::Bin(BinOp::Sub, _, _)));
    }

    #[test]
    fn set_filter_versus_literal() {
        assert!(matches!(parse("{x \\in S : x > 1}").kind, ExprKind::SetFilter { .. }));
        let ExprKind::SetLit(items) = parse("{x \\in S}").kind else { panic!() };
        assert!(matches!(items[0].kind, ExprKind::Bin(BinOp::In, ..)));
    }

    #[test]
    fn bracket_forms() {
        assert!(matches!(parse("[a |-> 1, b |-> 2]").kind, ExprKind::RecordLit(_)));
        assert!(matches!(parse("[s \\in S |-> 0]").kind, ExprKind::MapComp { .. }));
        assert!(matches!(parse("[f EXCEPT ![1].g = 2, ![2] = 3]").kind, ExprKind::Except(_, ref c) if c.len() == 2));
    }

    #[test]
    fn multi_binder_quantifier_nests() {
        let e = parse("\\A x \\in S, y \\in T : x = y");
        let ExprKind::Quant { body, .. } = &e.kind else { panic!() };
        assert!(matches!(body.kind, ExprKind::Quant { .. }));
    }

    #[test]
    fn builtin_arity_is_checked() {
        let err = parse_expr_syntax("Len(a, b)", "t").unwrap_err();
        assert_eq!(err.code, "E-arity");
    }

    #[test]
    fn syntax_errors_point_at_the_token() {
        let err = parse_expr_syntax("x + )", "t").unwrap_err();
        assert_eq!((err.span.line, err.span.col), (1, 5));
    }
}
