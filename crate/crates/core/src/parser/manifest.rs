//! `.ipam` manifests: which abstraction stands in for each module, how
//! concrete actions map onto abstract ones, and how abstract-only variables
//! are computed from concrete state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::diag::{Diagnostic, Diagnostics};
use super::lexer::Tok;
use super::render::{render_domain, render_expr};
use super::resolve::{resolve_expr, Scope, Ty};
use super::syntax::Parser;
use crate::kernel::{eval_expr, ConstDecl, Env, Expr, ExprKind, NamedExpr, SortDecl, Span, Spec, VarDecl};

/// Abstract module, abstract action and explicit arguments, if any.
pub type MapTarget = (Arc<str>, Arc<str>, Option<Vec<Expr>>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapEntry {
    pub module: Arc<str>,
    pub action: Arc<str>,
    /// `None` maps the action to VOID. Otherwise (module, action, explicit
    /// argument expressions if given).
    pub target: Option<MapTarget>,
    pub span: Span,
}

/// A manifest as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestSyntax {
    pub name: Arc<str>,
    pub span: Span,
    pub spec: Option<(String, Span)>,
    pub abstractions: Vec<(Arc<str>, String, Span)>,
    pub maps: Vec<MapEntry>,
    pub refines: Vec<(Arc<str>, Expr, Span)>,
    pub invariants: Vec<NamedExpr>,
}

pub fn parse_manifest_syntax(text: &str, origin: &str) -> Result<ManifestSyntax, Diagnostics> {
    let mut p = Parser::new(text, origin)?;
    p.skip_newlines();
    let span = p.expect_word("manifest")?;
    let (name, _) = p.ident("the manifest")?;
    p.end_line()?;
    let mut out = ManifestSyntax {
        name,
        span,
        spec: None,
        abstractions: Vec::new(),
        maps: Vec::new(),
        refines: Vec::new(),
        invariants: Vec::new(),
    };
    let string = |p: &mut Parser| -> Result<(String, Span), Diagnostic> {
        match p.peek().clone() {
            Tok::Str(s) => Ok((s, p.bump().span)),
            _ => p.unexpected("a quoted path"),
        }
    };
    loop {
        p.skip_newlines();
        if p.at_eof() {
            break;
        }
        let span = p.span();
        if p.eat_word("spec") {
            if out.spec.is_some() {
                return Err(Diagnostic::error("E-duplicate", "duplicate `spec` entry", span).into());
            }
            out.spec = Some(string(&mut p)?);
        } else if p.eat_word("abstraction") {
            let (module, span) = p.ident("a module")?;
            let (path, _) = string(&mut p)?;
            out.abstractions.push((module, path, span));
        } else if p.eat_word("map") {
            let (module, span) = p.ident("a module")?;
            p.expect(&Tok::Dot)?;
            let (action, _) = p.ident("an action")?;
            p.expect(&Tok::Arrow)?;
            let target = if p.eat_word("void") {
                None
            } else {
                let (am, _) = p.ident("an abstract module")?;
                p.expect(&Tok::Dot)?;
                let (aa, _) = p.ident("an abstract action")?;
                let args = if p.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    if !p.eat(&Tok::RParen) {
                        loop {
                            args.push(p.expr()?);
                            if !p.eat(&Tok::Comma) {
                                break;
                            }
                        }
                        p.expect(&Tok::RParen)?;
                    }
                    Some(args)
                } else {
                    None
                };
                Some((am, aa, args))
            };
            out.maps.push(MapEntry { module, action, target, span });
        } else if p.eat_word("refine") {
            let (var, span) = p.ident("a variable")?;
            if !p.eat(&Tok::Assign) {
                p.expect(&Tok::Eq)?;
            }
            out.refines.push((var, p.expr()?, span));
        } else if p.eat_word("invariant") {
            out.invariants.push(p.named_expr()?);
            continue;
        } else {
            p.unexpected::<()>("a manifest entry (`spec`, `abstraction`, `map`, `refine` or `invariant`)")?;
        }
        p.end_line()?;
    }
    Ok(out)
}

pub fn render_manifest(m: &ManifestSyntax) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "manifest {}", m.name);
    if let Some((path, _)) = &m.spec {
        let _ = writeln!(out, "spec \"{path}\"");
    }
    for (module, path, _) in &m.abstractions {
        let _ = writeln!(out, "abstraction {module} \"{path}\"");
    }
    for e in &m.maps {
        let _ = write!(out, "map {}.{} -> ", e.module, e.action);
        match &e.target {
            None => out.push_str("void"),
            Some((am, aa, args)) => {
                let _ = write!(out, "{am}.{aa}");
                if let Some(args) = args {
                    let args: Vec<String> = args.iter().map(render_expr).collect();
                    let _ = write!(out, "({})", args.join(", "));
                }
            }
        }
        out.push('\n');
    }
    for (v, e, _) in &m.refines {
        let _ = writeln!(out, "refine {v} = {}", render_expr(e));
    }
    for inv in &m.invariants {
        let _ = writeln!(out, "invariant {}: {}", inv.name, render_expr(&inv.expr));
    }
    out
}

/// The abstraction standing in for one concrete module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abstraction {
    /// Concrete module being abstracted.
    pub module: Arc<str>,
    pub path: PathBuf,
    /// The abstraction file; it declares exactly one module.
    pub spec: Spec,
}

impl Abstraction {
    pub fn abstract_module(&self) -> &crate::kernel::Module {
        &self.spec.modules[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionTarget {
    Void,
    /// Abstract action with one argument expression per abstract parameter,
    /// written over the concrete action's parameters.
    Action {
        module: Arc<str>,
        action: Arc<str>,
        args: Vec<Expr>,
    },
}

/// A validated manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpaManifest {
    pub name: Arc<str>,
    /// In the root spec's module order.
    pub abstractions: Vec<Abstraction>,
    /// In the root spec's action order.
    pub action_map: Vec<(Arc<str>, ActionTarget)>,
    /// Mapping for every abstract-only variable, over root variables.
    pub refine: Vec<(Arc<str>, Expr)>,
    /// Root variables followed by abstract-only variables.
    pub vars: Vec<VarDecl>,
    pub sorts: Vec<SortDecl>,
    pub consts: Vec<ConstDecl>,
    /// Properties over `vars`.
    pub invariants: Vec<NamedExpr>,
}

impl IpaManifest {
    pub fn target(&self, action: &str) -> Option<&ActionTarget> {
        self.action_map.iter().find(|(a, _)| a.as_ref() == action).map(|(_, t)| t)
    }

    pub fn abstraction(&self, module: &str) -> Option<&Abstraction> {
        self.abstractions.iter().find(|a| a.module.as_ref() == module)
    }

    pub fn refine_expr(&self, var: &str) -> Option<&Expr> {
        self.refine.iter().find(|(v, _)| v.as_ref() == var).map(|(_, e)| e)
    }

    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|v| v.name.as_ref() == name)
    }
}

/// A root spec together with its manifest, loaded from disk or any reader.
#[derive(Debug, Clone)]
pub struct Project {
    pub spec: Spec,
    pub spec_path: PathBuf,
    pub manifest: IpaManifest,
    pub manifest_path: PathBuf,
}

fn io_error(path: &Path, err: &std::io::Error, span: Option<&Span>) -> Diagnostic {
    let span =
        span.cloned().unwrap_or_else(|| Span { file: Arc::from(path.display().to_string()), line: 1, col: 1, len: 0 });
    let what = if err.kind() == std::io::ErrorKind::NotFound { "no such file".to_string() } else { err.to_string() };
    Diagnostic::error("E-io", format!("cannot read `{}`: {what}", path.display()), span)
}

/// Reads and parses a spec file, reporting read failures at `span` if given.
pub fn load_spec_with(
    path: &Path,
    span: Option<&Span>,
    read: &dyn Fn(&Path) -> std::io::Result<String>,
) -> Result<Spec, Diagnostics> {
    let text = read(path).map_err(|e| io_error(path, &e, span))?;
    super::parse_spec(&text, &path.display().to_string())
}

impl Project {
    pub fn load(manifest_path: &Path, spec_override: Option<&Path>) -> Result<Project, Diagnostics> {
        Project::load_with(manifest_path, spec_override, &|p| std::fs::read_to_string(p))
    }

    pub fn load_with(
        manifest_path: &Path,
        spec_override: Option<&Path>,
        read: &dyn Fn(&Path) -> std::io::Result<String>,
    ) -> Result<Project, Diagnostics> {
        let text = read(manifest_path).map_err(|e| io_error(manifest_path, &e, None))?;
        let syn = parse_manifest_syntax(&text, &manifest_path.display().to_string())?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let spec_path = match (spec_override, &syn.spec) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some((p, _))) => base.join(p),
            (None, None) => {
                return Err(Diagnostic::error("E-manifest", "manifest names no `spec` file", syn.span.clone()).into())
            }
        };
        let spec = load_spec_with(&spec_path, syn.spec.as_ref().map(|(_, s)| s), read)?;
        let manifest = resolve_manifest(syn, &spec, base, read)?;
        Ok(Project { spec, spec_path, manifest, manifest_path: manifest_path.to_path_buf() })
    }
}

/// Parses a manifest and validates it against `root`. Abstraction paths are
/// resolved relative to `base` and read through `read`.
pub fn parse_manifest(
    text: &str,
    origin: &str,
    root: &Spec,
    base: &Path,
    read: &dyn Fn(&Path) -> std::io::Result<String>,
) -> Result<IpaManifest, Diagnostics> {
    resolve_manifest(parse_manifest_syntax(text, origin)?, root, base, read)
}

fn domain_clash(name: &str, what: &str, a: (&str, &Span), b: (&str, &Span), at: &Span) -> Diagnostic {
    Diagnostic::error(
        "E-domain-clash",
        format!("{what} `{name}` is declared as {} at {} and as {} at {}", a.0, a.1, b.0, b.1),
        at.clone(),
    )
}

pub fn resolve_manifest(
    syn: ManifestSyntax,
    root: &Spec,
    base: &Path,
    read: &dyn Fn(&Path) -> std::io::Result<String>,
) -> Result<IpaManifest, Diagnostics> {
    let mut diags: Vec<Diagnostic> = Vec::new();

    // Abstractions: one per module, each a one-module spec.
    let mut by_module: BTreeMap<Arc<str>, (PathBuf, Spec, Span)> = BTreeMap::new();
    for (module, path, span) in &syn.abstractions {
        if root.module(module).is_none() {
            diags.push(Diagnostic::error("E-unresolved", format!("spec has no module `{module}`"), span.clone()));
            continue;
        }
        if by_module.contains_key(module) {
            diags.push(Diagnostic::error(
                "E-duplicate",
                format!("module {module} has more than one abstraction"),
                span.clone(),
            ));
            continue;
        }
        let full = base.join(path);
        match load_spec_with(&full, Some(span), read) {
            Ok(spec) if spec.modules.len() == 1 => {
                by_module.insert(module.clone(), (full, spec, span.clone()));
            }
            Ok(spec) => diags.push(Diagnostic::error(
                "E-abstraction",
                format!("abstraction `{}` must declare exactly one module, found {}", path, spec.modules.len()),
                span.clone(),
            )),
            Err(Diagnostics(ds)) => diags.extend(ds),
        }
    }
    for m in &root.modules {
        if !by_module.contains_key(&m.name) && !syn.abstractions.iter().any(|(n, _, _)| *n == m.name) {
            diags.push(Diagnostic::error(
                "E-missing-abstraction",
                format!("module {} has no abstraction", m.name),
                syn.span.clone(),
            ));
        }
    }
    if !diags.is_empty() {
        return Err(Diagnostics(diags));
    }
    let abstractions: Vec<Abstraction> = root
        .modules
        .iter()
        .map(|m| {
            let (path, spec, _) = by_module.remove(&m.name).expect("checked above");
            Abstraction { module: m.name.clone(), path, spec }
        })
        .collect();

    // Declarations: shared names must agree everywhere.
    let mut sorts: Vec<SortDecl> = root.sorts.clone();
    let mut consts: Vec<ConstDecl> = root.consts.clone();
    let mut vars: Vec<VarDecl> = root.vars.clone();
    let root_init = crate::kernel::Machine::new(root.clone())
        .and_then(|m| m.initial_state())
        .map_err(|e| Diagnostics(vec![Diagnostic::error("E-init", e.to_string(), syn.span.clone())]))?;
    let mut abs_init: BTreeMap<Arc<str>, (crate::kernel::Value, Span)> = BTreeMap::new();
    for abs in &abstractions {
        let here = &abs.spec;
        for s in &here.sorts {
            match sorts.iter().find(|t| t.name == s.name) {
                Some(t) if t.members != s.members => diags.push(domain_clash(
                    &s.name,
                    "sort",
                    (&format!("{{{}}}", t.members.join(", ")), &t.span),
                    (&format!("{{{}}}", s.members.join(", ")), &s.span),
                    &s.span,
                )),
                Some(_) => {}
                None => sorts.push(s.clone()),
            }
        }
        for c in &here.consts {
            match consts.iter().find(|d| d.name == c.name) {
                Some(d) if d.value != c.value => diags.push(domain_clash(
                    &c.name,
                    "constant",
                    (&d.value.to_string(), &d.span),
                    (&c.value.to_string(), &c.span),
                    &c.span,
                )),
                Some(_) => {}
                None => consts.push(c.clone()),
            }
        }
        let init = match crate::kernel::Machine::new(here.clone()).and_then(|m| m.initial_state()) {
            Ok(s) => s,
            Err(e) => {
                diags.push(Diagnostic::error(
                    "E-init",
                    e.to_string(),
                    here.vars.first().map_or(syn.span.clone(), |v| v.span.clone()),
                ));
                continue;
            }
        };
        for (i, v) in here.vars.iter().enumerate() {
            match vars.iter().position(|w| w.name == v.name) {
                Some(j) if vars[j].domain != v.domain => diags.push(domain_clash(
                    &v.name,
                    "variable",
                    (&render_domain(&vars[j].domain), &vars[j].span),
                    (&render_domain(&v.domain), &v.span),
                    &v.span,
                )),
                Some(j) if j < root.vars.len() => {
                    if *init.get(i) != *root_init.get(j) {
                        diags.push(Diagnostic::error(
                            "E-init-mismatch",
                            format!(
                                "abstraction initialises `{}` to {} but the spec initialises it to {}",
                                v.name,
                                init.get(i),
                                root_init.get(j)
                            ),
                            here.init[i].span.clone(),
                        ));
                    }
                }
                Some(_) => {
                    let (prev, prev_span) = &abs_init[&v.name];
                    if prev != init.get(i) {
                        diags.push(Diagnostic::error(
                            "E-init-mismatch",
                            format!("abstractions disagree on the initial value of `{}` (see {prev_span})", v.name),
                            here.init[i].span.clone(),
                        ));
                    }
                }
                None => {
                    abs_init.insert(v.name.clone(), (init.get(i).clone(), here.init[i].span.clone()));
                    vars.push(v.clone());
                }
            }
        }
    }

    // Module and action names of different modules must not collide, since
    // every composed spec mixes concrete and abstract modules.
    for (i, abs) in abstractions.iter().enumerate() {
        let am = abs.abstract_module();
        for (j, m) in root.modules.iter().enumerate() {
            if i == j {
                continue;
            }
            if m.name == am.name {
                diags.push(Diagnostic::error(
                    "E-duplicate",
                    format!("abstract module `{}` has the same name as concrete module `{}`", am.name, m.name),
                    am.span.clone(),
                ));
            }
            for a in &am.actions {
                if m.actions.iter().any(|b| b.name == a.name) {
                    diags.push(Diagnostic::error(
                        "E-duplicate",
                        format!("abstract action `{}` clashes with an action of module `{}`", a.name, m.name),
                        a.span.clone(),
                    ));
                }
            }
        }
        for other in &abstractions[..i] {
            let om = other.abstract_module();
            if om.name == am.name {
                diags.push(Diagnostic::error(
                    "E-duplicate",
                    format!("abstract module `{}` is declared twice", am.name),
                    am.span.clone(),
                ));
            }
            for a in &am.actions {
                if om.actions.iter().any(|b| b.name == a.name) {
                    diags.push(Diagnostic::error(
                        "E-duplicate",
                        format!("abstract action `{}` is declared in `{}` and `{}`", a.name, om.name, am.name),
                        a.span.clone(),
                    ));
                }
            }
        }
    }

    // Action map: total and functional, each f_i into its own abstraction.
    let mut seen: BTreeSet<Arc<str>> = BTreeSet::new();
    let mut targets: BTreeMap<Arc<str>, ActionTarget> = BTreeMap::new();
    for entry in syn.maps {
        let Some(m) = root.module(&entry.module) else {
            diags.push(Diagnostic::error("E-unresolved", format!("spec has no module `{}`", entry.module), entry.span));
            continue;
        };
        let Some(action) = m.actions.iter().find(|a| a.name == entry.action) else {
            diags.push(Diagnostic::error(
                "E-unresolved",
                format!("module `{}` has no action `{}`", entry.module, entry.action),
                entry.span,
            ));
            continue;
        };
        if !seen.insert(action.name.clone()) {
            diags.push(Diagnostic::error(
                "E-duplicate",
                format!("action `{}` is mapped twice", action.name),
                entry.span,
            ));
            continue;
        }
        let Some((am, aa, args)) = entry.target else {
            targets.insert(action.name.clone(), ActionTarget::Void);
            continue;
        };
        let abs = abstractions.iter().find(|a| a.module == m.name).expect("every module has one");
        let amod = abs.abstract_module();
        if amod.name != am {
            diags.push(Diagnostic::error(
                "E-map-target",
                format!("actions of `{}` must map into its abstraction `{}`, not `{am}`", m.name, amod.name),
                entry.span,
            ));
            continue;
        }
        let Some(target) = amod.actions.iter().find(|b| b.name == aa) else {
            diags.push(Diagnostic::error(
                "E-unresolved",
                format!("abstraction `{am}` has no action `{aa}`"),
                entry.span,
            ));
            continue;
        };
        let args = match args {
            None => {
                if target.params.len() != action.params.len() {
                    diags.push(Diagnostic::error(
                        "E-map-arity",
                        format!(
                            "`{}` has {} parameter(s) but `{}` has {}; give explicit arguments",
                            action.name,
                            action.params.len(),
                            target.name,
                            target.params.len()
                        ),
                        entry.span,
                    ));
                    continue;
                }
                action.params.iter().map(|p| Expr::new(ExprKind::Local(p.name.clone()), entry.span.clone())).collect()
            }
            Some(mut args) => {
                if target.params.len() != args.len() {
                    diags.push(Diagnostic::error(
                        "E-map-arity",
                        format!("`{}` takes {} argument(s), found {}", target.name, target.params.len(), args.len()),
                        entry.span,
                    ));
                    continue;
                }
                let ctx = format!("argument for `{}`", target.name);
                let scope = Scope { vars: &root.vars, consts: &consts, sorts: &sorts, forbid_vars: Some(&ctx) };
                for (a, p) in args.iter_mut().zip(&target.params) {
                    let mut locals: Vec<(Arc<str>, Ty)> =
                        action.params.iter().map(|p| (p.name.clone(), Ty::of(&p.domain))).collect();
                    let t = resolve_expr(a, &scope, &mut locals, &mut diags);
                    let want = Ty::of(&p.domain);
                    if !t.fits(&want) {
                        diags.push(Diagnostic::error(
                            "E-type",
                            format!("parameter `{}` is a {want}, found a {t}", p.name),
                            a.span.clone(),
                        ));
                    }
                }
                args
            }
        };
        targets.insert(
            action.name.clone(),
            ActionTarget::Action { module: amod.name.clone(), action: target.name.clone(), args },
        );
    }
    for a in root.actions() {
        if !seen.contains(&a.name) {
            diags.push(Diagnostic::error(
                "E-unmapped-action",
                format!("action `{}` of module `{}` is not mapped", a.name, a.module),
                syn.span.clone(),
            ));
        }
    }

    // Refinement mapping for abstract-only variables.
    let mut refine: BTreeMap<Arc<str>, Expr> = BTreeMap::new();
    for (var, mut e, span) in syn.refines {
        if root.var_index(&var).is_some() {
            diags.push(Diagnostic::error(
                "E-refine",
                format!("`{var}` is a variable of the spec; its mapping is the identity"),
                span,
            ));
            continue;
        }
        let Some(decl) = vars.iter().find(|v| v.name == var) else {
            diags.push(Diagnostic::error(
                "E-refine-unknown",
                format!("refine entry for `{var}`, which no abstraction declares"),
                span,
            ));
            continue;
        };
        if refine.contains_key(&var) {
            diags.push(Diagnostic::error("E-duplicate", format!("`{var}` is refined twice"), span));
            continue;
        }
        let scope = Scope { vars: &root.vars, consts: &consts, sorts: &sorts, forbid_vars: None };
        let before = diags.len();
        let t = resolve_expr(&mut e, &scope, &mut Vec::new(), &mut diags);
        let want = Ty::of(&decl.domain);
        if !t.fits(&want) {
            diags.push(Diagnostic::error("E-type", format!("`{var}` is a {want}, found a {t}"), e.span.clone()));
        }
        if diags.len() == before {
            match eval_expr(&e, &root_init, &mut Env::new()) {
                Ok(v) if v != abs_init[&var].0 => diags.push(Diagnostic::error(
                    "E-init-mismatch",
                    format!(
                        "refine mapping gives `{var}` the initial value {v}, but its abstraction starts at {}",
                        abs_init[&var].0
                    ),
                    span.clone(),
                )),
                Ok(_) => {}
                Err(err) => diags.push(Diagnostic::error("E-refine", err.to_string(), span.clone())),
            }
        }
        refine.insert(var, e);
    }
    for v in &vars[root.vars.len()..] {
        if !refine.contains_key(&v.name) {
            diags.push(Diagnostic::error(
                "E-refine-missing",
                format!("abstract-only variable `{}` has no refine entry", v.name),
                syn.span.clone(),
            ));
        }
    }

    let mut invariants = syn.invariants;
    {
        let names: Vec<(&Arc<str>, &Span)> = invariants.iter().map(|i| (&i.name, &i.span)).collect();
        let mut seen = BTreeSet::new();
        for (n, s) in names {
            if !seen.insert(n.clone()) {
                diags.push(Diagnostic::error("E-duplicate", format!("duplicate invariant `{n}`"), s.clone()));
            }
        }
    }
    let scope = Scope { vars: &vars, consts: &consts, sorts: &sorts, forbid_vars: None };
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
        return Err(Diagnostics(diags));
    }
    Ok(IpaManifest {
        name: syn.name,
        action_map: root.actions().map(|a| (a.name.clone(), targets.remove(&a.name).expect("checked total"))).collect(),
        refine: vars[root.vars.len()..]
            .iter()
            .map(|v| (v.name.clone(), refine.remove(&v.name).expect("checked total")))
            .collect(),
        abstractions,
        vars,
        sorts,
        consts,
        invariants,
    })
}
