//! Syntactic side conditions on abstract modules.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use super::{deps_of, VarAnalysis, VarSet};
use crate::kernel::{Action, ExprKind, Module, Span, Spec};
use crate::parser::{ActionTarget, IpaManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintVerdict {
    Pass,
    Fail,
    /// Constraint 4 held syntactically; the semantic half is left to refinement.
    SyntacticPass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var: Option<Arc<str>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action: Option<Arc<str>>,
    pub message: String,
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintOutcome {
    pub constraint: u8,
    pub verdict: ConstraintVerdict,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuleConstraints {
    pub module: Arc<str>,
    pub abstraction: Arc<str>,
    pub abstract_deps: VarSet,
    pub results: Vec<ConstraintOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintReport {
    pub modules: Vec<ModuleConstraints>,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.modules.iter().all(|m| m.results.iter().all(|r| r.verdict != ConstraintVerdict::Fail))
    }

    pub fn failures(&self) -> impl Iterator<Item = (&Arc<str>, &ConstraintOutcome)> {
        self.modules
            .iter()
            .flat_map(|m| m.results.iter().map(move |r| (&m.module, r)))
            .filter(|(_, r)| r.verdict == ConstraintVerdict::Fail)
    }

    pub fn module(&self, name: &str) -> Option<&ModuleConstraints> {
        self.modules.iter().find(|m| m.module.as_ref() == name)
    }
}

fn outcome(constraint: u8, violations: Vec<Violation>, ok: ConstraintVerdict) -> ConstraintOutcome {
    let verdict = if violations.is_empty() { ok } else { ConstraintVerdict::Fail };
    ConstraintOutcome { constraint, verdict, violations }
}

fn violation(var: Option<&Arc<str>>, action: Option<&Arc<str>>, message: String, span: &Span) -> Violation {
    Violation { var: var.cloned(), action: action.cloned(), message, location: span.to_string() }
}

// Where `v` is first read in a guard, falling back to the module header.
fn locate<'a>(m: &'a Module, v: &str) -> (Option<&'a Arc<str>>, &'a Span) {
    for a in &m.actions {
        for g in &a.guards {
            if g.read_set().iter().any(|r| r.as_ref() == v) {
                return (Some(&a.name), &g.span);
            }
        }
    }
    for a in &m.actions {
        for u in &a.updates {
            if u.expr.read_set().iter().any(|r| r.as_ref() == v) {
                return (Some(&a.name), &u.span);
            }
        }
    }
    (None, &m.span)
}

/// Checks every abstraction of `manifest` against the analysis of `spec`.
pub fn check_abstraction_constraints(spec: &Spec, manifest: &IpaManifest, analysis: &VarAnalysis) -> ConstraintReport {
    let inter = &analysis.interaction;
    let mut modules = Vec::new();
    for m in &spec.modules {
        let Some(abs) = manifest.abstraction(&m.name) else { continue };
        let am = abs.abstract_module();
        let dm = analysis.deps(&m.name);
        let dabs = deps_of(&am.actions);
        let allowed: VarSet = inter.union(&dabs).cloned().collect();

        let mut c1 = Vec::new();
        for v in &dabs {
            if let Some(refine) = manifest.refine_expr(v) {
                for r in refine.read_set() {
                    if !inter.contains(&r) && !dm.contains(&r) {
                        let (action, span) = locate(am, v);
                        c1.push(violation(
                            Some(&r),
                            action,
                            format!(
                                "abstract-only `{v}` is computed from `{r}`, which is neither shared nor read by {}",
                                m.name
                            ),
                            span,
                        ));
                    }
                }
            } else if !inter.contains(v) && !dm.contains(v) {
                let (action, span) = locate(am, v);
                c1.push(violation(
                    Some(v),
                    action,
                    format!("{} depends on `{v}`, which is neither shared nor read by {}", am.name, m.name),
                    span,
                ));
            }
        }

        let mut c2 = Vec::new();
        let mut c3 = Vec::new();
        for a in &am.actions {
            for u in a.effective_updates() {
                let target = if inter.contains(&u.var.name) {
                    &mut c2
                } else if dabs.contains(&u.var.name) {
                    &mut c3
                } else {
                    continue;
                };
                for r in u.expr.read_set() {
                    if !allowed.contains(&r) {
                        target.push(violation(
                            Some(&r),
                            Some(&a.name),
                            format!("update of `{}` in {} reads `{r}`", u.var.name, a.name),
                            &u.span,
                        ));
                    }
                }
            }
        }

        let mut foreign = BTreeSet::new();
        for (other, l) in &analysis.internal {
            if other != &m.name {
                foreign.extend(l.iter().cloned());
            }
        }
        let own = analysis.internal_of(&m.name);
        let mut c4 = Vec::new();
        for a in &m.actions {
            match manifest.target(&a.name) {
                Some(ActionTarget::Void) => {
                    for u in a.effective_updates() {
                        if !own.contains(&u.var.name) {
                            c4.push(violation(
                                Some(&u.var.name),
                                Some(&a.name),
                                format!(
                                    "{} maps to void but writes `{}`, which is not internal to {}",
                                    a.name, u.var.name, m.name
                                ),
                                &u.span,
                            ));
                        }
                    }
                }
                Some(ActionTarget::Action { action, args, .. }) => {
                    let Some(t) = abs.spec.action(action) else { continue };
                    check_preserved(a, t, args, &foreign, &mut c4);
                }
                None => {}
            }
        }

        modules.push(ModuleConstraints {
            module: m.name.clone(),
            abstraction: am.name.clone(),
            abstract_deps: dabs,
            results: vec![
                outcome(1, c1, ConstraintVerdict::Pass),
                outcome(2, c2, ConstraintVerdict::Pass),
                outcome(3, c3, ConstraintVerdict::Pass),
                outcome(4, c4, ConstraintVerdict::SyntacticPass),
            ],
        });
    }
    ConstraintReport { modules }
}

// Updates of `a` to another module's internal variables must reappear in the
// target verbatim once the target's parameters are replaced by the arguments.
fn check_preserved(a: &Action, t: &Action, args: &[crate::kernel::Expr], foreign: &VarSet, out: &mut Vec<Violation>) {
    let subst: Vec<_> = t.params.iter().map(|p| p.name.clone()).zip(args.iter().cloned()).collect();
    for u in a.effective_updates() {
        if !foreign.contains(&u.var.name) {
            continue;
        }
        let kept = t.updates.iter().find(|tu| tu.var.name == u.var.name).map(|tu| tu.expr.substitute_locals(&subst));
        let same = match &kept {
            Some(e) => *e == u.expr,
            None => false,
        };
        if !same {
            let how = if kept.is_none()
                || matches!(&kept, Some(e) if matches!(&e.kind, ExprKind::Var(v) if v.name == u.var.name))
            {
                "drops"
            } else {
                "changes"
            };
            out.push(violation(
                Some(&u.var.name),
                Some(&a.name),
                format!("{} {how} the update of `{}` made by {}", t.name, u.var.name, a.name),
                &u.span,
            ));
        }
    }
}
