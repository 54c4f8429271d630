//! Dependency, interaction and internal variables of a modular spec, and the
//! syntactic side conditions an abstraction must meet.

mod constraints;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::kernel::{Action, Spec};
use crate::parser::Diagnostic;

pub use constraints::{
    check_abstraction_constraints, ConstraintOutcome, ConstraintReport, ConstraintVerdict, ModuleConstraints, Violation,
};

pub type VarSet = BTreeSet<Arc<str>>;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AnalysisError {
    /// Cannot happen for a correct closure computation.
    #[error("analysis bug: `{var}` is internal to {owner} but a dependency of {other}")]
    NotDisjoint { var: Arc<str>, owner: Arc<str>, other: Arc<str> },
}

/// Variable classification of a spec. Maps are keyed by action or module name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarAnalysis {
    pub action_deps: BTreeMap<Arc<str>, VarSet>,
    pub module_deps: BTreeMap<Arc<str>, VarSet>,
    pub interaction: VarSet,
    pub internal: BTreeMap<Arc<str>, VarSet>,
}

impl VarAnalysis {
    pub fn deps(&self, module: &str) -> &VarSet {
        &self.module_deps[module]
    }

    pub fn internal_of(&self, module: &str) -> &VarSet {
        &self.internal[module]
    }
}

/// State variables read by the guards of `a`.
pub fn action_deps(a: &Action) -> VarSet {
    a.guard_reads()
}

/// Dependency closure of a group of actions: guard reads, plus everything an
/// update to an already-dependent variable reads, until nothing changes.
pub fn deps_of<'a, I>(actions: I) -> VarSet
where
    I: IntoIterator<Item = &'a Action>,
    I::IntoIter: Clone,
{
    let actions = actions.into_iter();
    let mut deps: VarSet = actions.clone().flat_map(action_deps).collect();
    loop {
        let mut grew = false;
        for a in actions.clone() {
            for u in a.effective_updates() {
                if deps.contains(&u.var.name) {
                    for r in u.expr.read_set() {
                        grew |= deps.insert(r);
                    }
                }
            }
        }
        if !grew {
            return deps;
        }
    }
}

pub fn module_deps(spec: &Spec) -> BTreeMap<Arc<str>, VarSet> {
    spec.modules.iter().map(|m| (m.name.clone(), deps_of(&m.actions))).collect()
}

/// Least set of interaction variables.
///
/// Seeded with every pairwise overlap of module dependencies. An update to an
/// interaction variable by an action of `M` pulls in whatever it reads outside
/// `D_M`; an update by any action to a variable in `D_M \ I` does the same.
///
/// The second rule only fires for variables outside `I`, so the rules are
/// applied to the whole set of the previous round at once. That keeps the
/// result independent of module and action order.
pub fn interaction_vars(spec: &Spec, deps: &BTreeMap<Arc<str>, VarSet>) -> VarSet {
    let mut inter = VarSet::new();
    let names: Vec<&Arc<str>> = deps.keys().collect();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            inter.extend(deps[*a].intersection(&deps[*b]).cloned());
        }
    }
    loop {
        let mut added = VarSet::new();
        for m in &spec.modules {
            let dm = &deps[&m.name];
            let mut pull = |reads: BTreeSet<Arc<str>>| {
                added.extend(reads.into_iter().filter(|r| !dm.contains(r) && !inter.contains(r)));
            };
            for a in &m.actions {
                for u in a.effective_updates() {
                    if inter.contains(&u.var.name) {
                        pull(u.expr.read_set());
                    }
                }
            }
            for a in spec.actions() {
                for u in a.effective_updates() {
                    if dm.contains(&u.var.name) && !inter.contains(&u.var.name) {
                        pull(u.expr.read_set());
                    }
                }
            }
        }
        if added.is_empty() {
            return inter;
        }
        inter.extend(added);
    }
}

pub fn internal_vars(
    deps: &BTreeMap<Arc<str>, VarSet>,
    interaction: &VarSet,
) -> Result<BTreeMap<Arc<str>, VarSet>, AnalysisError> {
    let internal: BTreeMap<Arc<str>, VarSet> =
        deps.iter().map(|(m, d)| (m.clone(), d.difference(interaction).cloned().collect())).collect();
    for (owner, l) in &internal {
        for (other, d) in deps {
            if other == owner {
                continue;
            }
            if let Some(v) = l.intersection(d).next() {
                return Err(AnalysisError::NotDisjoint { var: v.clone(), owner: owner.clone(), other: other.clone() });
            }
        }
    }
    Ok(internal)
}

pub fn analyze(spec: &Spec) -> Result<VarAnalysis, AnalysisError> {
    let action_deps = spec.actions().map(|a| (a.name.clone(), action_deps(a))).collect();
    let module_deps = module_deps(spec);
    let interaction = interaction_vars(spec, &module_deps);
    let internal = internal_vars(&module_deps, &interaction)?;
    Ok(VarAnalysis { action_deps, module_deps, interaction, internal })
}

/// Warns about actions that write a variable their own module neither depends
/// on nor shares. Such writes are invisible to the module's abstraction.
pub fn blind_writes(spec: &Spec, analysis: &VarAnalysis) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for m in &spec.modules {
        let dm = analysis.deps(&m.name);
        for a in &m.actions {
            for u in a.effective_updates() {
                if !dm.contains(&u.var.name) && !analysis.interaction.contains(&u.var.name) {
                    out.push(Diagnostic::warning(
                        "W-blind-write",
                        format!(
                            "action {} writes `{}`, which module {} never reads and which is not an interaction variable",
                            a.name, u.var.name, m.name
                        ),
                        u.span.clone(),
                    ));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuleVars {
    pub deps: VarSet,
    pub internal: VarSet,
}

/// Serializable summary of an analysis run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    pub modules: BTreeMap<Arc<str>, ModuleVars>,
    pub interaction: VarSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraints: Option<ConstraintReport>,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    pub fn new(analysis: &VarAnalysis, constraints: Option<ConstraintReport>, warnings: &[Diagnostic]) -> Self {
        let modules = analysis
            .module_deps
            .iter()
            .map(|(m, d)| (m.clone(), ModuleVars { deps: d.clone(), internal: analysis.internal[m].clone() }))
            .collect();
        AnalysisReport {
            modules,
            interaction: analysis.interaction.clone(),
            constraints,
            warnings: warnings.iter().map(|d| d.to_string()).collect(),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests;
