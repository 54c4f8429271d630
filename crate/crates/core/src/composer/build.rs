//! Assembly of the abstract spec A and the compositional specs C_i.

use std::sync::Arc;

use serde::Serialize;

use super::ComposeError;
use crate::analysis::{deps_of, VarAnalysis, VarSet};
use crate::kernel::{Action, Expr, Module, Spec};
use crate::parser::IpaManifest;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "module", rename_all = "lowercase")]
pub enum Provenance {
    Concrete(Arc<str>),
    Abstract(Arc<str>),
}

/// A merged spec together with where each action came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedSpec {
    pub spec: Spec,
    pub provenance: Vec<(Arc<str>, Provenance)>,
    pub scope: VarSet,
    /// Updates removed because they write outside `scope`, as (action, variable).
    pub dropped: Vec<(Arc<str>, Arc<str>)>,
}

fn abstract_deps(manifest: &IpaManifest) -> Vec<(Arc<str>, VarSet)> {
    manifest.abstractions.iter().map(|a| (a.module.clone(), deps_of(&a.abstract_module().actions))).collect()
}

/// V_A: interaction variables plus every abstract module's dependencies.
pub fn abstract_scope(manifest: &IpaManifest, analysis: &VarAnalysis) -> VarSet {
    let mut scope = analysis.interaction.clone();
    for (_, d) in abstract_deps(manifest) {
        scope.extend(d);
    }
    scope
}

/// V_{C_i}: interaction variables, the concrete module's dependencies and
/// every other abstract module's dependencies.
pub fn compositional_scope(manifest: &IpaManifest, analysis: &VarAnalysis, module: &str) -> VarSet {
    let mut scope = analysis.interaction.clone();
    scope.extend(analysis.deps(module).iter().cloned());
    for (m, d) in abstract_deps(manifest) {
        if m.as_ref() != module {
            scope.extend(d);
        }
    }
    scope
}

fn assemble(
    name: String,
    root: &Spec,
    manifest: &IpaManifest,
    scope: VarSet,
    parts: Vec<(Module, Provenance)>,
) -> Result<ComposedSpec, ComposeError> {
    let vars: Vec<_> = manifest.vars.iter().filter(|v| scope.contains(&v.name)).cloned().collect();
    let mut init = Vec::with_capacity(vars.len());
    for v in &vars {
        let e = match root.var_index(&v.name) {
            Some(i) => root.init[i].clone(),
            None => abstract_init(manifest, &v.name)?,
        };
        init.push(e);
    }

    let mut provenance = Vec::new();
    let mut dropped = Vec::new();
    let mut modules = Vec::new();
    for (mut m, origin) in parts {
        for a in &mut m.actions {
            provenance.push((a.name.clone(), origin.clone()));
            a.updates.retain(|u| {
                let keep = scope.contains(&u.var.name);
                if !keep {
                    dropped.push((a.name.clone(), u.var.name.clone()));
                }
                keep
            });
            check_reads(a, &scope, &name)?;
        }
        modules.push(m);
    }

    let mut spec = Spec {
        name: name.into(),
        sorts: manifest.sorts.clone(),
        consts: manifest.consts.clone(),
        vars,
        init,
        modules,
        invariants: Vec::new(),
    };
    if let Some(v) = spec.relink().into_iter().next() {
        return Err(ComposeError::Scope { spec: spec.name.to_string(), action: None, var: v });
    }
    Ok(ComposedSpec { spec, provenance, scope, dropped })
}

fn check_reads(a: &Action, scope: &VarSet, spec: &str) -> Result<(), ComposeError> {
    let mut reads = a.guard_reads();
    for u in &a.updates {
        reads.extend(u.expr.read_set());
    }
    match reads.into_iter().find(|r| !scope.contains(r)) {
        Some(var) => Err(ComposeError::Scope { spec: spec.to_string(), action: Some(a.name.clone()), var }),
        None => Ok(()),
    }
}

// Abstract-only variables start where their abstraction says; the manifest
// has already checked that this agrees with the refine mapping.
fn abstract_init(manifest: &IpaManifest, var: &str) -> Result<Expr, ComposeError> {
    for abs in &manifest.abstractions {
        if let Some(i) = abs.spec.var_index(var) {
            return Ok(abs.spec.init[i].clone());
        }
    }
    Err(ComposeError::Scope { spec: manifest.name.to_string(), action: None, var: var.into() })
}

/// A: every abstract module, over V_A.
pub fn build_abstract_spec(
    spec: &Spec,
    manifest: &IpaManifest,
    analysis: &VarAnalysis,
) -> Result<ComposedSpec, ComposeError> {
    let scope = abstract_scope(manifest, analysis);
    let parts = manifest
        .abstractions
        .iter()
        .map(|a| (a.abstract_module().clone(), Provenance::Abstract(a.module.clone())))
        .collect();
    assemble(format!("{}_A", spec.name), spec, manifest, scope, parts)
}

/// C_i: module `module` kept concrete, every other module abstracted.
pub fn build_compositional_spec(
    spec: &Spec,
    manifest: &IpaManifest,
    analysis: &VarAnalysis,
    module: &str,
) -> Result<ComposedSpec, ComposeError> {
    let concrete = spec.module(module).ok_or_else(|| ComposeError::UnknownModule(module.to_string()))?;
    let scope = compositional_scope(manifest, analysis, module);
    let a_scope = abstract_scope(manifest, analysis);
    for v in &a_scope {
        // Abstract-only variables of this module's abstraction are recovered
        // through the refine mapping instead.
        let covered = scope.contains(v)
            || manifest.refine_expr(v).is_some_and(|e| e.read_set().iter().all(|r| scope.contains(r)));
        if !covered {
            return Err(ComposeError::ScopeInclusion { module: module.to_string(), var: v.clone() });
        }
    }
    let parts = spec
        .modules
        .iter()
        .map(|m| {
            if m.name.as_ref() == module {
                (concrete.clone(), Provenance::Concrete(m.name.clone()))
            } else {
                let abs = manifest.abstraction(&m.name).expect("manifest covers every module");
                (abs.abstract_module().clone(), Provenance::Abstract(m.name.clone()))
            }
        })
        .collect();
    assemble(format!("{}_C_{module}", spec.name), spec, manifest, scope, parts)
}
