//! Compositional checking: build A and every C_i, then discharge `C_i ⇒ A`
//! for each module instead of `S ⇒ A` directly.

mod build;
mod check;

use std::sync::Arc;

use crate::analysis::AnalysisError;
use crate::explorer::ExploreError;
use crate::kernel::{Expr, ExprKind, Spec};
use crate::parser::{ActionTarget, IpaManifest};
use crate::refinement::{ActionMapping, RefinementError};

pub use build::{
    abstract_scope, build_abstract_spec, build_compositional_spec, compositional_scope, ComposedSpec, Provenance,
};
pub use check::{
    compositional_check, direct_check, properties, CompositionalReport, Conclusion, CostComparison, DirectReport,
    ModuleCheck, PropertyStatus, StageStats,
};

#[derive(Debug, thiserror::Error)]
pub enum ComposeError {
    #[error("unknown module {0}")]
    UnknownModule(String),
    #[error("{spec}: {} reads `{var}`, which lies outside the composed variable scope", action.as_deref().unwrap_or("initial state"))]
    Scope { spec: String, action: Option<Arc<str>>, var: Arc<str> },
    #[error(
        "abstract variable `{var}` is neither in the scope of C_{module} nor recoverable through a refine mapping"
    )]
    ScopeInclusion { module: String, var: Arc<str> },
    #[error("action mappings disagree on {action}: composed {composed}, expected {expected}")]
    Incoherent { action: Arc<str>, composed: String, expected: String },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Refinement(#[from] RefinementError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
}

/// g_i (S to C_i), ḡ_i (C_i to A) and g (S to A) for one module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mappings {
    pub g_i: ActionMapping,
    pub g_bar_i: ActionMapping,
    pub g: ActionMapping,
}

fn identity_target(spec: &Spec, action: &str) -> ActionTarget {
    let a = spec.action(action).expect("action of the spec");
    ActionTarget::Action {
        module: a.module.clone(),
        action: a.name.clone(),
        args: a.params.iter().map(|p| Expr::synth(ExprKind::Local(p.name.clone()))).collect(),
    }
}

fn render_target(t: &ActionTarget) -> String {
    match t {
        ActionTarget::Void => "void".into(),
        ActionTarget::Action { action, args, .. } => {
            let args: Vec<String> = args.iter().map(crate::parser::render_expr).collect();
            format!("{action}({})", args.join(", "))
        }
    }
}

/// `second ∘ first`: arguments of the outer target are rewritten in terms of
/// the inner action's arguments.
fn compose(first: &ActionTarget, second: &ActionMapping, mid: &Spec) -> ActionTarget {
    match first {
        ActionTarget::Void => ActionTarget::Void,
        ActionTarget::Action { action, args, .. } => match second.get(action) {
            None | Some(ActionTarget::Void) => ActionTarget::Void,
            Some(ActionTarget::Action { module, action: outer, args: outer_args }) => {
                let params = &mid.action(action).expect("intermediate action").params;
                let subst: Vec<_> = params.iter().map(|p| p.name.clone()).zip(args.iter().cloned()).collect();
                ActionTarget::Action {
                    module: module.clone(),
                    action: outer.clone(),
                    args: outer_args.iter().map(|e| e.substitute_locals(&subst)).collect(),
                }
            }
        },
    }
}

/// Builds g_i and ḡ_i for `module` and checks that they compose to g.
pub fn compose_mappings(
    spec: &Spec,
    manifest: &IpaManifest,
    c_i: &ComposedSpec,
    module: &str,
) -> Result<Mappings, ComposeError> {
    let own = spec.module(module).ok_or_else(|| ComposeError::UnknownModule(module.to_string()))?;
    let g = ActionMapping { entries: manifest.action_map.clone() };
    let g_i = ActionMapping {
        entries: spec
            .actions()
            .map(|a| {
                let t = if a.module.as_ref() == module {
                    identity_target(spec, &a.name)
                } else {
                    manifest.target(&a.name).expect("total action map").clone()
                };
                (a.name.clone(), t)
            })
            .collect(),
    };
    let g_bar_i = ActionMapping {
        entries: c_i
            .spec
            .actions()
            .map(|a| {
                let t = if own.actions.iter().any(|x| x.name == a.name) {
                    manifest.target(&a.name).expect("total action map").clone()
                } else {
                    identity_target(&c_i.spec, &a.name)
                };
                (a.name.clone(), t)
            })
            .collect(),
    };
    for (name, expected) in &g.entries {
        let composed = compose(g_i.get(name).expect("g_i is total"), &g_bar_i, &c_i.spec);
        if &composed != expected {
            return Err(ComposeError::Incoherent {
                action: name.clone(),
                composed: render_target(&composed),
                expected: render_target(expected),
            });
        }
    }
    Ok(Mappings { g_i, g_bar_i, g })
}

#[cfg(test)]
mod tests;
