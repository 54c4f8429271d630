//! Front end for `.ipa` specification files and `.ipam` manifests.

mod diag;
mod lexer;
mod manifest;
mod render;
mod resolve;
mod syntax;

pub use diag::{Diagnostic, Diagnostics, Severity};
pub use manifest::{
    load_spec_with, parse_manifest, parse_manifest_syntax, render_manifest, resolve_manifest, Abstraction,
    ActionTarget, IpaManifest, ManifestSyntax, MapEntry, Project,
};
pub use render::{render_domain, render_expr, render_spec};
pub use syntax::{is_reserved, parse_expr_syntax, SpecSyntax};

use crate::kernel::Spec;

/// Parses and validates a specification.
pub fn parse_spec(text: &str, origin: &str) -> Result<Spec, Diagnostics> {
    let syn = syntax::Parser::new(text, origin)?.spec_file()?;
    resolve::resolve_spec(syn).map_err(Diagnostics)
}
