//! Workloads shared by the benches.

use ipa_core::corpus::load_fixture;
use ipa_core::generator::{generate, GenConfig};
use ipa_core::parser::Project;

/// A compositional corpus fixture, loaded from disk.
pub fn fixture(id: &str) -> Project {
    load_fixture(id)
        .and_then(|f| f.project())
        .unwrap_or_else(|e| panic!("fixture {id}: {e}"))
        .unwrap_or_else(|| panic!("fixture {id} has no manifest"))
}

/// An unmutated generated instance.
pub fn generated(seed: u64) -> Project {
    let g = generate(seed, &GenConfig { mutation_rate: 0.0 });
    g.project().unwrap_or_else(|e| panic!("gen-{seed}: {e}"))
}
