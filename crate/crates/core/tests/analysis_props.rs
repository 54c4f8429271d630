//! Fixpoint properties of the dependency analysis, checked against a
//! separately written oracle.

use proptest::prelude::*;

mod common;
use common::{effective_updates, oracle_deps, oracle_interaction, Set};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ipa_core::analysis::{analyze, interaction_vars, module_deps};
use ipa_core::corpus::{fixture_ids, load_fixture};
use ipa_core::generator::{generate, GenConfig};
use ipa_core::kernel::Spec;
use ipa_core::parser::parse_spec;

fn permuted(spec: &Spec, seed: u64) -> Spec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = spec.clone();
    s.modules.shuffle(&mut rng);
    for m in &mut s.modules {
        m.actions.shuffle(&mut rng);
        for a in &mut m.actions {
            a.updates.shuffle(&mut rng);
        }
    }
    s
}

fn specs() -> Vec<(String, Spec)> {
    let mut out: Vec<(String, Spec)> = fixture_ids()
        .into_iter()
        .map(|id| {
            let spec = load_fixture(&id).unwrap().spec().unwrap();
            (id, spec)
        })
        .collect();
    for seed in 0..30 {
        let g = generate(seed, &GenConfig::default());
        out.push((format!("gen-{seed}"), parse_spec(&g.spec, "gen.ipa").unwrap()));
    }
    out
}

#[test]
fn analysis_matches_the_oracle() {
    for (id, spec) in specs() {
        let a = analyze(&spec).unwrap();
        let deps = oracle_deps(&spec);
        assert_eq!(a.module_deps, deps, "{id}");
        assert_eq!(a.interaction, oracle_interaction(&spec, &deps), "{id}");
    }
}

#[test]
fn internal_variables_are_disjoint_on_every_fixture() {
    for (id, spec) in specs() {
        let a = analyze(&spec).unwrap();
        for (mi, li) in &a.internal {
            for (mj, dj) in &a.module_deps {
                if mi != mj {
                    assert!(li.is_disjoint(dj), "{id}: L_{mi} meets D_{mj}");
                }
            }
        }
    }
}

#[test]
fn closures_are_idempotent() {
    for (id, spec) in specs() {
        let deps = module_deps(&spec);
        // Closing D_M again: no update to a dependent variable reads outside it.
        for m in &spec.modules {
            for a in &m.actions {
                for (v, reads) in effective_updates(a) {
                    if deps[&m.name].contains(&v) {
                        assert!(reads.is_subset(&deps[&m.name]), "{id}: {} not closed", m.name);
                    }
                }
            }
        }
        let i = interaction_vars(&spec, &deps);
        assert_eq!(oracle_interaction(&spec, &deps).union(&i).cloned().collect::<Set>(), i, "{id}");
        assert_eq!(interaction_vars(&spec, &deps), i, "{id}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn iteration_order_does_not_matter(spec_seed in 0u64..40, perm in any::<u64>()) {
        let g = generate(spec_seed, &GenConfig::default());
        let spec = parse_spec(&g.spec, "gen.ipa").unwrap();
        let a = analyze(&spec).unwrap();
        let b = analyze(&permuted(&spec, perm)).unwrap();
        prop_assert_eq!(&a.module_deps, &b.module_deps);
        prop_assert_eq!(&a.interaction, &b.interaction);
        prop_assert_eq!(&a.internal, &b.internal);

        let raft = load_fixture("raft3").unwrap().spec().unwrap();
        let r = analyze(&raft).unwrap();
        let rp = analyze(&permuted(&raft, perm)).unwrap();
        prop_assert_eq!(r.module_deps, rp.module_deps);
        prop_assert_eq!(r.interaction, rp.interaction);
    }

    #[test]
    fn adding_an_action_never_shrinks_the_fixpoints(spec_seed in 0u64..40, pick in any::<prop::sample::Index>()) {
        let g = generate(spec_seed, &GenConfig::default());
        let full = parse_spec(&g.spec, "gen.ipa").unwrap();
        let mut smaller = full.clone();
        let slots: Vec<(usize, usize)> = smaller
            .modules
            .iter()
            .enumerate()
            .flat_map(|(m, module)| (0..module.actions.len()).map(move |a| (m, a)))
            .filter(|&(m, _)| smaller_has_spare(&full, m))
            .collect();
        prop_assume!(!slots.is_empty());
        let (m, a) = slots[pick.index(slots.len())];
        smaller.modules[m].actions.remove(a);
        let big = analyze(&full).unwrap();
        let small_deps = module_deps(&smaller);
        let small_i = interaction_vars(&smaller, &small_deps);
        for (name, d) in &small_deps {
            prop_assert!(d.is_subset(&big.module_deps[name]));
        }
        prop_assert!(small_i.is_subset(&big.interaction));
    }
}

fn smaller_has_spare(spec: &Spec, module: usize) -> bool {
    spec.modules[module].actions.len() > 1
}
