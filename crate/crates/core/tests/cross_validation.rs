//! Compositional and direct checks agree on generated instances.

use ipa_core::composer::{compositional_check, direct_check};
use ipa_core::explorer::Bounds;
use ipa_core::generator::{generate, GenConfig, Mutation};

#[test]
fn generated_instances_agree() {
    let bounds = Bounds { workers: 1, ..Bounds::default() };
    let mut tally = std::collections::BTreeMap::new();
    for seed in 0..120 {
        let g = generate(seed, &GenConfig::default());
        let p = g.project().unwrap();
        let comp = compositional_check(&p.spec, &p.manifest, &bounds).unwrap();
        let direct = direct_check(&p.spec, &p.manifest, &bounds).unwrap();
        assert_eq!(
            comp.conclusion.refines(),
            direct.holds(),
            "seed {seed}\n{}\n{}\n{}\n{}",
            g.spec,
            g.manifest,
            g.abstractions.iter().map(|a| a.1.clone()).collect::<String>(),
            comp.conclusion.describe()
        );
        if g.mutation == Mutation::None {
            assert!(
                comp.conclusion.refines(),
                "seed {seed}: {}\n{}\n{}\n{:?}",
                comp.conclusion.describe(),
                g.spec,
                g.manifest,
                g.abstractions
            );
        }
        if g.mutation == Mutation::Leak {
            assert!(!direct.holds(), "seed {seed}");
        }
        *tally.entry((g.mutation, direct.holds())).or_insert(0) += 1;
    }
    println!("{tally:?}");
}
