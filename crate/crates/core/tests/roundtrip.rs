//! parse ∘ render is the identity on corpus files and random trees.

use proptest::prelude::*;

mod common;
use common::expr;

use ipa_core::corpus::{fixture_ids, load_fixture};
use ipa_core::generator::{generate, GenConfig};
use ipa_core::parser::{
    parse_expr_syntax, parse_manifest_syntax, parse_spec, render_expr, render_manifest, render_spec,
};

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn random_expressions_round_trip(x in expr()) {
        let text = render_expr(&x);
        let back = parse_expr_syntax(&text, "random").map_err(|d| TestCaseError::fail(format!("{text}\n{d}")))?;
        prop_assert_eq!(back, x, "{}", text);
    }
}

#[test]
fn random_specs_round_trip() {
    for seed in 0..500 {
        let g = generate(seed, &GenConfig::default());
        let spec = parse_spec(&g.spec, "gen.ipa").unwrap();
        let text = render_spec(&spec);
        assert_eq!(parse_spec(&text, "again.ipa").unwrap(), spec, "seed {seed}:\n{text}");
        assert_eq!(render_spec(&parse_spec(&text, "again.ipa").unwrap()), text);
        for (name, src) in &g.abstractions {
            let a = parse_spec(src, name).unwrap();
            assert_eq!(parse_spec(&render_spec(&a), name).unwrap(), a);
        }
        let m = parse_manifest_syntax(&g.manifest, "gen.ipam").unwrap();
        assert_eq!(parse_manifest_syntax(&render_manifest(&m), "gen.ipam").unwrap(), m);
    }
}

#[test]
fn corpus_files_round_trip() {
    let mut files = 0;
    for id in fixture_ids() {
        for path in load_fixture(&id).unwrap().source_files().unwrap() {
            let text = std::fs::read_to_string(&path).unwrap();
            let origin = path.display().to_string();
            if origin.ends_with(".ipam") {
                let m = parse_manifest_syntax(&text, &origin).unwrap();
                let again = render_manifest(&m);
                assert_eq!(parse_manifest_syntax(&again, &origin).unwrap(), m, "{origin}");
            } else {
                let spec = parse_spec(&text, &origin).unwrap();
                let again = render_spec(&spec);
                assert_eq!(parse_spec(&again, &origin).unwrap(), spec, "{origin}:\n{again}");
            }
            files += 1;
        }
    }
    assert!(files >= 20, "only {files} corpus files");
}
