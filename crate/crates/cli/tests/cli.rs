use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value as Json;

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipa-check"))
        .args(args)
        .current_dir(dir)
        .env_remove("IPA_CHECK_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Replaces measured durations and the time ratio, which vary run to run.
fn mask_times(table: &str) -> String {
    let mask = |w: &str| "#".repeat(w.len());
    let mut out = String::new();
    for line in table.lines() {
        let mut words: Vec<String> = line
            .split(' ')
            .map(|w| match w.strip_suffix('s') {
                Some(n) if n.parse::<f64>().is_ok() => mask(w),
                _ => w.to_string(),
            })
            .collect();
        if line.starts_with("ratio") {
            // Columns: state ratio, then time ratio.
            let last = words.len() - 1;
            words[last] = mask(&words[last]);
        }
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}

fn strip_elapsed(j: &mut Json) {
    match j {
        Json::Object(m) => {
            m.retain(|k, _| !(k.ends_with("secs") || k == "t_comp" || k == "t_direct" || k == "ratio"));
            m.values_mut().for_each(strip_elapsed);
        }
        Json::Array(a) => a.iter_mut().for_each(strip_elapsed),
        _ => {}
    }
}

#[test]
fn analyze_reports_the_raft_partition() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["analyze", "--manifest", path(&corpus("raft3/manifest.ipam")), "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j: Json = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(j["interaction"], serde_json::json!(["log", "role", "term"]));
    assert_eq!(j["modules"]["Vote"]["internal"], serde_json::json!(["lastVote", "vReq", "votes"]));
}

#[test]
fn analyze_without_manifest_skips_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["analyze", path(&corpus("micro-fixpoint-1/spec.ipa"))]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("D = {x, z}"), "{out}");
    assert!(!out.contains("constraints"), "{out}");
}

#[test]
fn missing_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["analyze", "missing.ipa"]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("missing.ipa:1:1"), "{err}");
    assert!(err.contains("no such file"), "{err}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir.path(), &["check", "--no-such-flag"])), 2);
    assert_eq!(code(&run_in(dir.path(), &["check"])), 2);
}

#[test]
fn parse_error_is_located() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.ipa");
    std::fs::write(&spec, "spec Bad\nvars\n  x : 0..3 ]\n").unwrap();
    let o = run_in(dir.path(), &["explore", path(&spec)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.ipa:3:"), "{}", stderr(&o));
}

#[test]
fn healthy_coordinator_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["check", "--manifest", path(&corpus("coordinator-toy/manifest.ipam"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("conclusion: S ⇒ A"), "{out}");
    assert!(out.contains("LeaderMostAdvanced"), "{out}");
    assert!(!dir.path().join("counterexample.json").exists());
}

#[test]
fn buggy_spec_against_healthy_manifest_fails_with_a_replayable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["check", path(&corpus("raft3-bug-quorum/spec.ipa")), "--manifest", path(&corpus("raft3/manifest.ipam"))],
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stdout(&o).contains("blocked at C_Vote"), "{}", stdout(&o));
    let trace = dir.path().join("counterexample.json");
    let j: Json = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(j["target"], "C_Vote");
    assert!(j["steps"].as_array().unwrap().len() <= 12);

    let r = run_in(dir.path(), &["replay", "counterexample.json"]);
    assert_eq!(code(&r), 0, "{}{}", stdout(&r), stderr(&r));
    assert!(stdout(&r).contains("valid"));

    // Tampering with the last state breaks the replay.
    let mut bad = j.clone();
    let last = bad["steps"].as_array_mut().unwrap().last_mut().unwrap();
    let entry = &mut last["state"]["term"]["map"][0][1];
    *entry = serde_json::json!((entry.as_i64().unwrap() + 1) % 3);
    std::fs::write(dir.path().join("bad.json"), bad.to_string()).unwrap();
    let r = run_in(dir.path(), &["replay", "bad.json", "--format", "json"]);
    assert_eq!(code(&r), 1, "{}", stderr(&r));
    let v: Json = serde_json::from_str(&stdout(&r)).unwrap();
    assert_eq!(v["valid"], false);
}

#[test]
fn direct_check_of_the_mutant_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["direct", "--manifest", path(&corpus("raft3-bug-quorum/manifest.ipam")), "--trace-out", "direct.json"],
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let r = run_in(dir.path(), &["replay", "direct.json"]);
    assert_eq!(code(&r), 0, "{}", stdout(&r));
}

#[test]
fn constraint_violation_blocks_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["check", "--manifest", path(&corpus("raft3-abs-peek/manifest.ipam"))]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("nextIndex"), "{}", stdout(&o));
    let a = run_in(dir.path(), &["analyze", "--manifest", path(&corpus("raft3-abs-peek/manifest.ipam"))]);
    assert_eq!(code(&a), 1);
}

#[test]
fn bounds_make_runs_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let m = corpus("coordinator-toy/manifest.ipam");
    for cmd in ["check", "direct", "compare", "explore"] {
        let o = run_in(dir.path(), &[cmd, "--manifest", path(&m), "--max-states", "20"]);
        assert_eq!(code(&o), 3, "{cmd}: {}", stdout(&o));
    }
    let o = run_in(dir.path(), &["explore", "--manifest", path(&m), "--max-depth", "2"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn explore_finds_violations_and_deadlocks() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("count.ipa");
    std::fs::write(
        &spec,
        "spec Count\nvars\n  x : 0..3\ninit\n  x = 0\nmodule M\n  action Inc\n    when x < 3\n    then x' = x + 1\ninvariant Small: x < 2\n",
    )
    .unwrap();
    let o = run_in(dir.path(), &["explore", path(&spec)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("invariant Small violated after 2 steps"), "{}", stdout(&o));
    assert_eq!(code(&run_in(dir.path(), &["replay", "counterexample.json"])), 0);

    std::fs::write(
        &spec,
        "spec Count\nvars\n  x : 0..3\ninit\n  x = 0\nmodule M\n  action Inc\n    when x < 3\n    then x' = x + 1\n",
    )
    .unwrap();
    let o = run_in(dir.path(), &["explore", path(&spec)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("no invariants declared"));
    let o = run_in(dir.path(), &["explore", path(&spec), "--deadlock-error"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn generated_instances_round_trip_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["generate", "--seed", "3", "--count", "2", "--mutation-rate", "0", "--out", "gen"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("gen-4"));
    let o = run_in(dir.path(), &["check", "--manifest", "gen/gen-3/manifest.ipam"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("no invariants declared"), "{}", stdout(&o));
    let o = run_in(dir.path(), &["generate", "--out", "gen", "--mutation-rate", "2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn json_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "compare",
            "--manifest",
            path(&corpus("coordinator-toy/manifest.ipam")),
            "--format",
            "json",
            "--out",
            "r.json",
        ],
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(dir.path().join("r.json")).unwrap();
    let j: Json = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&j).unwrap() + "\n", text);
    assert_eq!(j["cost"]["direct_states"], 3579);
    assert_eq!(j["compositional"]["conclusion"]["result"], "refines");
}

#[test]
fn unwritable_output_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        run_in(dir.path(), &["analyze", path(&corpus("micro-fixpoint-1/spec.ipa")), "--out", "no/such/dir/report.txt"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn worker_count_never_changes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let m = corpus("raft3-bug-quorum/manifest.ipam");
    let mut seen: Vec<(Json, String)> = Vec::new();
    for w in ["1", "2", "8"] {
        let trace = format!("t{w}.json");
        let o = run_in(
            dir.path(),
            &["check", "--manifest", path(&m), "--format", "json", "--workers", w, "--trace-out", &trace],
        );
        assert_eq!(code(&o), 1);
        let mut j: Json = serde_json::from_str(&stdout(&o)).unwrap();
        strip_elapsed(&mut j);
        seen.push((j, std::fs::read_to_string(dir.path().join(trace)).unwrap()));
    }
    // The environment variable is the default for --workers.
    let o = Command::new(env!("CARGO_BIN_EXE_ipa-check"))
        .args(["check", "--manifest", path(&m), "--format", "json", "--trace-out", "env.json"])
        .current_dir(dir.path())
        .env("IPA_CHECK_WORKERS", "2")
        .output()
        .unwrap();
    let mut j: Json = serde_json::from_str(&stdout(&o)).unwrap();
    strip_elapsed(&mut j);
    seen.push((j, std::fs::read_to_string(dir.path().join("env.json")).unwrap()));
    for s in &seen[1..] {
        assert_eq!(s, &seen[0]);
    }
}

fn check_golden(name: &str, actual: &str) {
    let p = golden(name);
    if std::env::var_os("IPA_BLESS").is_some() {
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(&p, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&p).unwrap_or_else(|_| panic!("missing golden {}", p.display()));
    assert_eq!(actual, expected);
}

#[test]
fn compare_table_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["compare", "--manifest", path(&corpus("raft3/manifest.ipam"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = mask_times(&stdout(&o));
    for row in ["T_PreVote", "T_Vote", "T_Replication", "T_comp", "T_direct", "ratio"] {
        assert!(out.lines().any(|l| l.starts_with(row)), "{row} missing:\n{out}");
    }
    check_golden("compare_raft3.txt", &out);
}

#[test]
fn coordinator_tables_match_golden() {
    // Relative paths keep the diagnostics in the golden file portable.
    let root = corpus("");
    let m = "coordinator-toy/manifest.ipam";
    let check = run_in(&root, &["check", "--manifest", m]);
    let analyze = run_in(&root, &["analyze", "--manifest", m]);
    check_golden("check_coordinator.txt", &mask_times(&stdout(&check)));
    check_golden("analyze_coordinator.txt", &stdout(&analyze));
}
