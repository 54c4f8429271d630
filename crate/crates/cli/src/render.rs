//! Human-readable tables. Durations are printed in milliseconds.

use std::fmt::Write;

use ipa_core::analysis::{AnalysisReport, ConstraintVerdict};
use ipa_core::composer::{CompositionalReport, CostComparison, DirectReport, StageStats};
use ipa_core::explorer::{ExplorationReport, ReplayVerdict};

fn ms(secs: f64) -> String {
    format!("{:.3}s", (secs * 1000.0).round() / 1000.0)
}

fn join<I: IntoIterator<Item = S>, S: AsRef<str>>(items: I) -> String {
    let v: Vec<String> = items.into_iter().map(|s| s.as_ref().to_string()).collect();
    if v.is_empty() {
        "-".into()
    } else {
        v.join(", ")
    }
}

fn verdict(v: ConstraintVerdict) -> &'static str {
    match v {
        ConstraintVerdict::Pass => "pass",
        ConstraintVerdict::Fail => "FAIL",
        ConstraintVerdict::SyntacticPass => "syntactic-pass",
    }
}

pub fn analysis(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let width = r.modules.keys().map(|m| m.len()).max().unwrap_or(6).max(6);
    let _ = writeln!(out, "{:<width$}  deps / internal", "module");
    for (m, v) in &r.modules {
        let _ = writeln!(out, "{m:<width$}  D = {{{}}}", join(&v.deps));
        let _ = writeln!(out, "{:<width$}  L = {{{}}}", "", join(&v.internal));
    }
    let _ = writeln!(out, "interaction: {{{}}}", join(&r.interaction));
    if let Some(c) = &r.constraints {
        let _ = writeln!(out, "constraints:");
        for m in &c.modules {
            let cells: Vec<String> =
                m.results.iter().map(|o| format!("{} {}", o.constraint, verdict(o.verdict))).collect();
            let _ = writeln!(out, "  {} -> {}: {}", m.module, m.abstraction, cells.join(", "));
            for o in m.results.iter().filter(|o| o.verdict == ConstraintVerdict::Fail) {
                for v in &o.violations {
                    let _ = writeln!(out, "    {}: constraint {}: {}", v.location, o.constraint, v.message);
                }
            }
        }
        let _ = writeln!(out, "result: {}", if c.passed() { "constraints hold" } else { "constraints violated" });
    }
    if !r.warnings.is_empty() {
        let _ = writeln!(out, "warnings:");
        for w in &r.warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
    out
}

fn stage_header(out: &mut String) {
    let _ = writeln!(
        out,
        "{:<16} {:<18} {:>10} {:>12} {:>6} {:>10}",
        "stage", "verdict", "states", "transitions", "depth", "time"
    );
}

fn stage_row(out: &mut String, s: &StageStats) {
    let _ = writeln!(
        out,
        "{:<16} {:<18} {:>10} {:>12} {:>6} {:>10}",
        s.name,
        s.verdict,
        s.distinct_states,
        s.transitions,
        s.depth,
        ms(s.elapsed_secs)
    );
}

pub fn compositional(r: &CompositionalReport) -> String {
    let mut out = String::new();
    if let Some(c) = &r.analysis.constraints {
        let ok = c.passed();
        let _ = writeln!(out, "constraints: {}", if ok { "hold" } else { "violated" });
        for (m, o) in c.failures() {
            for v in &o.violations {
                let _ = writeln!(out, "  {m}: {}: constraint {}: {}", v.location, o.constraint, v.message);
            }
        }
    }
    let stats = r.stats();
    if !stats.is_empty() {
        stage_header(&mut out);
        for s in &stats {
            stage_row(&mut out, s);
        }
        let t_comp: f64 = r.modules.iter().map(|m| m.report.elapsed.as_secs_f64()).sum();
        let _ = writeln!(out, "{:<16} {:<18} {:>10} {:>12} {:>6} {:>10}", "T_comp", "", "", "", "", ms(t_comp));
    }
    properties(&mut out, r);
    let _ = writeln!(out, "conclusion: {}", r.conclusion.describe());
    out
}

fn properties(out: &mut String, r: &CompositionalReport) {
    if r.properties.is_empty() {
        let _ = writeln!(out, "note: no invariants declared");
        return;
    }
    let _ = writeln!(out, "properties:");
    for (name, status) in &r.properties {
        let label = serde_json::to_value(status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let _ = writeln!(out, "  {name:<24} {label}");
    }
}

pub fn direct(r: &DirectReport) -> String {
    let mut out = String::new();
    stage_header(&mut out);
    let refine = StageStats {
        name: "S => A".into(),
        distinct_states: r.refinement.distinct_states,
        transitions: r.refinement.transitions,
        depth: r.refinement.depth,
        elapsed_secs: r.refinement.elapsed.as_secs_f64(),
        verdict: r.refinement.verdict.label().into(),
    };
    stage_row(&mut out, &refine);
    stage_row(&mut out, &explore_stats("S", &r.exploration));
    if let Some(v) = &r.exploration.violation {
        let _ = writeln!(out, "invariant {} violated after {} steps", v.invariant, v.trace.len());
    }
    let _ = writeln!(
        out,
        "result: {}",
        if r.passed() {
            "holds"
        } else if r.is_inconclusive() {
            "inconclusive"
        } else {
            "fails"
        }
    );
    out
}

fn explore_stats(name: &str, r: &ExplorationReport) -> StageStats {
    StageStats {
        name: name.into(),
        distinct_states: r.distinct_states,
        transitions: r.transitions,
        depth: r.depth,
        elapsed_secs: r.elapsed.as_secs_f64(),
        verdict: serde_json::to_value(r.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
    }
}

/// One row per compositional check, then T_comp, T_direct and the ratio.
pub fn comparison(comp: &CompositionalReport, direct: &DirectReport, cost: &CostComparison) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:<14} {:>10} {:>10}", "check", "verdict", "states", "time");
    if let Some(a) = &comp.abstract_check {
        let s = explore_stats("A", a);
        let _ = writeln!(out, "{:<16} {:<14} {:>10} {:>10}", "A", s.verdict, s.distinct_states, ms(s.elapsed_secs));
    }
    for (m, s) in comp.modules.iter().zip(&cost.modules) {
        let _ = writeln!(
            out,
            "{:<16} {:<14} {:>10} {:>10}",
            s.name,
            m.report.verdict.label(),
            s.distinct_states,
            ms(s.elapsed_secs)
        );
    }
    let _ = writeln!(out, "{:<16} {:<14} {:>10} {:>10}", "T_comp", "", cost.max_compositional_states, ms(cost.t_comp));
    let _ = writeln!(
        out,
        "{:<16} {:<14} {:>10} {:>10}",
        "T_direct",
        direct.refinement.verdict.label(),
        cost.direct_states,
        ms(cost.t_direct)
    );
    let ratio = |r: Option<f64>| r.map_or("n/a".to_string(), |x| format!("{x:.2}x"));
    let _ = writeln!(out, "{:<16} {:<14} {:>10} {:>10}", "ratio", "", ratio(cost.state_ratio), ratio(cost.ratio));
    properties(&mut out, comp);
    let _ = writeln!(out, "compositional: {}", comp.conclusion.describe());
    let _ = writeln!(
        out,
        "direct: {}",
        if direct.passed() {
            "holds"
        } else if direct.is_inconclusive() {
            "inconclusive"
        } else {
            "fails"
        }
    );
    out
}

pub fn exploration(r: &ExplorationReport, invariants: &[&str]) -> String {
    let mut out = String::new();
    stage_header(&mut out);
    stage_row(&mut out, &explore_stats("S", r));
    if invariants.is_empty() {
        let _ = writeln!(out, "note: no invariants declared");
    } else {
        let _ = writeln!(out, "invariants: {}", invariants.join(", "));
    }
    if let Some(v) = &r.violation {
        let _ = writeln!(out, "invariant {} violated after {} steps", v.invariant, v.trace.len());
    }
    if let Some(b) = r.bound {
        let _ = writeln!(out, "stopped: {b} reached");
    }
    out
}

pub fn replay(target: &str, steps: usize, v: &ReplayVerdict) -> String {
    match v {
        ReplayVerdict::Valid => format!("trace of {target} with {steps} steps: valid\n"),
        ReplayVerdict::Invalid { step, reason } => format!("trace of {target}: invalid at step {step}: {reason}\n"),
    }
}
