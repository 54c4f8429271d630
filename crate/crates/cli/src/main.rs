//! `ipa-check`: analysis, compositional and direct checking from the shell.

mod render;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use ipa_core::analysis::{analyze, blind_writes, check_abstraction_constraints, AnalysisReport};
use ipa_core::composer::{
    build_abstract_spec, build_compositional_spec, compositional_check, direct_check, properties, CostComparison,
};
use ipa_core::explorer::{explore, trace_replay, Bounds, Trace, Verdict, DEFAULT_MAX_STATES};
use ipa_core::generator::{generate, GenConfig};
use ipa_core::kernel::{NamedExpr, Spec};
use ipa_core::parser::{load_spec_with, Diagnostics, Project};
use ipa_core::refinement::RefinementVerdict;

const PASS: u8 = 0;
const FAIL: u8 = 1;
const USAGE: u8 = 2;
const INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "ipa-check", version, about = "Compositional model checking with interaction-preserving abstractions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dependency, interaction and internal variables; abstraction constraints with --manifest.
    Analyze(Target),
    /// Compositional check: constraints, A against the invariants, then C_i ⇒ A per module.
    Check(CheckArgs),
    /// Direct check of S ⇒ A plus exploration of S against the invariants.
    Direct(CheckArgs),
    /// Both routes and their cost comparison.
    Compare(CheckArgs),
    /// Explores a spec and checks its invariants.
    Explore(CheckArgs),
    /// Replays a trace file written by a failing run.
    Replay(ReplayArgs),
    /// Writes seeded random instances (spec, abstractions, manifest).
    Generate(GenerateArgs),
}

#[derive(Args)]
struct Target {
    /// Spec file. Defaults to the spec named by the manifest.
    spec: Option<PathBuf>,
    /// Manifest naming abstractions, action map, refine mapping and invariants.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    target: Target,
    /// Stop after this many distinct states (result: inconclusive).
    #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
    max_states: usize,
    /// Stop after this many BFS levels (result: inconclusive).
    #[arg(long)]
    max_depth: Option<usize>,
    /// Worker threads; 0 uses one per core. Never changes results.
    #[arg(long, env = "IPA_CHECK_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Treat states without successors as errors.
    #[arg(long)]
    deadlock_error: bool,
    /// Where to write the counterexample of a failing run.
    #[arg(long, default_value = "counterexample.json")]
    trace_out: PathBuf,
}

impl CheckArgs {
    fn bounds(&self) -> Bounds {
        Bounds {
            max_states: self.max_states,
            max_depth: self.max_depth,
            deadlock_is_error: self.deadlock_error,
            workers: self.workers,
        }
    }
}

#[derive(Args)]
struct ReplayArgs {
    /// Trace file as written by check, direct or explore.
    trace: PathBuf,
    /// Overrides the spec recorded in the trace file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Overrides the manifest recorded in the trace file.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Which spec the trace belongs to: S, A or C_<Module>.
    #[arg(long)]
    target: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct GenerateArgs {
    /// Seed of the first instance.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of instances, with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    count: u64,
    /// Probability that an instance carries a seeded mutation.
    #[arg(long, default_value_t = GenConfig::default().mutation_rate)]
    mutation_rate: f64,
    /// Directory receiving one `gen-<seed>` subdirectory per instance.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

/// A loaded input: spec alone, or spec plus manifest.
struct Input {
    spec: Spec,
    spec_path: PathBuf,
    project: Option<Project>,
}

fn read_file(p: &Path) -> std::io::Result<String> {
    std::fs::read_to_string(p)
}

fn load(t: &Target) -> Result<Input, Diagnostics> {
    match (&t.manifest, &t.spec) {
        (Some(m), spec) => {
            let p = Project::load(m, spec.as_deref())?;
            Ok(Input { spec: p.spec.clone(), spec_path: p.spec_path.clone(), project: Some(p) })
        }
        (None, Some(s)) => {
            Ok(Input { spec: load_spec_with(s, None, &read_file)?, spec_path: s.clone(), project: None })
        }
        (None, None) => unreachable!("checked by the caller"),
    }
}

fn need_input(t: &Target) -> anyhow::Result<()> {
    if t.spec.is_none() && t.manifest.is_none() {
        return Err(anyhow!("give a spec file, a --manifest, or both"));
    }
    Ok(())
}

fn need_manifest<'a>(input: &'a Input, command: &str) -> anyhow::Result<&'a Project> {
    input.project.as_ref().ok_or_else(|| anyhow!("`{command}` needs --manifest"))
}

/// Rounds every duration to milliseconds so reports differ only in timing
/// digits that are actually measured.
fn round_durations(j: &mut Json) {
    match j {
        Json::Object(m) => {
            for (k, v) in m.iter_mut() {
                if k.ends_with("secs") || k.starts_with("t_") || k == "ratio" {
                    if let Some(x) = v.as_f64() {
                        *v = json!((x * 1000.0).round() / 1000.0);
                        continue;
                    }
                }
                round_durations(v);
            }
        }
        Json::Array(a) => a.iter_mut().for_each(round_durations),
        _ => {}
    }
}

fn emit(output: &Output, table: impl FnOnce() -> String, json: impl FnOnce() -> Json) -> anyhow::Result<()> {
    let text = match output.format {
        Format::Table => table(),
        Format::Json => {
            let mut j = json();
            round_durations(&mut j);
            let mut s = serde_json::to_string_pretty(&j)?;
            s.push('\n');
            s
        }
    };
    match &output.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).context("cannot write to standard output")
        }
    }
}

/// Writes a trace file that `replay` can check without further arguments.
fn write_trace(args: &CheckArgs, input: &Input, target: &str, mut trace: Json) -> anyhow::Result<()> {
    let abs = |p: &Path| std::fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf()).display().to_string();
    trace["target"] = json!(target);
    trace["spec"] = json!(abs(&input.spec_path));
    if let Some(p) = &input.project {
        trace["manifest"] = json!(abs(&p.manifest_path));
    }
    let text = serde_json::to_string_pretty(&trace)? + "\n";
    std::fs::write(&args.trace_out, text).with_context(|| format!("cannot write {}", args.trace_out.display()))?;
    eprintln!("counterexample ({target}) written to {}", args.trace_out.display());
    Ok(())
}

fn cmd_analyze(t: &Target) -> anyhow::Result<u8> {
    need_input(t)?;
    let input = load(t)?;
    let analysis = analyze(&input.spec)?;
    let constraints =
        input.project.as_ref().map(|p| check_abstraction_constraints(&input.spec, &p.manifest, &analysis));
    let code = match &constraints {
        Some(c) if !c.passed() => FAIL,
        _ => PASS,
    };
    let warnings = blind_writes(&input.spec, &analysis);
    for w in &warnings {
        eprintln!("{w}");
    }
    let report = AnalysisReport::new(&analysis, constraints, &warnings);
    emit(&t.output, || render::analysis(&report), || serde_json::to_value(&report).expect("report serializes"))?;
    Ok(code)
}

fn cmd_check(args: &CheckArgs) -> anyhow::Result<u8> {
    need_input(&args.target)?;
    let input = load(&args.target)?;
    let p = need_manifest(&input, "check")?;
    let report = compositional_check(&p.spec, &p.manifest, &args.bounds())?;
    emit(&args.target.output, || render::compositional(&report), || report.to_json())?;
    if report.conclusion.refines() {
        return Ok(PASS);
    }
    if let (Some(a), Some(r)) = (&report.abstract_spec, &report.abstract_check) {
        if let Some(v) = &r.violation {
            write_trace(args, &input, "A", v.trace.to_json(&a.spec))?;
        }
    }
    let failing = report.modules.iter().find_map(|m| match &m.report.verdict {
        RefinementVerdict::Fails(f) => Some((m, f)),
        _ => None,
    });
    if let (Some((m, f)), Some(a)) = (failing, &report.abstract_spec) {
        write_trace(args, &input, &format!("C_{}", m.module), f.to_json(&m.composed.spec, &a.spec))?;
    }
    Ok(if report.is_inconclusive() { INCONCLUSIVE } else { FAIL })
}

fn cmd_direct(args: &CheckArgs) -> anyhow::Result<u8> {
    need_input(&args.target)?;
    let input = load(&args.target)?;
    let p = need_manifest(&input, "direct")?;
    let report = direct_check(&p.spec, &p.manifest, &args.bounds())?;
    emit(&args.target.output, || render::direct(&report), || report.to_json(&p.spec))?;
    if let RefinementVerdict::Fails(f) = &report.refinement.verdict {
        write_trace(args, &input, "S", f.to_json(&p.spec, &report.abstract_spec.spec))?;
    } else if let Some(v) = &report.exploration.violation {
        write_trace(args, &input, "S", v.trace.to_json(&p.spec))?;
    }
    Ok(if report.passed() {
        PASS
    } else if report.is_inconclusive() {
        INCONCLUSIVE
    } else {
        FAIL
    })
}

fn cmd_compare(args: &CheckArgs) -> anyhow::Result<u8> {
    need_input(&args.target)?;
    let input = load(&args.target)?;
    let p = need_manifest(&input, "compare")?;
    let bounds = args.bounds();
    let comp = compositional_check(&p.spec, &p.manifest, &bounds)?;
    let direct = direct_check(&p.spec, &p.manifest, &bounds)?;
    let cost = CostComparison::new(&comp, &direct);
    emit(
        &args.target.output,
        || render::comparison(&comp, &direct, &cost),
        || json!({ "compositional": comp.to_json(), "direct": direct.to_json(&p.spec), "cost": cost }),
    )?;
    Ok(if comp.is_inconclusive() || direct.is_inconclusive() {
        INCONCLUSIVE
    } else if comp.conclusion.refines() && direct.passed() {
        PASS
    } else {
        FAIL
    })
}

fn cmd_explore(args: &CheckArgs) -> anyhow::Result<u8> {
    need_input(&args.target)?;
    let input = load(&args.target)?;
    let props: Vec<NamedExpr> = match &input.project {
        Some(p) => properties(&p.spec, &p.manifest),
        None => input.spec.invariants.clone(),
    };
    let (checked, skipped): (Vec<NamedExpr>, Vec<NamedExpr>) =
        props.into_iter().partition(|p| p.expr.read_set().iter().all(|v| input.spec.var_index(v).is_some()));
    for s in &skipped {
        eprintln!("note: invariant {} mentions variables outside the spec; skipped", s.name);
    }
    let report = explore(&input.spec, &checked, &args.bounds())?;
    let names: Vec<&str> = checked.iter().map(|p| p.name.as_ref()).collect();
    emit(&args.target.output, || render::exploration(&report, &names), || report.to_json(&input.spec))?;
    let evidence = match report.verdict {
        Verdict::InvariantViolated => report.violation.as_ref().map(|v| &v.trace),
        Verdict::DeadlockFound => report.deadlock.as_ref(),
        _ => None,
    };
    if let Some(t) = evidence {
        write_trace(args, &input, "S", t.to_json(&input.spec))?;
    }
    Ok(match report.verdict {
        Verdict::Pass => PASS,
        Verdict::BoundExceeded => INCONCLUSIVE,
        _ => FAIL,
    })
}

fn cmd_replay(args: &ReplayArgs) -> anyhow::Result<u8> {
    let text =
        std::fs::read_to_string(&args.trace).with_context(|| format!("{}: no such file", args.trace.display()))?;
    let j: Json = serde_json::from_str(&text).with_context(|| format!("{} is not JSON", args.trace.display()))?;
    let recorded = |key: &str| j.get(key).and_then(Json::as_str).map(PathBuf::from);
    let target_name = args.target.clone().or_else(|| j.get("target").and_then(Json::as_str).map(String::from));
    let target_name = target_name.unwrap_or_else(|| "S".into());
    let t = Target {
        spec: args.spec.clone().or_else(|| recorded("spec")),
        manifest: args.manifest.clone().or_else(|| recorded("manifest")),
        output: Output { format: args.output.format, out: None },
    };
    need_input(&t)?;
    let input = load(&t)?;
    let spec = match target_name.as_str() {
        "S" => input.spec.clone(),
        other => {
            let p = need_manifest(&input, "replay of a composed trace")?;
            let analysis = analyze(&p.spec)?;
            if other == "A" {
                build_abstract_spec(&p.spec, &p.manifest, &analysis)?.spec
            } else {
                let module = other
                    .strip_prefix("C_")
                    .ok_or_else(|| anyhow!("unknown target `{other}`; use S, A or C_<Module>"))?;
                build_compositional_spec(&p.spec, &p.manifest, &analysis, module)?.spec
            }
        }
    };
    let trace = Trace::from_json(&spec, &j).map_err(|e| anyhow!("{}: {e}", args.trace.display()))?;
    let verdict = trace_replay(&spec, &trace);
    emit(
        &args.output,
        || render::replay(&target_name, trace.len(), &verdict),
        || match &verdict {
            ipa_core::explorer::ReplayVerdict::Valid => {
                json!({ "target": target_name, "steps": trace.len(), "valid": true })
            }
            ipa_core::explorer::ReplayVerdict::Invalid { step, reason } => {
                json!({ "target": target_name, "steps": trace.len(), "valid": false, "step": step, "reason": reason })
            }
        },
    )?;
    Ok(if verdict.is_valid() { PASS } else { FAIL })
}

fn cmd_generate(args: &GenerateArgs) -> anyhow::Result<u8> {
    if !(0.0..=1.0).contains(&args.mutation_rate) {
        return Err(anyhow!("--mutation-rate must lie in [0, 1]"));
    }
    let config = GenConfig { mutation_rate: args.mutation_rate };
    for seed in args.seed..args.seed + args.count {
        let g = generate(seed, &config);
        let dir = args.out.join(format!("gen-{seed}"));
        g.write_to(&dir).with_context(|| format!("cannot write {}", dir.display()))?;
        println!("{}\t{}", dir.display(), g.mutation.name());
    }
    Ok(PASS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(t) => cmd_analyze(t),
        Command::Check(a) => cmd_check(a),
        Command::Direct(a) => cmd_direct(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Explore(a) => cmd_explore(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match e.downcast_ref::<Diagnostics>() {
                Some(d) => eprintln!("{d}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(USAGE)
        }
    }
}
