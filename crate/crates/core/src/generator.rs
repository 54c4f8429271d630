//! Seeded generator of small modular specs with abstractions, used to
//! cross-validate the compositional route against the direct one.
//!
//! Shape of every generated instance:
//!
//! * one integer domain `0..D` with `D` in {2, 3}, shared by all variables;
//! * 1–2 shared variables `s<n>`, read in a guard of every module, so they are
//!   interaction variables;
//! * 2 or 3 modules `M<i>`, each owning `k<i>` (read and written by its visible
//!   actions) and, when it has internal actions, a scratch variable `t<i>`;
//! * 1–3 actions per module. Visible actions read and write only shared
//!   variables and `k<i>`. Internal actions write only `t<i>`.
//!
//! The abstraction of `M<i>` keeps every visible action verbatim as
//! `Abs_<name>` and maps internal ones to `void`. By construction the
//! constraints hold and every `C_i ⇒ A` check holds.
//!
//! Two mutations produce failing instances:
//!
//! * [`Mutation::Drift`] changes one abstract action (a different right-hand
//!   side, an extra guard conjunct or a dropped update). Constraints still hold;
//!   refinement fails iff the deviation is observable, on both routes alike,
//!   because scratch variables never influence visible behavior.
//! * [`Mutation::Leak`] adds an always-enabled action to one module that
//!   overwrites another module's `k<j>` and maps it to `void`. The syntactic
//!   half of constraint 4 rejects it, and the direct check fails at the first
//!   step because the written value differs from the initial one.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::parser::{Diagnostics, Project};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mutation {
    None,
    Drift,
    Leak,
}

impl Mutation {
    pub fn name(self) -> &'static str {
        match self {
            Mutation::None => "none",
            Mutation::Drift => "drift",
            Mutation::Leak => "leak",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    /// Probability that an instance is mutated at all. Mutated instances are
    /// split evenly between drift and leak.
    pub mutation_rate: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { mutation_rate: 0.5 }
    }
}

/// One generated instance as source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub seed: u64,
    pub mutation: Mutation,
    pub spec: String,
    /// Abstraction file name and contents, in module order.
    pub abstractions: Vec<(String, String)>,
    pub manifest: String,
}

impl Generated {
    /// All files of the instance, manifest first.
    pub fn files(&self) -> Vec<(String, &str)> {
        let mut out =
            vec![("manifest.ipam".to_string(), self.manifest.as_str()), ("spec.ipa".to_string(), self.spec.as_str())];
        out.extend(self.abstractions.iter().map(|(n, t)| (n.clone(), t.as_str())));
        out
    }

    /// Writes the files into `dir` and returns the manifest path.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in self.files() {
            std::fs::write(dir.join(name), text)?;
        }
        Ok(dir.join("manifest.ipam"))
    }

    /// Parses the instance without touching the file system.
    pub fn project(&self) -> Result<Project, Diagnostics> {
        let base = PathBuf::from(format!("gen-{}", self.seed));
        let files: BTreeMap<PathBuf, &str> = self.files().into_iter().map(|(n, t)| (base.join(n), t)).collect();
        let read = |p: &Path| {
            files
                .get(p)
                .map(|t| t.to_string())
                .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::NotFound, "not generated"))
        };
        Project::load_with(&base.join("manifest.ipam"), None, &read)
    }
}

#[derive(Debug, Clone)]
struct Act {
    name: String,
    internal: bool,
    guards: Vec<String>,
    /// Target variable and right-hand side.
    updates: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
struct Module {
    index: usize,
    actions: Vec<Act>,
    scratch: bool,
}

impl Module {
    fn own(&self) -> String {
        format!("k{}", self.index)
    }
    fn tmp(&self) -> String {
        format!("t{}", self.index)
    }
}

struct Gen {
    rng: ChaCha8Rng,
    top: i64,
    shared: Vec<String>,
}

impl Gen {
    fn atom(&mut self, x: &str, others: &[String]) -> String {
        let top = self.top;
        let other = others.iter().filter(|o| o.as_str() != x).collect::<Vec<_>>();
        match self.rng.gen_range(0..5) {
            0 => format!("{x} < {}", self.rng.gen_range(1..=top)),
            1 => format!("{x} > {}", self.rng.gen_range(0..top)),
            2 => format!("{x} = {}", self.rng.gen_range(0..=top)),
            3 if !other.is_empty() => format!("{x} /= {}", other.choose(&mut self.rng).unwrap()),
            4 if !other.is_empty() => format!("{x} <= {}", other.choose(&mut self.rng).unwrap()),
            _ => format!("{x} /= {}", self.rng.gen_range(0..=top)),
        }
    }

    fn rhs(&mut self, target: &str, readable: &[String]) -> String {
        let top = self.top;
        let other = readable.iter().filter(|o| o.as_str() != target).collect::<Vec<_>>();
        match self.rng.gen_range(0..4) {
            0 => self.rng.gen_range(0..=top).to_string(),
            1 if !other.is_empty() => other.choose(&mut self.rng).unwrap().to_string(),
            2 => {
                let u = readable.choose(&mut self.rng).unwrap();
                format!("Min({u} + 1, {top})")
            }
            _ => format!("IF {target} = {top} THEN 0 ELSE {target} + 1"),
        }
    }

    fn visible(&mut self, m: &Module, name: String) -> Act {
        let mut readable = self.shared.clone();
        readable.push(m.own());
        let guards = (0..self.rng.gen_range(1..=2))
            .map(|_| {
                let x = readable.choose(&mut self.rng).unwrap().clone();
                self.atom(&x, &readable)
            })
            .collect();
        let mut targets = readable.clone();
        targets.shuffle(&mut self.rng);
        targets.truncate(self.rng.gen_range(1..=2));
        targets.sort();
        let updates = targets.into_iter().map(|t| (t.clone(), self.rhs(&t, &readable))).collect();
        Act { name, internal: false, guards, updates }
    }

    fn internal(&mut self, m: &Module, name: String) -> Act {
        let t = m.tmp();
        let mut readable = self.shared.clone();
        readable.push(m.own());
        readable.push(t.clone());
        let mut guards = vec![self.atom(&t, &readable)];
        if self.rng.gen_bool(0.3) {
            let x = readable.choose(&mut self.rng).unwrap().clone();
            guards.push(self.atom(&x, &readable));
        }
        let rhs = self.rhs(&t, &readable);
        Act { name, internal: true, guards, updates: vec![(t, rhs)] }
    }
}

fn reads(text: &str, var: &str) -> bool {
    text.split(|c: char| !c.is_ascii_alphanumeric() && c != '_').any(|w| w == var)
}

fn render_action(out: &mut String, name: &str, a: &Act) {
    let _ = writeln!(out, "  action {name}");
    let _ = writeln!(out, "    when {}", a.guards.join(" /\\ "));
    let ups: Vec<String> = a.updates.iter().map(|(v, e)| format!("{v}' = {e}")).collect();
    let _ = writeln!(out, "    then {}", ups.join(", "));
}

fn render_vars(out: &mut String, vars: &[String], top: i64, init: &BTreeMap<String, i64>) {
    out.push_str("\nvars\n");
    for v in vars {
        let _ = writeln!(out, "  {v} : 0..{top}");
    }
    out.push_str("\ninit\n");
    for v in vars {
        let _ = writeln!(out, "  {v} = {}", init[v]);
    }
}

/// Generates the instance for `seed`.
pub fn generate(seed: u64, config: &GenConfig) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = rng.gen_range(2..=3);
    let shared: Vec<String> = (1..=rng.gen_range(1..=2)).map(|n| format!("s{n}")).collect();
    let mutation = if rng.gen_bool(config.mutation_rate) {
        if rng.gen_bool(0.5) {
            Mutation::Drift
        } else {
            Mutation::Leak
        }
    } else {
        Mutation::None
    };
    let mut g = Gen { rng, top, shared };

    let count = g.rng.gen_range(2..=3);
    let mut modules = Vec::new();
    for i in 1..=count {
        let mut m = Module { index: i, actions: Vec::new(), scratch: false };
        let n = g.rng.gen_range(1..=3);
        for k in 0..n {
            let name = format!("A{i}_{k}");
            let act = if k > 0 && g.rng.gen_bool(0.5) {
                m.scratch = true;
                g.internal(&m, name)
            } else {
                g.visible(&m, name)
            };
            m.actions.push(act);
        }
        // Every module guards on every shared variable and on its own `k`.
        let mut need = g.shared.clone();
        need.push(m.own());
        for v in need.clone() {
            if !m.actions.iter().any(|a| !a.internal && a.guards.iter().any(|e| reads(e, &v))) {
                let atom = g.atom(&v, &need);
                let visible: Vec<usize> = (0..m.actions.len()).filter(|&k| !m.actions[k].internal).collect();
                let k = *visible.choose(&mut g.rng).unwrap();
                m.actions[k].guards.push(atom);
            }
        }
        modules.push(m);
    }

    let mut vars: Vec<String> = g.shared.clone();
    for m in &modules {
        vars.push(m.own());
        if m.scratch {
            vars.push(m.tmp());
        }
    }
    let init: BTreeMap<String, i64> = vars.iter().map(|v| (v.clone(), g.rng.gen_range(0..=top))).collect();

    // Abstract actions, before any mutation.
    let mut abstracts: Vec<Vec<Act>> = modules
        .iter()
        .map(|m| {
            m.actions
                .iter()
                .filter(|a| !a.internal)
                .map(|a| Act { name: format!("Abs_{}", a.name), ..a.clone() })
                .collect()
        })
        .collect();

    match mutation {
        Mutation::None => {}
        Mutation::Drift => {
            let mi = g.rng.gen_range(0..modules.len());
            let ai = g.rng.gen_range(0..abstracts[mi].len());
            let mut readable = g.shared.clone();
            readable.push(modules[mi].own());
            let act = &mut abstracts[mi][ai];
            match g.rng.gen_range(0..3) {
                0 if act.updates.len() > 1 => {
                    let k = g.rng.gen_range(0..act.updates.len());
                    act.updates.remove(k);
                }
                1 => {
                    let x = readable.choose(&mut g.rng).unwrap().clone();
                    let atom = g.atom(&x, &readable);
                    act.guards.push(atom);
                }
                _ => {
                    let k = g.rng.gen_range(0..act.updates.len());
                    let target = act.updates[k].0.clone();
                    let old = act.updates[k].1.clone();
                    let mut fresh = old.clone();
                    for _ in 0..16 {
                        fresh = g.rhs(&target, &readable);
                        if fresh != old {
                            break;
                        }
                    }
                    if fresh == old {
                        fresh = if old == "0" { "1".into() } else { "0".into() };
                    }
                    act.updates[k].1 = fresh;
                }
            }
        }
        Mutation::Leak => {
            let i = g.rng.gen_range(0..modules.len());
            let j = (i + 1 + g.rng.gen_range(0..modules.len() - 1)) % modules.len();
            let victim = modules[j].own();
            let value = (init[&victim] + g.rng.gen_range(1..=top)) % (top + 1);
            let act = Act {
                name: format!("Leak{}", modules[i].index),
                internal: true,
                guards: vec!["TRUE".into()],
                updates: vec![(victim, value.to_string())],
            };
            modules[i].actions.push(act);
        }
    }

    let mut spec = format!("\\* generated: seed {seed}, mutation {}\nspec Gen{seed}\n", mutation.name());
    render_vars(&mut spec, &vars, top, &init);
    for m in &modules {
        let _ = write!(spec, "\nmodule M{}\n", m.index);
        for a in &m.actions {
            render_action(&mut spec, &a.name, a);
        }
    }

    let mut manifest = format!("manifest gen_{seed}\nspec \"spec.ipa\"\n");
    let mut files = Vec::new();
    for (m, abs) in modules.iter().zip(&abstracts) {
        let file = format!("abs_m{}.ipa", m.index);
        let _ = writeln!(manifest, "abstraction M{} \"{file}\"", m.index);
        let mut used: Vec<String> = vars
            .iter()
            .filter(|v| {
                abs.iter().any(|a| {
                    a.guards.iter().chain(a.updates.iter().map(|u| &u.1)).any(|e| reads(e, v))
                        || a.updates.iter().any(|u| &u.0 == *v)
                })
            })
            .cloned()
            .collect();
        used.sort_by_key(|v| vars.iter().position(|w| w == v));
        let mut text = format!("spec AbsM{}\n", m.index);
        render_vars(&mut text, &used, top, &init);
        let _ = write!(text, "\nmodule AbsM{}\n", m.index);
        for a in abs {
            render_action(&mut text, &a.name, a);
        }
        files.push((file, text));
    }
    manifest.push('\n');
    for m in &modules {
        for a in &m.actions {
            if a.internal {
                let _ = writeln!(manifest, "map M{}.{} -> void", m.index, a.name);
            } else {
                let _ = writeln!(manifest, "map M{}.{} -> AbsM{}.Abs_{}", m.index, a.name, m.index, a.name);
            }
        }
    }

    Generated { seed, mutation, spec, abstractions: files, manifest }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{analyze, check_abstraction_constraints};

    #[test]
    fn same_seed_same_text() {
        let c = GenConfig::default();
        assert_eq!(generate(7, &c), generate(7, &c));
        assert_ne!(generate(7, &c).spec, generate(8, &c).spec);
    }

    #[test]
    fn instances_parse_and_respect_the_shape() {
        let c = GenConfig::default();
        for seed in 0..60 {
            let g = generate(seed, &c);
            let p = g.project().unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}\n{}", g.spec, g.manifest));
            assert!((2..=3).contains(&p.spec.modules.len()));
            for m in &p.spec.modules {
                let n = m.actions.len() - usize::from(m.actions.iter().any(|a| a.name.starts_with("Leak")));
                assert!((1..=3).contains(&n), "seed {seed}");
            }
            let a = analyze(&p.spec).unwrap();
            let report = check_abstraction_constraints(&p.spec, &p.manifest, &a);
            assert_eq!(report.passed(), g.mutation != Mutation::Leak, "seed {seed}\n{}", g.spec);
            for s in a.interaction.iter() {
                assert!(s.starts_with('s'), "seed {seed}: {s} shared");
            }
        }
    }

    #[test]
    fn every_mutation_occurs() {
        let c = GenConfig::default();
        let kinds: std::collections::BTreeSet<Mutation> = (0..40).map(|s| generate(s, &c).mutation).collect();
        assert_eq!(kinds.len(), 3);
    }
}
