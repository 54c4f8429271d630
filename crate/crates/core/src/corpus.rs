//! The fixture corpus: specs, manifests and their frozen expectations.
//!
//! Fixtures live in `corpus/<id>/` at the workspace root (override with
//! `IPA_CORPUS`). Each holds `spec.ipa`, `expected.json` and, for compositional
//! fixtures, `manifest.ipam` plus the abstraction files it names.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::kernel::Spec;
use crate::parser::{parse_spec, Diagnostics, Project};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("unknown fixture `{id}`; available: {}", available.join(", "))]
    Unknown { id: String, available: Vec<String> },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed {path}: {source}")]
    Expected { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Parse(#[from] Diagnostics),
}

/// Golden dependency analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisGolden {
    pub interaction: Vec<String>,
    pub modules: BTreeMap<String, ModuleGolden>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleGolden {
    pub deps: Vec<String>,
    pub internal: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageGolden {
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinct_states: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectGolden {
    /// `holds` or `fails` for `S ⇒ A`.
    pub refinement: String,
    /// Explorer verdict of S against the property list.
    pub exploration: String,
    pub distinct_states: u64,
}

/// Machine-readable expectations of one fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub description: String,
    /// How the numbers below were obtained.
    pub provenance: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisGolden>,
    /// Module name to the four constraint verdicts in order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<BTreeMap<String, Vec<String>>>,
    /// Stage name (`A`, `C_<Module>`) to verdict and frozen count.
    #[serde(default)]
    pub stages: BTreeMap<String, StageGolden>,
    /// `refines` or `blocked`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conclusion: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocked_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_trace_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct: Option<DirectGolden>,
    /// Plain exploration of the spec, for fixtures without a manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explore: Option<StageGolden>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub id: String,
    pub dir: PathBuf,
    pub spec_path: PathBuf,
    pub manifest_path: Option<PathBuf>,
    pub expected: Expected,
}

impl Fixture {
    pub fn spec(&self) -> Result<Spec, CorpusError> {
        let text = read(&self.spec_path)?;
        Ok(parse_spec(&text, &self.spec_path.display().to_string())?)
    }

    /// Spec, manifest and abstractions. `None` for spec-only fixtures.
    pub fn project(&self) -> Result<Option<Project>, CorpusError> {
        match &self.manifest_path {
            None => Ok(None),
            Some(m) => Ok(Some(Project::load(m, None)?)),
        }
    }

    /// Every `.ipa` and `.ipam` file of the fixture, sorted.
    pub fn source_files(&self) -> Result<Vec<PathBuf>, CorpusError> {
        let entries =
            std::fs::read_dir(&self.dir).map_err(|source| CorpusError::Io { path: self.dir.clone(), source })?;
        let mut out: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("ipa" | "ipam")))
            .collect();
        out.sort();
        Ok(out)
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

pub fn corpus_root() -> PathBuf {
    match std::env::var_os("IPA_CORPUS") {
        Some(p) => PathBuf::from(p),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus"),
    }
}

/// Fixture identifiers in sorted order.
pub fn fixture_ids() -> Vec<String> {
    let Ok(entries) = std::fs::read_dir(corpus_root()) else { return Vec::new() };
    let mut ids: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join("expected.json").is_file())
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    ids.sort();
    ids
}

pub fn load_fixture(id: &str) -> Result<Fixture, CorpusError> {
    let ids = fixture_ids();
    if !ids.iter().any(|i| i == id) {
        return Err(CorpusError::Unknown { id: id.to_string(), available: ids });
    }
    let dir = corpus_root().join(id);
    let manifest = dir.join("manifest.ipam");
    Ok(Fixture {
        id: id.to_string(),
        spec_path: dir.join("spec.ipa"),
        manifest_path: manifest.is_file().then_some(manifest),
        expected: expected_results(id)?,
        dir,
    })
}

pub fn expected_results(id: &str) -> Result<Expected, CorpusError> {
    let path = corpus_root().join(id).join("expected.json");
    if !path.is_file() {
        return Err(CorpusError::Unknown { id: id.to_string(), available: fixture_ids() });
    }
    let text = read(&path)?;
    serde_json::from_str(&text).map_err(|source| CorpusError::Expected { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fixture_lists_the_available_ones() {
        let err = load_fixture("no-such-fixture").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("raft3"), "{msg}");
        assert!(msg.contains("coordinator-toy"), "{msg}");
    }

    #[test]
    fn every_fixture_parses() {
        let ids = fixture_ids();
        assert!(ids.len() >= 8, "{ids:?}");
        for id in ids {
            let f = load_fixture(&id).unwrap();
            f.spec().unwrap();
            f.project().unwrap_or_else(|e| panic!("{id}: {e}"));
        }
    }

    #[test]
    fn raft_expectations() {
        let e = expected_results("raft3").unwrap();
        assert_eq!(e.conclusion.as_deref(), Some("refines"));
        assert_eq!(e.parameters["servers"], 3);
        let bug = expected_results("raft3-bug-quorum").unwrap();
        assert_eq!(bug.blocked_at.as_deref(), Some("C_Vote"));
        assert!(bug.max_trace_len.unwrap() <= 12);
        let micro = expected_results("micro-fixpoint-1").unwrap();
        assert_eq!(micro.analysis.unwrap().modules["M"].deps, ["x", "z"]);
    }
}
