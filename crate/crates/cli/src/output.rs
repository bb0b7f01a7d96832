//! In-memory artifacts, pass/fail checks and the hashed run manifest.

use std::fs;
use std::path::Path;

use fracrd_core::report::fmt_f64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::RunError;

pub const MANIFEST_NAME: &str = "manifest.json";

/// A report file produced by a run, held in memory until written.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            bytes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Everything a scenario or suite produced, before touching the disk.
#[derive(Clone, Debug, Default)]
pub struct Evaluation {
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
    /// Named scalars for sweep tables, in a fixed order.
    pub summary: Vec<(String, f64)>,
}

impl Evaluation {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.artifacts.push(Artifact::new(name, bytes));
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn note(&mut self, key: impl Into<String>, value: f64) {
        self.summary.push((key.into(), value));
    }

    pub fn status(&self) -> RunStatus {
        if self.checks.iter().all(|c| c.passed) {
            RunStatus::Passed
        } else {
            RunStatus::Violations
        }
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Passed,
    Violations,
}

impl RunStatus {
    /// 0 when every check passed, 2 when violations were recorded.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Passed => 0,
            RunStatus::Violations => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub kind: String,
    pub seed: u64,
    pub status: RunStatus,
    pub checks: Vec<Check>,
    pub artifacts: Vec<ManifestEntry>,
    /// Echo of the input document, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes every artifact under `dir`, then the manifest listing them.
pub fn write_run(
    dir: &Path,
    kind: &str,
    seed: u64,
    eval: &Evaluation,
    config: Option<serde_json::Value>,
) -> Result<RunManifest, RunError> {
    let unwritable = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::OutputUnwritable { path, source }
    };
    fs::create_dir_all(dir).map_err(unwritable(dir))?;
    let mut artifacts = Vec::with_capacity(eval.artifacts.len());
    for a in &eval.artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.bytes).map_err(unwritable(&path))?;
        artifacts.push(ManifestEntry {
            path: a.name.clone(),
            bytes: a.bytes.len(),
            sha256: sha256_hex(&a.bytes),
        });
    }
    let manifest = RunManifest {
        schema_version: crate::config::SCHEMA_VERSION,
        kind: kind.to_string(),
        seed,
        status: eval.status(),
        checks: eval.checks.clone(),
        artifacts,
        config,
    };
    let path = dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest is plain data");
    fs::write(&path, text).map_err(unwritable(&path))?;
    Ok(manifest)
}

/// CSV bytes from a header and stringified rows.
pub fn table<S: AsRef<str>>(header: &[S], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.iter().map(|h| h.as_ref())).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

/// Same as [`fmt_f64`], shortened for row building.
pub fn f(v: f64) -> String {
    fmt_f64(v)
}

pub fn checks_table(checks: &[Check]) -> Vec<u8> {
    table(
        &["check", "passed", "detail"],
        checks.iter().map(|c| vec![c.name.clone(), c.passed.to_string(), c.detail.clone()]),
    )
}
