//! CSV, JSON and timing artifacts.
//!
//! Everything except `timing.json` is a pure function of the config, so
//! reruns produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Version string in `git describe` style, overridable at build time.
pub const VERSION: &str = match option_env!("EKCH_GIT_DESCRIBE") {
    Some(v) => v,
    None => concat!("v", env!("CARGO_PKG_VERSION")),
};

/// One pass/fail check that feeds the exit code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub name: String,
    pub value: Option<f64>,
    /// Human-readable acceptance condition.
    pub limit: String,
    pub passed: bool,
}

impl Audit {
    pub fn new(name: impl Into<String>, value: Option<f64>, limit: impl Into<String>, passed: bool) -> Self {
        Audit { name: name.into(), value, limit: limit.into(), passed }
    }

    pub fn at_most(name: impl Into<String>, value: f64, max: f64) -> Self {
        Audit::new(name, Some(value), format!("<= {max:e}"), value <= max)
    }

    pub fn at_least(name: impl Into<String>, value: f64, min: f64) -> Self {
        Audit::new(name, Some(value), format!(">= {min:e}"), value >= min)
    }

    pub fn within(name: impl Into<String>, value: f64, range: [f64; 2]) -> Self {
        Audit::new(name, Some(value), format!("in [{}, {}]", range[0], range[1]), value >= range[0] && value <= range[1])
    }

    pub fn holds(name: impl Into<String>, passed: bool, limit: impl Into<String>) -> Self {
        Audit::new(name, None, limit, passed)
    }
}

pub fn all_passed(audits: &[Audit]) -> bool {
    audits.iter().all(|a| a.passed)
}

/// JSON document: the result plus the config that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub result: T,
}

impl<T> Document<T> {
    pub fn new(experiment: &str, config: &ExperimentConfig, result: T) -> Self {
        Document { version: VERSION.to_string(), experiment: experiment.to_string(), config: config.clone(), result }
    }
}

/// Plain CSV table; floats use the shortest round-trip representation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Wall-clock seconds per labelled task, kept apart from the deterministic outputs.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timing {
    pub version: String,
    pub entries: Vec<(String, f64)>,
}

impl Timing {
    pub fn new() -> Self {
        Timing { version: VERSION.to_string(), entries: Vec::new() }
    }

    pub fn record(&mut self, label: impl Into<String>, seconds: f64) {
        self.entries.push((label.into(), seconds));
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("timing.json"), self)
    }
}

/// Text rendering of audits for the terminal.
pub fn audit_lines(audits: &[Audit]) -> String {
    let mut s = String::new();
    for a in audits {
        let v = a.value.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
        writeln!(s, "{} {:<40} {:>14}  {}", if a.passed { "PASS" } else { "FAIL" }, a.name, v, a.limit).unwrap();
    }
    s
}

pub fn output_dir(cfg: &ExperimentConfig, cli: Option<&Path>, fallback: &str) -> PathBuf {
    cli.map(Path::to_path_buf).or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out").join(fallback))
}
