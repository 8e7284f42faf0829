//! Machine-readable run summary. Every subcommand emits a `report.json` with
//! named checks; the process exit code is 0 iff all of them pass. Wall-clock
//! timing lives only here so the data artifacts stay byte-identical across
//! repeated and multi-threaded runs.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    /// Upper bound the value is compared against, when one applies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub subcommand: String,
    pub version: String,
    pub scenario: String,
    /// Verbatim scenario file contents, so the report is self-contained.
    pub config_echo: String,
    pub seed: u64,
    pub timing_ms: u64,
    pub checks: Vec<CheckResult>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn new(subcommand: &str, scenario: &str, config_echo: &str, seed: u64) -> Self {
        RunReport {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario.to_string(),
            config_echo: config_echo.to_string(),
            seed,
            timing_ms: 0,
            checks: Vec::new(),
            warnings: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    /// Check against an upper bound: passes when `value <= threshold`.
    pub fn bound(&mut self, name: &str, value: f64, threshold: f64) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            value,
            threshold: Some(threshold),
            pass: value.is_finite() && value <= threshold,
        });
    }

    /// Boolean check with an informational value.
    pub fn flag(&mut self, name: &str, value: f64, pass: bool) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            value,
            threshold: None,
            pass,
        });
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn artifact(&mut self, name: &str) {
        self.artifacts.push(name.to_string());
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join("report.json");
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    /// Plain-text mirror used by the algebra subcommand: one
    /// `name=value pass|fail` line per check.
    pub fn write_text(&self, out_dir: &Path, filename: &str) -> Result<()> {
        let mut text = String::new();
        for c in &self.checks {
            let verdict = if c.pass { "pass" } else { "fail" };
            text.push_str(&format!("{}={:.6e} {verdict}\n", c.name, c.value));
        }
        let path = out_dir.join(filename);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
