//! summary.json and file emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Scenario, SCHEMA_VERSION};
use crate::error::{CliError, Result};
use crate::scenarios::{ArtifactKind, Outcome, ScenarioResult};

/// Top-level record written to summary.json.
///
/// Everything except `timestamp` depends only on the configuration and the
/// seed, never on the worker count or the output location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Summary {
    pub schema_version: String,
    pub timestamp: String,
    pub scenario: Scenario,
    pub config: ExperimentConfig,
    pub result: ScenarioResult,
    pub failed_trials: usize,
    pub total_trials: usize,
    /// Files written next to summary.json.
    pub files: Vec<String>,
}

impl Summary {
    pub fn new(cfg: &ExperimentConfig, outcome: &Outcome, figures: bool) -> Self {
        let mut config = cfg.clone();
        config.output_dir = None;
        let mut files: Vec<String> = outcome
            .artifacts
            .iter()
            .filter(|a| figures || a.kind == ArtifactKind::Data)
            .map(|a| a.name.clone())
            .collect();
        files.sort();
        Self {
            schema_version: SCHEMA_VERSION.into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            scenario: cfg.scenario,
            config,
            result: outcome.result.clone(),
            failed_trials: outcome.failed_trials,
            total_trials: outcome.total_trials,
            files,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::io("summary.json", e.into()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::io(path, e.into()))
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Writes summary.json and the outcome's files into `dir`, creating it.
pub fn emit(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome, figures: bool) -> Result<Summary> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let summary = Summary::new(cfg, outcome, figures);
    for a in &outcome.artifacts {
        if figures || a.kind == ArtifactKind::Data {
            write(dir, &a.name, &a.contents)?;
        }
    }
    write(dir, "summary.json", &summary.to_json()?)?;
    Ok(summary)
}
