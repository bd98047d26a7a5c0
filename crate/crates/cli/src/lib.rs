//! Experiment runner for self-calibrating qubit tomography.

pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;
pub mod stats;
pub mod svg;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, Scenario};
pub use error::{CliError, Result};
pub use output::Summary;

/// Output directory used when neither the command line nor the config names one.
pub const DEFAULT_OUTPUT_DIR: &str = "tomocal-out";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub figures: bool,
}

/// Applies the command-line overrides, runs the scenario and writes its files.
///
/// Trial failures above 10% are reported as an error after the files are
/// written.
pub fn execute(mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<(PathBuf, Summary)> {
    if opts.seed.is_some() {
        cfg.seed = opts.seed;
    }
    cfg.validate()?;
    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let outcome = scenarios::run(&cfg)?;
    let summary = output::emit(&dir, &cfg, &outcome, opts.figures)?;
    if too_many_failures(outcome.failed_trials, outcome.total_trials) {
        return Err(CliError::TrialFailures {
            failed: outcome.failed_trials,
            total: outcome.total_trials,
        });
    }
    Ok((dir, summary))
}

/// More than 10% of the trials failed.
pub fn too_many_failures(failed: usize, total: usize) -> bool {
    failed * 10 > total
}

/// Loads a config file and checks that it belongs to `expected`, if given.
pub fn load_for(path: &Path, expected: Option<Scenario>) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::load(path)?;
    if let Some(s) = expected {
        if cfg.scenario != s {
            return Err(CliError::Config(format!(
                "{}: scenario {:?} does not match the command",
                path.display(),
                cfg.scenario
            )));
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_threshold_is_strictly_above_ten_percent() {
        assert!(!too_many_failures(0, 25));
        assert!(!too_many_failures(10, 100));
        assert!(too_many_failures(11, 100));
        assert!(too_many_failures(3, 25));
        assert!(!too_many_failures(2, 25));
        assert_eq!(CliError::TrialFailures { failed: 3, total: 25 }.exit_code(), 3);
    }
}
