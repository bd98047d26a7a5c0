//! Repeated random-truth simulation study of additive angle errors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tomocal_core::measurement::ModelVariant;
use tomocal_core::{calibrate_global, effects_from_model, probe_set, DensityMatrix, MeasurementScheme, ProbeKind};

use super::{
    conjugate_all, fix_gauge, gauge_reference, mixed_probes, purity_maps, reconstruct, simulate_all, Artifact,
    Outcome, ScenarioResult, TestEnsemble,
};
use crate::config::{to_config_units, to_internal, unit_names, ExperimentConfig, TruthDistribution};
use crate::error::{CliError, Result};
use crate::stats::{trial_seed, EnsembleStats, Spread};

/// Seed streams of the test-state tomograms start here, after the probes'.
const TEST_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialResult {
    /// Recovered parameters in config units.
    pub recovered: Vec<f64>,
    pub delta_p_before: f64,
    pub delta_p_after: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub test: TestEnsemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialRecord {
    pub trial_index: usize,
    pub trial_seed: u64,
    /// Truth in config units.
    pub truth: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<TrialResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StudyResult {
    pub probe: ProbeKind,
    pub test_probe: ProbeKind,
    pub param_names: Vec<String>,
    pub gauge_reference: [usize; 2],
    pub failed: usize,
    /// Probe-ensemble ΔP with the nominal and the calibrated model.
    pub delta_p_before: Option<Spread>,
    pub delta_p_after: Option<Spread>,
    /// Test-ensemble worst-case infidelity `1 − min F`, nominal model versus
    /// calibrated model with the gauge fixed.
    pub infidelity_before: Option<Spread>,
    pub infidelity_after: Option<Spread>,
    pub trials: Vec<TrialRecord>,
}

struct TrialOutput {
    record: TrialRecord,
    maps: Option<(Vec<DensityMatrix>, Vec<DensityMatrix>)>,
}

struct Setup<'a> {
    cfg: &'a ExperimentConfig,
    variant: ModelVariant,
    scheme: MeasurementScheme,
    probes: tomocal_core::ProbeSet,
    probe_states: Vec<DensityMatrix>,
    tests: tomocal_core::ProbeSet,
    test_states: Vec<DensityMatrix>,
    pair: [usize; 2],
    root_seed: u64,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let variant = ModelVariant::AdditiveAngles;
    let probes = probe_set(cfg.probe_kind())?;
    let tests = probe_set(cfg.test_kind())?;
    let setup = Setup {
        cfg,
        variant,
        scheme: MeasurementScheme::pauli(),
        probe_states: mixed_probes(&probes.states, cfg.probe_purity)?,
        test_states: tests.states.iter().map(DensityMatrix::from_pure).collect(),
        pair: gauge_reference(cfg, &probes)?,
        probes,
        tests,
        root_seed: cfg.seed.unwrap_or(0),
    };
    let n = cfg.trial_count();
    let outputs: Vec<TrialOutput> = (0..n).into_par_iter().map(|i| run_trial(&setup, i)).collect();

    let ok: Vec<&TrialResult> = outputs.iter().filter_map(|o| o.record.result.as_ref()).collect();
    let failed = n - ok.len();
    let collect = |f: &dyn Fn(&TrialResult) -> f64| -> Option<Spread> {
        Spread::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>())
    };
    let result = StudyResult {
        probe: setup.probes.kind,
        test_probe: setup.tests.kind,
        param_names: unit_names(variant),
        gauge_reference: setup.pair,
        failed,
        delta_p_before: collect(&|r| r.delta_p_before),
        delta_p_after: collect(&|r| r.delta_p_after),
        infidelity_before: collect(&|r| r.test.before.infidelity()),
        infidelity_after: collect(&|r| r.test.after.infidelity()),
        trials: outputs.iter().map(|o| o.record.clone()).collect(),
    };

    let mut artifacts = vec![Artifact::data("trials.csv", trials_csv(&result)?)];
    if let Some(k) = median_trial(&result) {
        if let Some((before, after)) = &outputs[k].maps {
            artifacts.extend(purity_maps(
                "purity",
                &format!("Test states of trial {k}"),
                before,
                after,
                &setup.tests.states,
            ));
        }
    }
    Ok(Outcome {
        result: ScenarioResult::Study(result),
        artifacts,
        failed_trials: failed,
        total_trials: n,
    })
}

/// Successful trial with the median post-calibration ΔP (lower middle on ties).
fn median_trial(result: &StudyResult) -> Option<usize> {
    let mut ok: Vec<(f64, usize)> = result
        .trials
        .iter()
        .filter_map(|t| t.result.as_ref().map(|r| (r.delta_p_after, t.trial_index)))
        .collect();
    if ok.is_empty() {
        return None;
    }
    ok.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Some(ok[(ok.len() - 1) / 2].1)
}

fn draw_truth(setup: &Setup, seed: u64) -> Result<Vec<f64>> {
    if let Some(t) = setup.cfg.fixed_truth() {
        return Ok(t);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match setup.cfg.truth_distribution {
        Some(TruthDistribution::Normal { sigma_deg }) => {
            let normal = Normal::new(0.0, sigma_deg).map_err(|e| CliError::Config(e.to_string()))?;
            Ok((0..setup.variant.param_count()).map(|_| normal.sample(&mut rng)).collect())
        }
        None => unreachable!("validated: fixed truth or a distribution"),
    }
}

fn run_trial(setup: &Setup, index: usize) -> TrialOutput {
    let seed = trial_seed(setup.root_seed, index);
    let truth = draw_truth(setup, seed);
    let truth_cfg = truth.as_ref().map(|t| t.clone()).unwrap_or_default();
    let outcome = truth.and_then(|t| trial_body(setup, seed, &t));
    let (result, maps, error) = match outcome {
        Ok((r, maps)) => (Some(r), Some(maps), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    TrialOutput {
        record: TrialRecord {
            trial_index: index,
            trial_seed: seed,
            truth: truth_cfg,
            result,
            error,
        },
        maps,
    }
}

#[allow(clippy::type_complexity)]
fn trial_body(setup: &Setup, seed: u64, truth_cfg: &[f64]) -> Result<(TrialResult, (Vec<DensityMatrix>, Vec<DensityMatrix>))> {
    let cfg = setup.cfg;
    let truth = setup.variant.with_params(&to_internal(setup.variant, truth_cfg))?;
    let nominal = setup.variant.with_params(&to_internal(setup.variant, &cfg.nominal()))?;
    let true_effects = effects_from_model(&truth, &setup.scheme)?;
    let tomos = simulate_all(&setup.probe_states, &true_effects, cfg.shots, seed, 0)?;

    let opt = cfg.optimizer_section().to_core(setup.variant, seed);
    let report = calibrate_global(&tomos, &setup.scheme, &nominal, &opt)?;

    let nominal_effects = effects_from_model(&nominal, &setup.scheme)?;
    let cal_effects = effects_from_model(&report.optimal_params, &setup.scheme)?;
    let probe_recon = reconstruct(&tomos, &cal_effects)?;
    let gauge = fix_gauge(&probe_recon, &setup.probes.states, setup.pair)?;

    let test_tomos = simulate_all(&setup.test_states, &true_effects, cfg.shots, seed, TEST_STREAM)?;
    let before = reconstruct(&test_tomos, &nominal_effects)?;
    let raw = reconstruct(&test_tomos, &cal_effects)?;
    let after = conjugate_all(&raw, &gauge)?;
    let targets = &setup.tests.states;
    let test = TestEnsemble {
        before: EnsembleStats::of(&before, targets),
        after_raw: EnsembleStats::of(&raw, targets),
        after: EnsembleStats::of(&after, targets),
    };
    Ok((
        TrialResult {
            recovered: to_config_units(setup.variant, &report.optimal_params.params()),
            delta_p_before: report.cost_before,
            delta_p_after: report.cost_after,
            evaluations: report.evaluations,
            converged: report.converged,
            test,
        },
        (before, after),
    ))
}

/// One row per trial; failed trials keep their truth and leave the rest empty.
pub fn trials_csv(result: &StudyResult) -> Result<String> {
    use super::{csv_err, finish_csv};
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    let mut header: Vec<String> = vec!["trial_index".into(), "trial_seed".into(), "status".into()];
    header.extend(result.param_names.iter().map(|n| format!("truth_{n}")));
    header.extend(result.param_names.iter().map(|n| format!("recovered_{n}")));
    for h in [
        "delta_p_before",
        "delta_p_after",
        "evaluations",
        "converged",
        "test_before_min_fidelity",
        "test_before_mean_fidelity",
        "test_before_min_purity",
        "test_before_mean_purity",
        "test_after_raw_min_fidelity",
        "test_after_raw_mean_fidelity",
        "test_after_raw_min_purity",
        "test_after_raw_mean_purity",
        "test_after_min_fidelity",
        "test_after_mean_fidelity",
        "test_after_min_purity",
        "test_after_mean_purity",
    ] {
        header.push(h.into());
    }
    w.write_record(&header).map_err(csv_err)?;
    let width = header.len();
    for t in &result.trials {
        let mut row = vec![
            t.trial_index.to_string(),
            t.trial_seed.to_string(),
            if t.result.is_some() { "ok".into() } else { "failed".into() },
        ];
        row.extend(t.truth.iter().map(|v| v.to_string()));
        if let Some(r) = &t.result {
            row.extend(r.recovered.iter().map(|v| v.to_string()));
            row.push(r.delta_p_before.to_string());
            row.push(r.delta_p_after.to_string());
            row.push(r.evaluations.to_string());
            row.push(r.converged.to_string());
            for s in [&r.test.before, &r.test.after_raw, &r.test.after] {
                for v in [s.min_fidelity, s.mean_fidelity, s.min_purity, s.mean_purity] {
                    row.push(v.to_string());
                }
            }
        }
        row.resize(width, String::new());
        w.write_record(&row).map_err(csv_err)?;
    }
    finish_csv(w)
}
