//! Waveplate retardance calibration of the projection and preparation stages.
//!
//! Probe states are prepared by the preparation plates and sent through an
//! extra quarter-wave plate before the projection plates. The reversed
//! stage prepares the six Pauli states and projects them onto the probe
//! states. The verification stage removes the extra plate, prepares a test
//! ensemble and compares the nominal settings with settings re-solved for the
//! recovered retardances.

use serde::{Deserialize, Serialize};
use tomocal_core::calibration::LocalConfig;
use tomocal_core::measurement::{
    ideal_prep_angles, preparation_unitary, projection_unitary, solve_waveplate_angles, ModelVariant, WaveplateRole,
    WaveplateSetting,
};
use tomocal_core::optim::Bounds;
use tomocal_core::{
    calibrate_local, effects_from_model, probe_set, reversed_calibration, waveplate_unitary, DensityMatrix,
    ErrorModel, MeasurementScheme, ProbeKind, PureState, C64,
};

use super::{
    mixed_probes, projected_state, shrink, purity_maps, reconstruct, simulate_all, trace_csv, Artifact, CalibrationResult,
    Outcome, ScenarioResult,
};
use crate::config::{to_internal, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::stats::EnsembleStats;

/// Seed stream offsets of the three tomogram sets.
const REVERSED_STREAM: u64 = 1 << 32;
const VERIFY_STREAM: u64 = 2 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Verification {
    pub test_probe: ProbeKind,
    /// Nominal settings, reconstruction assuming ideal plates.
    pub nominal: EnsembleStats,
    /// Nominal settings, reconstruction with the recovered retardances.
    pub corrected_reconstruction: EnsembleStats,
    /// Settings re-solved for the recovered retardances.
    pub corrected_settings: EnsembleStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WaveplateResult {
    pub measurement: CalibrationResult,
    pub preparation: CalibrationResult,
    pub verification: Verification,
}

struct Plates {
    variant: ModelVariant,
    measurement_truth: ErrorModel,
    preparation_truth: ErrorModel,
    nominal: ErrorModel,
    central: Option<tomocal_core::ComplexMat2>,
    local: LocalConfig,
}

fn dev(m: &ErrorModel) -> (f64, f64) {
    let p = m.params();
    (p[0], p[1])
}

impl Plates {
    fn new(cfg: &ExperimentConfig, measurement_truth_cfg: &[f64], preparation_truth_cfg: &[f64]) -> Result<Self> {
        let variant = ModelVariant::WaveplateRetardance;
        let section = cfg.waveplate.clone().unwrap_or_default();
        let central = section
            .central_qwp_deg
            .map(|a| waveplate_unitary(a.to_radians(), std::f64::consts::FRAC_PI_2))
            .transpose()?;
        let opt = cfg.optimizer_section();
        let bounds = if opt.lower_bound.is_empty() {
            None
        } else {
            Some(Bounds::new(
                to_internal(variant, &opt.lower_bound),
                to_internal(variant, &opt.upper_bound),
            )?)
        };
        Ok(Self {
            variant,
            measurement_truth: variant.with_params(&to_internal(variant, measurement_truth_cfg))?,
            preparation_truth: variant.with_params(&to_internal(variant, preparation_truth_cfg))?,
            nominal: variant.with_params(&to_internal(variant, &cfg.nominal()))?,
            central,
            local: LocalConfig {
                bounds,
                ..Default::default()
            },
        })
    }

    /// `|0⟩` sent through the preparation plates set for `target` assuming
    /// ideal plates, with the true preparation retardances.
    fn prepared(&self, target: &PureState) -> Result<PureState> {
        let (theta, phi) = target.bloch().angles();
        let (x, y) = ideal_prep_angles(theta, phi)?;
        let u = preparation_unitary(&WaveplateSetting::new(x, y, WaveplateRole::Preparation), dev(&self.preparation_truth))?;
        let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        PureState::normalized(u.apply(zero)).map_err(CliError::from)
    }

    /// State selected by the projection plates set for `target` assuming
    /// ideal plates, with the true projection retardances.
    fn projected(&self, target: &PureState) -> Result<PureState> {
        let (x, y) = solve_waveplate_angles(target, WaveplateRole::Projection, (0.0, 0.0))?;
        projected_state(&projection_unitary(
            &WaveplateSetting::new(x, y, WaveplateRole::Projection),
            dev(&self.measurement_truth),
        )?)
    }

    fn through_central(&self, s: PureState) -> Result<PureState> {
        match &self.central {
            Some(q) => s.evolved(q).map_err(CliError::from),
            None => Ok(s),
        }
    }

    fn through_central_backwards(&self, s: PureState) -> Result<PureState> {
        match &self.central {
            Some(q) => s.evolved(&q.adjoint()).map_err(CliError::from),
            None => Ok(s),
        }
    }
}

/// Projection-stage calibration from the probe tomograms.
fn measurement_stage(cfg: &ExperimentConfig, plates: &Plates) -> Result<(CalibrationResult, Vec<Artifact>)> {
    let kind = cfg.probe_kind();
    let probes = probe_set(kind)?;
    let states: Vec<PureState> = probes
        .states
        .iter()
        .map(|t| plates.prepared(t).and_then(|s| plates.through_central(s)))
        .collect::<Result<_>>()?;
    let rhos = mixed_probes(&states, cfg.probe_purity)?;
    let scheme = MeasurementScheme::Waveplate(WaveplateSetting::pauli_projection());
    let tomos = simulate_all(
        &rhos,
        &effects_from_model(&plates.measurement_truth, &scheme)?,
        cfg.shots,
        cfg.seed.unwrap_or(0),
        0,
    )?;
    let report = calibrate_local(&tomos, &scheme, &plates.nominal, &plates.local)?;
    let before = reconstruct(&tomos, &effects_from_model(&plates.nominal, &scheme)?)?;
    let after = reconstruct(&tomos, &effects_from_model(&report.optimal_params, &scheme)?)?;
    let result = CalibrationResult::from_report(kind, &plates.measurement_truth, &plates.nominal, &report, &before, &after)?;
    let mut artifacts = vec![Artifact::data("measurement_trace.csv", trace_csv(&report.cost_trace)?)];
    artifacts.extend(purity_maps("measurement_probes", "Probe states", &before, &after, &[]));
    Ok((result, artifacts))
}

/// Preparation-stage calibration: Pauli states prepared by the preparation
/// plates, projected onto the probe states.
fn preparation_stage(cfg: &ExperimentConfig, plates: &Plates) -> Result<(CalibrationResult, Vec<Artifact>)> {
    let kind = cfg.probe_kind();
    let probes = probe_set(kind)?;
    // projecting onto |π⟩ behind the extra plate Q selects Q†|π⟩ before it
    let states: Vec<PureState> = probes
        .states
        .iter()
        .map(|t| plates.projected(t).and_then(|s| plates.through_central_backwards(s)))
        .collect::<Result<_>>()?;
    let rhos = mixed_probes(&states, cfg.probe_purity)?;
    let scheme = MeasurementScheme::Waveplate(WaveplateSetting::pauli_preparation());
    let tomos = simulate_all(
        &rhos,
        &effects_from_model(&plates.preparation_truth, &scheme)?,
        cfg.shots,
        cfg.seed.unwrap_or(0),
        REVERSED_STREAM,
    )?;
    let report = reversed_calibration(&tomos, &scheme, &plates.nominal, &plates.local)?;
    let before = reconstruct(&tomos, &effects_from_model(&plates.nominal, &scheme)?)?;
    let after = reconstruct(&tomos, &effects_from_model(&report.optimal_params, &scheme)?)?;
    let result = CalibrationResult::from_report(kind, &plates.preparation_truth, &plates.nominal, &report, &before, &after)?;
    let mut artifacts = vec![Artifact::data("preparation_trace.csv", trace_csv(&report.cost_trace)?)];
    artifacts.extend(purity_maps("preparation_probes", "Reversed probes", &before, &after, &[]));
    Ok((result, artifacts))
}

/// Test ensemble without the extra plate, before and after correction.
fn verification(
    cfg: &ExperimentConfig,
    plates: &Plates,
    measurement: &ErrorModel,
    preparation: &ErrorModel,
) -> Result<(Verification, Vec<Artifact>)> {
    let tests = probe_set(cfg.test_kind())?;
    let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let seed = cfg.seed.unwrap_or(0);
    let true_prep = dev(&plates.preparation_truth);
    let true_meas = dev(&plates.measurement_truth);

    let nominal_settings = WaveplateSetting::pauli_projection();
    let corrected_settings = nominal_settings
        .iter()
        .map(|s| {
            let target = projected_state(&projection_unitary(s, (0.0, 0.0))?)?;
            let (x, y) = solve_waveplate_angles(&target, WaveplateRole::Projection, dev(measurement))?;
            Ok(WaveplateSetting::new(x, y, WaveplateRole::Projection))
        })
        .collect::<Result<Vec<_>>>()?;

    let prepare = |target: &PureState, assumed: (f64, f64)| -> Result<DensityMatrix> {
        let (x, y) = solve_waveplate_angles(target, WaveplateRole::Preparation, assumed)?;
        let u = preparation_unitary(&WaveplateSetting::new(x, y, WaveplateRole::Preparation), true_prep)?;
        Ok(DensityMatrix::from_pure(&PureState::normalized(u.apply(zero))?))
    };
    let nominal_states: Vec<DensityMatrix> = tests.states.iter().map(|t| prepare(t, (0.0, 0.0))).collect::<Result<_>>()?;
    let corrected_states: Vec<DensityMatrix> =
        tests.states.iter().map(|t| prepare(t, dev(preparation))).collect::<Result<_>>()?;
    let nominal_states = shrink(&nominal_states, cfg.probe_purity)?;
    let corrected_states = shrink(&corrected_states, cfg.probe_purity)?;

    let nominal_scheme = MeasurementScheme::Waveplate(nominal_settings);
    let corrected_scheme = MeasurementScheme::Waveplate(corrected_settings);
    let truth_of = |d: (f64, f64)| plates.variant.with_params(&[d.0, d.1]);
    let tomos_nominal = simulate_all(
        &nominal_states,
        &effects_from_model(&truth_of(true_meas)?, &nominal_scheme)?,
        cfg.shots,
        seed,
        VERIFY_STREAM,
    )?;
    let tomos_corrected = simulate_all(
        &corrected_states,
        &effects_from_model(&truth_of(true_meas)?, &corrected_scheme)?,
        cfg.shots,
        seed,
        VERIFY_STREAM + (1 << 31),
    )?;
    let rec_nominal = reconstruct(&tomos_nominal, &effects_from_model(&plates.nominal, &nominal_scheme)?)?;
    let rec_reconstruction = reconstruct(&tomos_nominal, &effects_from_model(measurement, &nominal_scheme)?)?;
    let rec_corrected = reconstruct(&tomos_corrected, &effects_from_model(measurement, &corrected_scheme)?)?;
    let v = Verification {
        test_probe: tests.kind,
        nominal: EnsembleStats::of(&rec_nominal, &tests.states),
        corrected_reconstruction: EnsembleStats::of(&rec_reconstruction, &tests.states),
        corrected_settings: EnsembleStats::of(&rec_corrected, &tests.states),
    };
    let artifacts = purity_maps("purity", "Test states", &rec_nominal, &rec_corrected, &tests.states);
    Ok((v, artifacts))
}

pub fn run_forward(cfg: &ExperimentConfig) -> Result<Outcome> {
    let section = cfg.waveplate.clone().unwrap_or_default();
    let truth = cfg.fixed_truth().expect("waveplate truth is fixed");
    let plates = Plates::new(cfg, &truth, &section.preparation_truth_deg)?;
    let (measurement, mut artifacts) = measurement_stage(cfg, &plates)?;
    let (preparation, more) = preparation_stage(cfg, &plates)?;
    artifacts.extend(more);
    let recovered = |r: &CalibrationResult| plates.variant.with_params(&to_internal(plates.variant, &r.recovered));
    let (verification, more) = verification(cfg, &plates, &recovered(&measurement)?, &recovered(&preparation)?)?;
    artifacts.extend(more);
    let result = WaveplateResult {
        measurement,
        preparation,
        verification,
    };
    Ok(Outcome::single(ScenarioResult::Waveplate(result), artifacts))
}

pub fn run_reversed(cfg: &ExperimentConfig) -> Result<Outcome> {
    let truth = cfg.fixed_truth().expect("waveplate truth is fixed");
    let section = cfg.waveplate.clone().unwrap_or_default();
    let plates = Plates::new(cfg, &section.projection_truth_deg, &truth)?;
    let (result, artifacts) = preparation_stage(cfg, &plates)?;
    Ok(Outcome::single(ScenarioResult::Calibration(result), artifacts))
}
