//! Experiment scenarios. Each one computes its result and the files to emit;
//! writing them is left to [`crate::output`].

mod calibrate;
mod landscape;
mod polarimeter;
mod study;
mod waveplate;

pub use calibrate::{CalibrationResult, ChipDetails};
pub use landscape::{LandscapeEntry, LandscapeResult};
pub use polarimeter::{PolarimeterProbe, PolarimeterResult};
pub use study::{StudyResult, TrialRecord, TrialResult};
pub use waveplate::{Verification, WaveplateResult};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tomocal_core::calibration::purity_modulation;
use tomocal_core::{
    gauge_unitary, maxlik, purity, simulate_tomogram, BlochVector, ComplexMat2, DensityMatrix, Effect, MaxLikOptions,
    ProbeSet, PureState, Tomogram,
};

use crate::config::{ExperimentConfig, Scenario};
use crate::error::{CliError, Result};
use crate::stats::{derive_seed, EnsembleStats};
use crate::svg::{self, ColorScale, MapPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ScenarioResult {
    Study(StudyResult),
    Calibration(CalibrationResult),
    Waveplate(WaveplateResult),
    Landscape(LandscapeResult),
    Polarimeter(PolarimeterResult),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactKind {
    Data,
    Figure,
}

/// A file to be written into the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub kind: ArtifactKind,
    pub contents: String,
}

impl Artifact {
    pub fn data(name: &str, contents: String) -> Self {
        Self {
            name: name.into(),
            kind: ArtifactKind::Data,
            contents,
        }
    }

    pub fn figure(name: &str, contents: String) -> Self {
        Self {
            name: name.into(),
            kind: ArtifactKind::Figure,
            contents,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub result: ScenarioResult,
    pub artifacts: Vec<Artifact>,
    pub failed_trials: usize,
    pub total_trials: usize,
}

impl Outcome {
    fn single(result: ScenarioResult, artifacts: Vec<Artifact>) -> Self {
        Self {
            result,
            artifacts,
            failed_trials: 0,
            total_trials: 1,
        }
    }
}

/// Runs the scenario named in `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.scenario {
        Scenario::AdditiveStudy => study::run(cfg),
        Scenario::Multiplicative => calibrate::run_multiplicative(cfg),
        Scenario::Chip => calibrate::run_chip(cfg),
        Scenario::Waveplate => waveplate::run_forward(cfg),
        Scenario::ReversedWaveplate => waveplate::run_reversed(cfg),
        Scenario::Landscape => landscape::run(cfg),
        Scenario::Polarimeter => polarimeter::run(cfg),
    }
}

/// Probe states with every Bloch vector shrunk to the requested purity.
pub(crate) fn mixed_probes(states: &[PureState], probe_purity: Option<f64>) -> Result<Vec<DensityMatrix>> {
    let pure: Vec<DensityMatrix> = states.iter().map(DensityMatrix::from_pure).collect();
    shrink(&pure, probe_purity)
}

/// Shrinks every Bloch vector so that pure states reach the requested purity.
pub(crate) fn shrink(states: &[DensityMatrix], probe_purity: Option<f64>) -> Result<Vec<DensityMatrix>> {
    let r = (2.0 * probe_purity.unwrap_or(1.0) - 1.0).sqrt();
    states
        .iter()
        .map(|s| DensityMatrix::from_bloch(s.bloch().scaled(r)).map_err(CliError::from))
        .collect()
}

/// Noiseless tomograms, or binomially sampled ones with per-state seeds
/// derived from `seed`.
pub(crate) fn simulate_all(
    states: &[DensityMatrix],
    effects: &[Effect],
    shots: Option<u64>,
    seed: u64,
    stream_offset: u64,
) -> Result<Vec<Tomogram>> {
    states
        .iter()
        .enumerate()
        .map(|(k, rho)| {
            let s = shots.map(|_| derive_seed(seed, stream_offset + k as u64));
            simulate_tomogram(rho, effects, shots, s).map_err(CliError::from)
        })
        .collect()
}

pub(crate) fn reconstruct(tomograms: &[Tomogram], effects: &[Effect]) -> Result<Vec<DensityMatrix>> {
    tomograms
        .par_iter()
        .map(|t| maxlik(t, effects, &MaxLikOptions::default()).map(|r| r.state))
        .collect::<tomocal_core::Result<Vec<_>>>()
        .map_err(CliError::from)
}

pub(crate) fn min_purity(states: &[DensityMatrix]) -> f64 {
    states.iter().map(purity).fold(f64::INFINITY, f64::min)
}

pub(crate) fn delta_p(states: &[DensityMatrix]) -> Result<f64> {
    purity_modulation(states).map_err(CliError::from)
}

/// Gauge reference probes: the configured pair, or the probes nearest the
/// equator points at longitude 0° and 60°.
pub(crate) fn gauge_reference(cfg: &ExperimentConfig, probes: &ProbeSet) -> Result<[usize; 2]> {
    if let Some(pair) = cfg.gauge_reference {
        return Ok(pair);
    }
    let targets = [BlochVector::from_angles(FRAC_PI_2, 0.0), BlochVector::from_angles(FRAC_PI_2, FRAC_PI_3)];
    let vectors = probes.bloch_vectors();
    let nearest = |t: &BlochVector, skip: Option<usize>| {
        (0..vectors.len())
            .filter(|&i| Some(i) != skip)
            .max_by(|&a, &b| vectors[a].dot(t).total_cmp(&vectors[b].dot(t)).then(b.cmp(&a)))
    };
    let a = nearest(&targets[0], None).ok_or_else(|| CliError::Config("empty probe set".into()))?;
    let b = nearest(&targets[1], Some(a)).ok_or_else(|| CliError::Config("gauge reference needs two probes".into()))?;
    Ok([a, b])
}

/// Gauge unitary from the reconstructions of the two reference probes.
pub(crate) fn fix_gauge(recon: &[DensityMatrix], ideal: &[PureState], pair: [usize; 2]) -> Result<ComplexMat2> {
    gauge_unitary([&recon[pair[0]], &recon[pair[1]]], [&ideal[pair[0]], &ideal[pair[1]]]).map_err(CliError::from)
}

pub(crate) fn conjugate_all(states: &[DensityMatrix], u: &ComplexMat2) -> Result<Vec<DensityMatrix>> {
    states
        .iter()
        .map(|r| r.conjugated_by(u).map_err(CliError::from))
        .collect()
}

/// Ensemble statistics of the test states before calibration, after it, and
/// after it with the gauge fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestEnsemble {
    pub before: EnsembleStats,
    pub after_raw: EnsembleStats,
    pub after: EnsembleStats,
}

/// Map points placed at the reconstructed directions, colored by purity.
pub(crate) fn purity_points(states: &[DensityMatrix]) -> Vec<MapPoint> {
    states
        .iter()
        .map(|r| {
            let (theta, phi) = r.bloch().angles();
            MapPoint {
                theta,
                phi,
                value: purity(r),
            }
        })
        .collect()
}

/// Before/after purity maps sharing one linear scale from the lowest purity to 1.
pub(crate) fn purity_maps(
    prefix: &str,
    what: &str,
    before: &[DensityMatrix],
    after: &[DensityMatrix],
    targets: &[PureState],
) -> Vec<Artifact> {
    let lo = min_purity(before).min(min_purity(after)).min(0.999);
    let scale = ColorScale::linear(lo, 1.0);
    let target_angles: Vec<(f64, f64)> = targets.iter().map(|t| t.bloch().angles()).collect();
    [("before", before), ("after", after)]
        .into_iter()
        .map(|(stage, states)| {
            Artifact::figure(
                &format!("{prefix}_{stage}.svg"),
                svg::bloch_map(
                    &format!("{what}, {stage} calibration"),
                    &purity_points(states),
                    &target_angles,
                    &scale,
                    "purity",
                ),
            )
        })
        .collect()
}

/// `evaluation,cost` rows of an optimizer trace.
pub(crate) fn trace_csv(trace: &[(usize, f64)]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(["evaluation", "cost"]).map_err(csv_err)?;
    for (e, v) in trace {
        w.serialize((e, v)).map_err(csv_err)?;
    }
    finish_csv(w)
}

pub(crate) fn csv_err(e: csv::Error) -> CliError {
    CliError::io("csv", std::io::Error::other(e))
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| CliError::io("csv", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// The pure state `U†|0⟩` selected by a projective effect built from `U`.
pub(crate) fn projected_state(u: &ComplexMat2) -> Result<PureState> {
    let zero = [tomocal_core::C64::new(1.0, 0.0), tomocal_core::C64::new(0.0, 0.0)];
    PureState::normalized(u.adjoint().apply(zero)).map_err(CliError::from)
}
