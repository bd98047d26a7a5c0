//! Single calibrations: multiplicative errors and the integrated chip.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use tomocal_core::calibration::{bloch_rotation, calibrate_global_with, min_purity, LocalConfig, Objective};
use tomocal_core::measurement::{chip_drives_for_targets, ModelVariant};
use tomocal_core::optim::Bounds;
use tomocal_core::{
    calibrate_local, effects_from_model, probe_set, CalibrationReport, DensityMatrix,
    ErrorModel, MeasurementScheme, ProbeKind, ProbeSet,
};

use super::landscape::{landscape_artifacts, multiplicative_tomograms, scan, LandscapeEntry};
use super::{
    conjugate_all, csv_err, delta_p, finish_csv, fix_gauge, gauge_reference, mixed_probes, purity_maps, reconstruct,
    simulate_all, trace_csv, Artifact, Outcome, ScenarioResult, TestEnsemble,
};
use crate::config::{to_config_units, unit_names, ExperimentConfig, LandscapeSection};
use crate::error::Result;
use crate::stats::EnsembleStats;
use crate::svg::{self, Series};

/// Seed stream offset of the test-state tomograms.
const TEST_STREAM: u64 = 1 << 32;

/// Extra results of the chip calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChipDetails {
    /// Lowest probe purity under the initially assumed coefficients.
    pub initial_p_min: f64,
    pub final_p_min: f64,
    /// Offset folded into `c4` from the gauge unitary (rad).
    pub gauge_fold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CalibrationResult {
    pub variant: ModelVariant,
    pub probe: ProbeKind,
    pub param_names: Vec<String>,
    /// Parameter vectors in config units.
    pub truth: Vec<f64>,
    pub nominal: Vec<f64>,
    pub recovered: Vec<f64>,
    /// Probe-ensemble ΔP under the nominal and the recovered model.
    pub delta_p_before: f64,
    pub delta_p_after: f64,
    pub probe_min_purity_before: f64,
    pub probe_min_purity_after: f64,
    pub evaluations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge_reference: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<TestEnsemble>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape: Option<LandscapeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chip: Option<ChipDetails>,
}

impl CalibrationResult {
    pub(crate) fn from_report(
        probe: ProbeKind,
        truth: &ErrorModel,
        nominal: &ErrorModel,
        report: &CalibrationReport,
        before: &[DensityMatrix],
        after: &[DensityMatrix],
    ) -> Result<Self> {
        let variant = truth.variant();
        Ok(Self {
            variant,
            probe,
            param_names: unit_names(variant),
            truth: to_config_units(variant, &truth.params()),
            nominal: to_config_units(variant, &nominal.params()),
            recovered: to_config_units(variant, &report.optimal_params.params()),
            delta_p_before: delta_p(before)?,
            delta_p_after: delta_p(after)?,
            probe_min_purity_before: super::min_purity(before),
            probe_min_purity_after: super::min_purity(after),
            evaluations: report.evaluations,
            converged: report.converged,
            gauge_reference: None,
            test: None,
            landscape: None,
            chip: None,
        })
    }
}

/// Reconstructs the test ensemble with the nominal and the recovered model
/// and fixes the gauge from the reference probes.
#[allow(clippy::too_many_arguments)]
fn verify(
    cfg: &ExperimentConfig,
    scheme: &MeasurementScheme,
    truth: &ErrorModel,
    nominal: &ErrorModel,
    recovered: &ErrorModel,
    probes: &ProbeSet,
    probe_recon: &[DensityMatrix],
    pair: [usize; 2],
) -> Result<(TestEnsemble, Vec<DensityMatrix>, Vec<DensityMatrix>, ProbeSet)> {
    let tests = probe_set(cfg.test_kind())?;
    let test_states: Vec<DensityMatrix> = tests.states.iter().map(DensityMatrix::from_pure).collect();
    let true_effects = effects_from_model(truth, scheme)?;
    let tomos = simulate_all(&test_states, &true_effects, cfg.shots, cfg.seed.unwrap_or(0), TEST_STREAM)?;
    let gauge = fix_gauge(probe_recon, &probes.states, pair)?;
    let before = reconstruct(&tomos, &effects_from_model(nominal, scheme)?)?;
    let raw = reconstruct(&tomos, &effects_from_model(recovered, scheme)?)?;
    let after = conjugate_all(&raw, &gauge)?;
    let test = TestEnsemble {
        before: EnsembleStats::of(&before, &tests.states),
        after_raw: EnsembleStats::of(&raw, &tests.states),
        after: EnsembleStats::of(&after, &tests.states),
    };
    Ok((test, before, after, tests))
}

pub fn run_multiplicative(cfg: &ExperimentConfig) -> Result<Outcome> {
    let variant = ModelVariant::Multiplicative;
    let kind = cfg.probe_kind();
    let probes = probe_set(kind)?;
    let scheme = MeasurementScheme::pauli();
    let truth_cfg = cfg.fixed_truth().expect("multiplicative truth is fixed");
    let truth = variant.with_params(&truth_cfg)?;
    let nominal = variant.with_params(&cfg.nominal())?;
    let tomos = multiplicative_tomograms(cfg, kind, &truth_cfg, &scheme)?;

    let opt = cfg.optimizer_section();
    let bounds = if opt.lower_bound.is_empty() {
        None
    } else {
        Some(Bounds::new(opt.lower_bound.clone(), opt.upper_bound.clone())?)
    };
    let local = LocalConfig {
        bounds,
        ..Default::default()
    };
    let report = calibrate_local(&tomos, &scheme, &nominal, &local)?;
    let before = reconstruct(&tomos, &effects_from_model(&nominal, &scheme)?)?;
    let after = reconstruct(&tomos, &effects_from_model(&report.optimal_params, &scheme)?)?;
    let pair = gauge_reference(cfg, &probes)?;
    let (test, test_before, test_after, tests) =
        verify(cfg, &scheme, &truth, &nominal, &report.optimal_params, &probes, &after, pair)?;

    let section = LandscapeSection {
        probes: vec![kind],
        axes: cfg.landscape.clone().unwrap_or_default().axes,
        ..cfg.landscape.clone().unwrap_or_default()
    };
    let (grid, entry) = scan(cfg, &section, kind, &tomos, &scheme, &truth_cfg)?;

    let mut result = CalibrationResult::from_report(kind, &truth, &nominal, &report, &before, &after)?;
    result.gauge_reference = Some(pair);
    result.test = Some(test);
    result.landscape = Some(entry.clone());

    let mut artifacts = landscape_artifacts(&section, &truth_cfg, &[grid], &[entry])?;
    artifacts.push(Artifact::data("cost_trace.csv", trace_csv(&report.cost_trace)?));
    artifacts.extend(purity_maps("purity", "Test states", &test_before, &test_after, &tests.states));
    Ok(Outcome::single(ScenarioResult::Calibration(result), artifacts))
}

/// Bloch targets of the six Pauli projections driven on the chip.
pub const CHIP_TARGETS: [(f64, f64); 6] = [
    (0.0, 0.0),
    (PI, 0.0),
    (FRAC_PI_2, PI),
    (FRAC_PI_2, 0.0),
    (FRAC_PI_2, FRAC_PI_2),
    (FRAC_PI_2, 3.0 * FRAC_PI_2),
];

/// Rotation angle of the gauge's Bloch rotation about z.
fn z_angle(w: &tomocal_core::ComplexMat2) -> f64 {
    let r = bloch_rotation(w);
    r[(1, 0)].atan2(r[(0, 0)])
}

/// Total rotation angle of a gauge unitary.
fn rotation_angle(w: &tomocal_core::ComplexMat2) -> f64 {
    let r = bloch_rotation(w);
    ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

pub fn run_chip(cfg: &ExperimentConfig) -> Result<Outcome> {
    let variant = ModelVariant::ChipPolynomial;
    let chip = cfg.chip.clone().unwrap_or_default();
    let kind = cfg.probe_kind();
    let probes = probe_set(kind)?;
    let truth = variant.with_params(&cfg.fixed_truth().expect("chip truth is fixed"))?;
    let nominal = variant.with_params(&cfg.nominal())?;
    let drives = chip_drives_for_targets(&chip.initial_coeffs, &CHIP_TARGETS)?;
    let scheme = MeasurementScheme::Chip(drives);
    let states = mixed_probes(&probes.states, cfg.probe_purity)?;
    let seed = cfg.seed.unwrap_or(0);
    let tomos = simulate_all(&states, &effects_from_model(&truth, &scheme)?, cfg.shots, seed, 0)?;

    let opt = cfg.optimizer_section().to_core(variant, seed);
    let objective = Objective::new(nominal.clone(), &tomos, &scheme);
    let report = calibrate_global_with(&objective, &nominal, &opt)?;

    // c4 only rotates every effect about z; fold the gauge rotation into it
    let pair = gauge_reference(cfg, &probes)?;
    let recon_of = |m: &ErrorModel| -> Result<Vec<DensityMatrix>> { reconstruct(&tomos, &effects_from_model(m, &scheme)?) };
    let found = report.optimal_params.params();
    let w = fix_gauge(&recon_of(&report.optimal_params)?, &probes.states, pair)?;
    let alpha = z_angle(&w);
    let mut best: Option<(f64, f64, ErrorModel)> = None;
    for shift in [alpha, -alpha] {
        let mut c = found.clone();
        c[3] += shift;
        // stay on the branch nearest the assumed offset
        c[3] -= 2.0 * PI * ((c[3] - chip.initial_coeffs[3]) / (2.0 * PI)).round();
        let m = variant.with_params(&c)?;
        let residual = rotation_angle(&fix_gauge(&recon_of(&m)?, &probes.states, pair)?);
        if best.as_ref().is_none_or(|b| residual < b.0) {
            best = Some((residual, c[3] - found[3], m));
        }
    }
    let (_, fold, folded) = best.expect("two candidates");
    let report = CalibrationReport {
        optimal_params: folded.clone(),
        ..report
    };

    let before = recon_of(&nominal)?;
    let after = recon_of(&folded)?;
    let (test, test_before, test_after, tests) = verify(cfg, &scheme, &truth, &nominal, &folded, &probes, &after, pair)?;
    let mut result = CalibrationResult::from_report(kind, &truth, &nominal, &report, &before, &after)?;
    result.gauge_reference = Some(pair);
    result.test = Some(test);
    result.chip = Some(ChipDetails {
        initial_p_min: min_purity(&before)?,
        final_p_min: min_purity(&after)?,
        gauge_fold: fold,
    });

    let sections = chip_sections(&objective, &folded.params(), &chip.half_widths, chip.section_points)?;
    let mut artifacts = vec![
        Artifact::data("cost_trace.csv", trace_csv(&report.cost_trace)?),
        Artifact::data("sections.csv", sections_csv(&sections)?),
        Artifact::figure("sections.svg", sections_svg(&sections, &folded.params(), &truth.params(), &chip.half_widths)),
    ];
    artifacts.extend(purity_maps("purity", "Test states", &test_before, &test_after, &tests.states));
    Ok(Outcome::single(ScenarioResult::Calibration(result), artifacts))
}

/// `(parameter index, value, P_min)` with one coefficient varied at a time.
type Section = Vec<(usize, f64, f64)>;

fn chip_sections(objective: &Objective, center: &[f64], half_widths: &[f64; 6], n: usize) -> Result<Section> {
    let objective = objective.clone().with_kind(tomocal_core::calibration::CostKind::MinPurity);
    let mut rows = Vec::with_capacity(6 * n);
    for i in 0..6 {
        for k in 0..n {
            let mut p = center.to_vec();
            p[i] = center[i] - half_widths[i] + 2.0 * half_widths[i] * k as f64 / (n - 1) as f64;
            let v = objective.cost_value(&objective.model(&p)?)?.value;
            rows.push((i, p[i], v));
        }
    }
    Ok(rows)
}

fn sections_csv(rows: &Section) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    w.write_record(["param", "value", "p_min"]).map_err(csv_err)?;
    for &(i, v, p) in rows {
        w.write_record([format!("c{}", i + 1), v.to_string(), p.to_string()])
            .map_err(csv_err)?;
    }
    finish_csv(w)
}

/// `P_min` against each coefficient's offset from the recovered value.
fn sections_svg(rows: &Section, center: &[f64], truth: &[f64], half_widths: &[f64; 6]) -> String {
    let series: Vec<Series> = (0..6)
        .map(|i| Series {
            name: format!("c{} (truth at {:+.4})", i + 1, (truth[i] - center[i]) / half_widths[i]),
            points: rows
                .iter()
                .filter(|r| r.0 == i)
                .map(|r| ((r.1 - center[i]) / half_widths[i], r.2))
                .collect(),
        })
        .collect();
    svg::curves(
        "Minimum probe purity along each coefficient",
        "offset from the recovered value (fraction of the search half-width)",
        "P_min",
        &series,
        Some(0.0),
    )
}
