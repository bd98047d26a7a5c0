//! Cost landscapes of the multiplicative model for several probe sets.

use serde::{Deserialize, Serialize};
use tomocal_core::calibration::{landscape, minimum_basin, CostKind, LandscapeAxis, LandscapeGrid, Objective};
use tomocal_core::measurement::ModelVariant;
use tomocal_core::{effects_from_model, probe_set, ErrorModel, MeasurementScheme, ProbeKind, Tomogram};

use super::{csv_err, finish_csv, mixed_probes, simulate_all, Artifact, Outcome, ScenarioResult};
use crate::config::{AxisSection, ExperimentConfig, LandscapeSection};
use crate::error::{CliError, Result};
use crate::svg::{self, ColorScale, Series};

/// Sublevel factor defining the minimum basin.
pub const BASIN_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LandscapeEntry {
    pub probe: ProbeKind,
    /// Grid point with the lowest cost.
    pub argmin: Vec<f64>,
    pub min_value: f64,
    /// Grid point nearest the truth.
    pub truth_node: Vec<f64>,
    pub argmin_at_truth_node: bool,
    pub basin_size: usize,
    pub regions: usize,
    /// The minimum lies in a valley of at least `riftNodes` grid nodes.
    pub rift: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LandscapeResult {
    pub truth: Vec<f64>,
    pub axes: Vec<AxisSection>,
    pub cost: CostKind,
    pub basin_factor: f64,
    pub rift_nodes: usize,
    pub entries: Vec<LandscapeEntry>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let section = cfg.landscape.clone().unwrap_or_default();
    let truth = cfg.fixed_truth().expect("landscape truth is fixed");
    let scheme = MeasurementScheme::pauli();
    let mut grids = Vec::new();
    let mut entries = Vec::new();
    for &kind in &section.probes {
        let tomos = multiplicative_tomograms(cfg, kind, &truth, &scheme)?;
        let (grid, entry) = scan(cfg, &section, kind, &tomos, &scheme, &truth)?;
        grids.push(grid);
        entries.push(entry);
    }
    let artifacts = landscape_artifacts(&section, &truth, &grids, &entries)?;
    let result = LandscapeResult {
        truth,
        axes: section.axes.clone(),
        cost: section.cost,
        basin_factor: BASIN_FACTOR,
        rift_nodes: section.rift_nodes,
        entries,
    };
    Ok(Outcome::single(ScenarioResult::Landscape(result), artifacts))
}

pub(crate) fn multiplicative_tomograms(
    cfg: &ExperimentConfig,
    kind: ProbeKind,
    truth: &[f64],
    scheme: &MeasurementScheme,
) -> Result<Vec<Tomogram>> {
    let probes = probe_set(kind)?;
    let states = mixed_probes(&probes.states, cfg.probe_purity)?;
    let truth = ModelVariant::Multiplicative.with_params(truth)?;
    let effects = effects_from_model(&truth, scheme)?;
    simulate_all(&states, &effects, cfg.shots, cfg.seed.unwrap_or(0), 0)
}

fn axes_of(section: &LandscapeSection) -> Result<Vec<LandscapeAxis>> {
    let names = ModelVariant::Multiplicative.param_names();
    section
        .axes
        .iter()
        .map(|a| {
            let idx = names
                .iter()
                .position(|n| *n == a.param)
                .ok_or_else(|| CliError::Config(format!("unknown landscape parameter {:?}", a.param)))?;
            Ok(LandscapeAxis::linspace(idx, a.param.clone(), a.min, a.max, a.n))
        })
        .collect()
}

/// Evaluates one probe set's landscape around the nominal model.
pub(crate) fn scan(
    cfg: &ExperimentConfig,
    section: &LandscapeSection,
    kind: ProbeKind,
    tomos: &[Tomogram],
    scheme: &MeasurementScheme,
    truth: &[f64],
) -> Result<(LandscapeGrid, LandscapeEntry)> {
    let variant = ModelVariant::Multiplicative;
    let nominal: ErrorModel = variant.with_params(&cfg.nominal())?;
    let objective = Objective::new(nominal.clone(), tomos, scheme).with_kind(section.cost);
    let axes = axes_of(section)?;
    let grid = landscape(&objective, &nominal, &axes)?;
    let basin = minimum_basin(&grid, BASIN_FACTOR);
    // the node nearest the truth, measured on the scanned coordinates
    let distance = |k: usize| {
        grid.point(k)
            .iter()
            .zip(&axes)
            .map(|(v, a)| (v - truth[a.param_index]).powi(2))
            .sum::<f64>()
    };
    let truth_k = (0..grid.values.len())
        .min_by(|&a, &b| distance(a).total_cmp(&distance(b)))
        .expect("non-empty grid");
    let entry = LandscapeEntry {
        probe: kind,
        argmin: grid.point(basin.argmin),
        min_value: basin.min_value,
        truth_node: grid.point(truth_k),
        argmin_at_truth_node: basin.argmin == truth_k,
        basin_size: basin.basin_size,
        regions: basin.regions,
        rift: basin.is_rift(section.rift_nodes),
    };
    Ok((grid, entry))
}

fn column_name(kind: CostKind, probe: ProbeKind) -> String {
    match kind {
        CostKind::PurityModulation => format!("delta_p_{probe}"),
        CostKind::MinPurity => format!("p_min_{probe}"),
    }
}

/// `landscape.csv` with the axis values and one cost column per probe set,
/// plus one figure per probe set.
pub(crate) fn landscape_artifacts(
    section: &LandscapeSection,
    truth: &[f64],
    grids: &[LandscapeGrid],
    entries: &[LandscapeEntry],
) -> Result<Vec<Artifact>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    let mut header: Vec<String> = section.axes.iter().map(|a| a.param.clone()).collect();
    header.extend(entries.iter().map(|e| column_name(section.cost, e.probe)));
    w.write_record(&header).map_err(csv_err)?;
    let first = &grids[0];
    for k in 0..first.values.len() {
        let mut row: Vec<String> = first.point(k).iter().map(|v| v.to_string()).collect();
        row.extend(grids.iter().map(|g| g.values[k].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    let mut out = vec![Artifact::data("landscape.csv", finish_csv(w)?)];

    let names = ModelVariant::Multiplicative.param_names();
    let truth_at = |axis: &AxisSection| names.iter().position(|n| *n == axis.param).map_or(0.0, |i| truth[i]);
    for (grid, entry) in grids.iter().zip(entries) {
        let positive = grid.values.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
        let max = grid.values.iter().copied().fold(0.0, f64::max);
        let scale = ColorScale::logarithmic(if positive.is_finite() { positive } else { 1e-12 }, max);
        let title = format!("{} landscape, {} probes", column_name(section.cost, entry.probe), entry.probe);
        let svg = if grid.axes.len() == 2 {
            let (ax, ay) = (&section.axes[0], &section.axes[1]);
            svg::heatmap(
                &title,
                (&ax.param, &grid.axes[0]),
                (&ay.param, &grid.axes[1]),
                &grid.values,
                &[
                    ("truth", truth_at(ax), truth_at(ay)),
                    ("minimum", entry.argmin[0], entry.argmin[1]),
                ],
                &scale,
            )
        } else {
            let series = Series {
                name: entry.probe.to_string(),
                points: grid.axes[0].iter().copied().zip(grid.values.iter().copied()).collect(),
            };
            svg::curves(&title, &section.axes[0].param, "cost", &[series], Some(truth_at(&section.axes[0])))
        };
        out.push(Artifact::figure(&format!("landscape_{}.svg", entry.probe), svg));
    }
    Ok(out)
}
