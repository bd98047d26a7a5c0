//! Rotating quarter-wave plate polarimetry with a mis-specified retardance.

use serde::{Deserialize, Serialize};
use tomocal_core::{polarimeter_reconstruct, polarimeter_trace, probe_set, PolarimeterTrace, ProbeKind, StokesVector};

use super::{csv_err, finish_csv, mixed_probes, Artifact, Outcome, ScenarioResult};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::svg::{self, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PolarimeterProbe {
    pub theta: f64,
    pub phi: f64,
    /// Degree of polarization reconstructed with the assumed deviation.
    pub degree_of_polarization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PolarimeterResult {
    pub probe: ProbeKind,
    pub true_deviation_deg: f64,
    pub assumed_deviation_deg: f64,
    pub probes: Vec<PolarimeterProbe>,
    pub max_degree_of_polarization: f64,
    /// Assumed deviation with the smallest spread `ΔD = max D − min D`.
    pub best_assumed_deg: f64,
    pub min_delta_d: f64,
}

fn degrees(traces: &[PolarimeterTrace], assumed_deg: f64) -> Result<Vec<f64>> {
    traces
        .iter()
        .map(|t| Ok(polarimeter_reconstruct(t, assumed_deg.to_radians())?.degree_of_polarization()))
        .collect()
}

fn spread(d: &[f64]) -> f64 {
    d.iter().copied().fold(f64::NEG_INFINITY, f64::max) - d.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let section = cfg.polarimeter.clone().unwrap_or_default();
    let kind = cfg.probe_kind();
    let probes = probe_set(kind)?;
    let states = mixed_probes(&probes.states, cfg.probe_purity)?;
    let traces: Vec<PolarimeterTrace> = states
        .iter()
        .map(|rho| {
            polarimeter_trace(
                &StokesVector::from_density(rho, 1.0),
                section.true_deviation_deg.to_radians(),
                section.samples,
            )
        })
        .collect::<tomocal_core::Result<_>>()?;

    let at_assumed = degrees(&traces, section.assumed_deviation_deg)?;
    let steps = ((section.scan_max_deg - section.scan_min_deg) / section.scan_step_deg + 1e-9).floor() as usize;
    let scan: Vec<(f64, Vec<f64>)> = (0..=steps)
        .map(|k| {
            let a = section.scan_min_deg + k as f64 * section.scan_step_deg;
            degrees(&traces, a).map(|d| (a, d))
        })
        .collect::<Result<_>>()?;
    let (best_assumed_deg, min_delta_d) = scan
        .iter()
        .map(|(a, d)| (*a, spread(d)))
        .fold((f64::NAN, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best });

    let result = PolarimeterResult {
        probe: kind,
        true_deviation_deg: section.true_deviation_deg,
        assumed_deviation_deg: section.assumed_deviation_deg,
        probes: probes
            .angles()
            .iter()
            .zip(&at_assumed)
            .map(|(&(theta, phi), &d)| PolarimeterProbe {
                theta,
                phi,
                degree_of_polarization: d,
            })
            .collect(),
        max_degree_of_polarization: at_assumed.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        best_assumed_deg,
        min_delta_d,
    };

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    let mut header = vec!["assumed_deviation_deg".to_string(), "delta_d".to_string()];
    header.extend((0..probes.len()).map(|k| format!("d_{k}")));
    w.write_record(&header).map_err(csv_err)?;
    for (a, d) in &scan {
        let mut row = vec![a.to_string(), spread(d).to_string()];
        row.extend(d.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    let delta_curve = Series {
        name: "ΔD".into(),
        points: scan.iter().map(|(a, d)| (*a, spread(d))).collect(),
    };
    let probe_curves: Vec<Series> = (0..probes.len())
        .map(|k| Series {
            name: format!("probe {k}"),
            points: scan.iter().map(|(a, d)| (*a, d[k])).collect(),
        })
        .collect();
    let artifacts = vec![
        Artifact::data("polarimeter.csv", finish_csv(w)?),
        Artifact::figure(
            "polarimeter_delta_d.svg",
            svg::curves(
                "Spread of the degree of polarization",
                "assumed retardance deviation (deg)",
                "ΔD",
                &[delta_curve],
                Some(section.true_deviation_deg),
            ),
        ),
        Artifact::figure(
            "polarimeter_dop.svg",
            svg::curves(
                "Degree of polarization per probe",
                "assumed retardance deviation (deg)",
                "D",
                &probe_curves,
                Some(section.true_deviation_deg),
            ),
        ),
    ];
    Ok(Outcome::single(ScenarioResult::Polarimeter(result), artifacts))
}
