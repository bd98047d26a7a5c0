//! Shared inputs for the benchmarks.

use tomocal_core::measurement::ModelVariant;
use tomocal_core::{
    effects_from_model, probe_set, simulate_tomogram, DensityMatrix, ErrorModel, MeasurementScheme, ProbeKind, Tomogram,
};

/// Noiseless Pauli tomograms of the Fibonacci probes under a fixed additive error.
pub fn additive_tomograms(probes: usize) -> (Vec<Tomogram>, MeasurementScheme, ErrorModel) {
    let truth: Vec<f64> = (0..12).map(|i| 0.08 * ((i * 5 % 7) as f64 - 3.0) / 3.0).collect();
    let truth = ModelVariant::AdditiveAngles.with_params(&truth).unwrap();
    let scheme = MeasurementScheme::pauli();
    let effects = effects_from_model(&truth, &scheme).unwrap();
    let tomos = probe_set(ProbeKind::Fibonacci { n: probes })
        .unwrap()
        .states
        .iter()
        .map(|s| simulate_tomogram(&DensityMatrix::from_pure(s), &effects, None, None).unwrap())
        .collect();
    (tomos, scheme, ModelVariant::AdditiveAngles.zero())
}
