//! Qubit tomography with self-calibrating measurement models.

pub mod calibration;
pub mod error;
pub mod measurement;
pub mod optim;
pub mod probes;
pub mod qubit;
pub mod reconstruction;

pub use error::{Error, Result};
pub use probes::{probe_set, ProbeKind, ProbeSet};
pub use qubit::{
    bloch_vector, born_probability, fidelity_pure, pauli_rotation, purity, state_from_angles, waveplate_unitary,
    Axis, BlochVector, ComplexMat2, DensityMatrix, Effect, PureState, C64,
};
pub use reconstruction::{
    maxlik, polarimeter_reconstruct, polarimeter_trace, simulate_tomogram, MaxLikOptions, MaxLikResult,
    PolarimeterTrace, StokesVector, Tomogram,
};
pub use calibration::{
    calibrate_global, calibrate_local, calibration_cost, gauge_unitary, landscape, purity_modulation,
    reversed_calibration, CalibrationReport, LandscapeGrid, OptimizerConfig,
};
pub use measurement::{effects_from_model, ErrorModel, MeasurementScheme, ModelVariant};
