//! Nominal and perturbed measurement-effect families.
//!
//! Four families are supported, each a projective measurement built from a
//! unitary `U` followed by detection in `|0⟩`, i.e. effects `U†|0⟩⟨0|U`:
//!
//! * per-setting additive angle errors on the `R_y(θ) R_z(φ)` analyzer,
//! * shared multiplicative (under/over-rotation) errors on the same analyzer,
//! * retardance deviations of a half-wave / quarter-wave plate pair,
//! * quadratic voltage-to-phase coefficients of an integrated Mach-Zehnder
//!   analyzer.

mod chip;
mod waveplate;

pub use chip::{chip_drives_for_targets, chip_phases, chip_unitary, ChipDrive, CHIP_INITIAL_COEFFS, CHIP_TRUE_COEFFS};
pub use waveplate::{
    ideal_prep_angles, normalize_waveplate_angle, preparation_unitary, projection_unitary, solve_waveplate_angles,
    WaveplateRole, WaveplateSetting,
};

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::qubit::{pauli_rotation, Axis, Effect};

/// Analyzer angles of one Pauli-tomography setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliSetting {
    /// 1-based setting index.
    pub index: usize,
    /// Rotation about y (radians).
    pub theta_y: f64,
    /// Rotation about z (radians).
    pub phi_z: f64,
}

/// The six Pauli-tomography analyzer settings.
pub fn pauli_settings() -> Vec<PauliSetting> {
    const THETA: [f64; 6] = [0.0, PI, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2];
    const PHI: [f64; 6] = [0.0, 0.0, PI, 0.0, FRAC_PI_2, 3.0 * FRAC_PI_2];
    (0..6)
        .map(|j| PauliSetting {
            index: j + 1,
            theta_y: THETA[j],
            phi_z: PHI[j],
        })
        .collect()
}

/// `R_z†(φ) R_y†(θ) |0⟩⟨0| R_y(θ) R_z(φ)`.
pub fn analyzer_effect(theta: f64, phi: f64) -> Result<Effect> {
    let u = pauli_rotation(Axis::Y, theta)? * pauli_rotation(Axis::Z, phi)?;
    Effect::after_unitary(&u)
}

/// Parameterized measurement-operator family and its parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum ErrorModel {
    /// `θ'_j = θ_j + δ_j`, `φ'_j = φ_j + ε_j` (radians).
    AdditiveAngles { delta: [f64; 6], epsilon: [f64; 6] },
    /// `θ'_j = (1 + δ) θ_j`, `φ'_j = (1 + ε) φ_j`.
    Multiplicative { delta: f64, epsilon: f64 },
    /// Half-wave plate retardance `π + δ`, quarter-wave plate `π/2 + ε` (radians).
    WaveplateRetardance { delta: f64, epsilon: f64 },
    /// `φ_1 = c_1 + c_2 V_1 + c_3 V_1²`, `φ_2 = c_4 + c_5 V_2 + c_6 V_2²`.
    ChipPolynomial { c: [f64; 6] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ModelVariant {
    AdditiveAngles,
    Multiplicative,
    WaveplateRetardance,
    ChipPolynomial,
}

impl ModelVariant {
    pub fn param_count(self) -> usize {
        match self {
            ModelVariant::AdditiveAngles => 12,
            ModelVariant::Multiplicative | ModelVariant::WaveplateRetardance => 2,
            ModelVariant::ChipPolynomial => 6,
        }
    }

    pub fn param_names(self) -> Vec<String> {
        match self {
            ModelVariant::AdditiveAngles => (1..=6)
                .map(|j| format!("delta{j}"))
                .chain((1..=6).map(|j| format!("epsilon{j}")))
                .collect(),
            ModelVariant::Multiplicative | ModelVariant::WaveplateRetardance => {
                vec!["delta".into(), "epsilon".into()]
            }
            ModelVariant::ChipPolynomial => (1..=6).map(|j| format!("c{j}")).collect(),
        }
    }

    /// Builds a model from a flat parameter vector, checking arity and finiteness.
    pub fn with_params(self, p: &[f64]) -> Result<ErrorModel> {
        if p.len() != self.param_count() {
            return Err(invalid(format!(
                "{self:?} takes {} parameters, got {}",
                self.param_count(),
                p.len()
            )));
        }
        if let Some(bad) = p.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite model parameter {bad}")));
        }
        let six = |s: &[f64]| -> [f64; 6] { s.try_into().expect("length checked") };
        Ok(match self {
            ModelVariant::AdditiveAngles => ErrorModel::AdditiveAngles {
                delta: six(&p[..6]),
                epsilon: six(&p[6..]),
            },
            ModelVariant::Multiplicative => ErrorModel::Multiplicative {
                delta: p[0],
                epsilon: p[1],
            },
            ModelVariant::WaveplateRetardance => ErrorModel::WaveplateRetardance {
                delta: p[0],
                epsilon: p[1],
            },
            ModelVariant::ChipPolynomial => ErrorModel::ChipPolynomial { c: six(p) },
        })
    }

    pub fn zero(self) -> ErrorModel {
        self.with_params(&vec![0.0; self.param_count()]).expect("zero parameters are valid")
    }
}

impl ErrorModel {
    pub fn variant(&self) -> ModelVariant {
        match self {
            ErrorModel::AdditiveAngles { .. } => ModelVariant::AdditiveAngles,
            ErrorModel::Multiplicative { .. } => ModelVariant::Multiplicative,
            ErrorModel::WaveplateRetardance { .. } => ModelVariant::WaveplateRetardance,
            ErrorModel::ChipPolynomial { .. } => ModelVariant::ChipPolynomial,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            ErrorModel::AdditiveAngles { delta, epsilon } => delta.iter().chain(epsilon).copied().collect(),
            ErrorModel::Multiplicative { delta, epsilon } | ErrorModel::WaveplateRetardance { delta, epsilon } => {
                vec![*delta, *epsilon]
            }
            ErrorModel::ChipPolynomial { c } => c.to_vec(),
        }
    }
}

/// Control settings of a tomographic measurement, one entry per setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "settings", rename_all = "camelCase")]
pub enum MeasurementScheme {
    Pauli(Vec<PauliSetting>),
    Waveplate(Vec<WaveplateSetting>),
    Chip(Vec<ChipDrive>),
}

impl MeasurementScheme {
    pub fn pauli() -> Self {
        MeasurementScheme::Pauli(pauli_settings())
    }

    pub fn len(&self) -> usize {
        match self {
            MeasurementScheme::Pauli(s) => s.len(),
            MeasurementScheme::Waveplate(s) => s.len(),
            MeasurementScheme::Chip(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Effects realized by `model` on each setting of `scheme`, in setting order.
pub fn effects_from_model(model: &ErrorModel, scheme: &MeasurementScheme) -> Result<Vec<Effect>> {
    if scheme.is_empty() {
        return Err(invalid("measurement scheme has no settings"));
    }
    if let Some(bad) = model.params().iter().find(|v| !v.is_finite()) {
        return Err(invalid(format!("non-finite model parameter {bad}")));
    }
    match (model, scheme) {
        (ErrorModel::AdditiveAngles { delta, epsilon }, MeasurementScheme::Pauli(settings)) => {
            if settings.len() != 6 {
                return Err(invalid(format!(
                    "additive model needs exactly 6 settings, got {}",
                    settings.len()
                )));
            }
            settings
                .iter()
                .enumerate()
                .map(|(j, s)| analyzer_effect(s.theta_y + delta[j], s.phi_z + epsilon[j]))
                .collect()
        }
        (ErrorModel::Multiplicative { delta, epsilon }, MeasurementScheme::Pauli(settings)) => settings
            .iter()
            .map(|s| analyzer_effect((1.0 + delta) * s.theta_y, (1.0 + epsilon) * s.phi_z))
            .collect(),
        (ErrorModel::WaveplateRetardance { delta, epsilon }, MeasurementScheme::Waveplate(settings)) => settings
            .iter()
            .map(|s| s.effect((*delta, *epsilon)))
            .collect(),
        (ErrorModel::ChipPolynomial { c }, MeasurementScheme::Chip(drives)) => drives
            .iter()
            .map(|d| {
                let (p1, p2) = chip_phases(c, d);
                Effect::after_unitary(&chip_unitary(p1, p2)?)
            })
            .collect(),
        (m, s) => Err(invalid(format!(
            "model {:?} cannot drive a {} scheme",
            m.variant(),
            match s {
                MeasurementScheme::Pauli(_) => "Pauli",
                MeasurementScheme::Waveplate(_) => "waveplate",
                MeasurementScheme::Chip(_) => "chip",
            }
        ))),
    }
}
