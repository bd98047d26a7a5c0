use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::qubit::{waveplate_unitary, ComplexMat2, Effect, PureState, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum WaveplateRole {
    /// Quarter-wave then half-wave plate acting on `|0⟩`.
    Preparation,
    /// Half-wave then quarter-wave plate followed by a `|0⟩` polarizer.
    Projection,
}

/// Angular positions of a half-wave / quarter-wave plate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveplateSetting {
    /// Half-wave plate fast-axis angle `x` (radians).
    pub hwp_angle: f64,
    /// Quarter-wave plate fast-axis angle `y` (radians).
    pub qwp_angle: f64,
    pub role: WaveplateRole,
}

const PROJECTION_TABLE: [(f64, f64); 6] = [
    (0.0, 0.0),
    (FRAC_PI_4, 0.0),
    (FRAC_PI_8, 0.0),
    (-FRAC_PI_8, 0.0),
    (-FRAC_PI_8, -FRAC_PI_4),
    (FRAC_PI_8, FRAC_PI_4),
];

const PREPARATION_TABLE: [(f64, f64); 6] = [
    (0.0, 0.0),
    (FRAC_PI_4, 0.0),
    (FRAC_PI_8, 0.0),
    (-FRAC_PI_8, 0.0),
    (FRAC_PI_8, FRAC_PI_4),
    (-FRAC_PI_8, -FRAC_PI_4),
];

impl WaveplateSetting {
    pub fn new(hwp_angle: f64, qwp_angle: f64, role: WaveplateRole) -> Self {
        Self {
            hwp_angle,
            qwp_angle,
            role,
        }
    }

    /// Waveplate positions of the six Pauli projections.
    pub fn pauli_projection() -> Vec<Self> {
        PROJECTION_TABLE
            .iter()
            .map(|&(x, y)| Self::new(x, y, WaveplateRole::Projection))
            .collect()
    }

    /// Waveplate positions preparing the six Pauli eigenstates.
    pub fn pauli_preparation() -> Vec<Self> {
        PREPARATION_TABLE
            .iter()
            .map(|&(x, y)| Self::new(x, y, WaveplateRole::Preparation))
            .collect()
    }

    /// Effect realized with retardance deviations `(δ, ε)` of the half- and
    /// quarter-wave plate. A preparation setting yields the projector onto
    /// the state it prepares.
    pub fn effect(&self, dev: (f64, f64)) -> Result<Effect> {
        match self.role {
            WaveplateRole::Projection => Effect::after_unitary(&projection_unitary(self, dev)?),
            WaveplateRole::Preparation => Effect::after_unitary(&preparation_unitary(self, dev)?.adjoint()),
        }
    }
}

/// `Ŵ(x, π+δ) Ŵ(y, π/2+ε)`: quarter-wave plate first in propagation order.
pub fn preparation_unitary(setting: &WaveplateSetting, dev: (f64, f64)) -> Result<ComplexMat2> {
    Ok(waveplate_unitary(setting.hwp_angle, PI + dev.0)? * waveplate_unitary(setting.qwp_angle, FRAC_PI_2 + dev.1)?)
}

/// `Ŵ(y, π/2+ε) Ŵ(x, π+δ)`: half-wave plate first in propagation order.
pub fn projection_unitary(setting: &WaveplateSetting, dev: (f64, f64)) -> Result<ComplexMat2> {
    Ok(waveplate_unitary(setting.qwp_angle, FRAC_PI_2 + dev.1)? * waveplate_unitary(setting.hwp_angle, PI + dev.0)?)
}

/// Maps an angle into `[-π/2, π/2)`; Jones operators of waveplates are π-periodic.
pub fn normalize_waveplate_angle(a: f64) -> f64 {
    (a + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2
}

/// Closed-form `(x, y)` that prepare the Bloch point `(θ, φ)` with ideal plates.
pub fn ideal_prep_angles(theta: f64, phi: f64) -> Result<(f64, f64)> {
    ensure_finite("colatitude", theta)?;
    ensure_finite("longitude", phi)?;
    if !(-1e-12..=PI + 1e-12).contains(&theta) {
        return Err(invalid(format!("colatitude {theta} outside [0, π]")));
    }
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let y = -0.5 * (st * sp).clamp(-1.0, 1.0).asin();
    // arctan(tan θ cos φ) with the θ = π/2 singularity taken as its limit;
    // at the circular poles (cos φ = 0 as well) the half-wave angle is free.
    let tilt = if ct.abs() < 1e-12 {
        if cp.abs() < 1e-12 {
            0.0
        } else {
            FRAC_PI_2.copysign(cp)
        }
    } else {
        (st * cp / ct).atan()
    };
    let branch = if theta > FRAC_PI_2 { FRAC_PI_4 } else { 0.0 };
    let x = 0.25 * tilt + 0.5 * y + branch;
    Ok((normalize_waveplate_angle(x), normalize_waveplate_angle(y)))
}

fn overlap_with(target: &PureState, v: [C64; 2]) -> f64 {
    let [a, b] = target.amplitudes;
    (a.conj() * v[0] + b.conj() * v[1]).norm_sqr()
}

/// Achieved overlap of the setting `(x, y)` with `target` under deviations `dev`.
pub fn waveplate_overlap(target: &PureState, role: WaveplateRole, x: f64, y: f64, dev: (f64, f64)) -> Result<f64> {
    let setting = WaveplateSetting::new(x, y, role);
    let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    Ok(match role {
        WaveplateRole::Preparation => overlap_with(target, preparation_unitary(&setting, dev)?.apply(zero)),
        // |⟨0|U|ψ⟩|² = |⟨ψ|U†|0⟩|²
        WaveplateRole::Projection => overlap_with(target, projection_unitary(&setting, dev)?.adjoint().apply(zero)),
    })
}

/// Numerically maximizes the preparation (or projection) overlap with
/// `target` for plates with retardance deviations `dev = (δ, ε)`.
///
/// Nelder-Mead is started from the closed-form ideal angles shifted over a
/// fixed grid of eight offsets; returned angles lie in `[-π/2, π/2)`.
pub fn solve_waveplate_angles(target: &PureState, role: WaveplateRole, dev: (f64, f64)) -> Result<(f64, f64)> {
    ensure_finite("half-wave deviation", dev.0)?;
    ensure_finite("quarter-wave deviation", dev.1)?;
    let (theta, phi) = target.bloch().angles();
    // Projection onto |ψ⟩ uses the same plates that would prepare |ψ*⟩
    // because waveplate Jones matrices are symmetric.
    let seed = match role {
        WaveplateRole::Preparation => ideal_prep_angles(theta, phi)?,
        WaveplateRole::Projection => ideal_prep_angles(theta, (2.0 * PI - phi).rem_euclid(2.0 * PI))?,
    };

    let objective = |p: &[f64]| 1.0 - waveplate_overlap(target, role, p[0], p[1], dev).unwrap_or(0.0);
    let mut opts = NelderMeadOptions::new(vec![0.05, 0.05]);
    opts.f_tol = 1e-16;
    opts.x_tol = 1e-10;
    opts.max_evaluations = 4_000;

    let mut best = (seed.0, seed.1, objective(&[seed.0, seed.1]));
    'grid: for a in 0..4 {
        for b in 0..2 {
            let start = [seed.0 + a as f64 * FRAC_PI_4, seed.1 + b as f64 * FRAC_PI_2];
            let m = nelder_mead(objective, &start, &opts, None);
            if m.value < best.2 {
                best = (m.x[0], m.x[1], m.value);
            }
            if best.2 < 1e-14 {
                break 'grid;
            }
        }
    }

    let overlap = 1.0 - best.2;
    if overlap < 1.0 - 1e-6 {
        return Err(Error::SolverFailure { best_overlap: overlap });
    }
    Ok((normalize_waveplate_angle(best.0), normalize_waveplate_angle(best.1)))
}
