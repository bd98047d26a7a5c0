use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Result};
use crate::qubit::{ComplexMat2, C64};

/// Heater voltages of the two phase shifters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChipDrive {
    pub v1: f64,
    pub v2: f64,
}

/// Phase-polynomial coefficients of the simulated device
/// (rad, rad/V, rad/V², rad, rad/V, rad/V²).
pub const CHIP_TRUE_COEFFS: [f64; 6] = [-1.887, 0.105, 0.05, -1.805, 0.115, 0.05];

/// Coefficients initially assumed for the same device.
pub const CHIP_INITIAL_COEFFS: [f64; 6] = [-1.750, 0.100, 0.050, -1.800, 0.1105, 0.050];

/// `(φ_1(V_1), φ_2(V_2))` for quadratic voltage-to-phase maps.
pub fn chip_phases(c: &[f64; 6], d: &ChipDrive) -> (f64, f64) {
    (
        c[0] + c[1] * d.v1 + c[2] * d.v1 * d.v1,
        c[3] + c[4] * d.v2 + c[5] * d.v2 * d.v2,
    )
}

/// `C · diag(1, e^{iφ_1}) · C · diag(1, e^{iφ_2})` with the symmetric 50:50
/// coupler `C = [[1, i], [i, 1]]/√2`: the second heater sets the relative
/// path phase at the input, the first heater sits inside the interferometer
/// and sets the coupling ratio. Detection on the upper path realizes the
/// effect `U†|0⟩⟨0|U`.
pub fn chip_unitary(phi1: f64, phi2: f64) -> Result<ComplexMat2> {
    ensure_finite("phase φ1", phi1)?;
    ensure_finite("phase φ2", phi2)?;
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let is = C64::new(0.0, FRAC_1_SQRT_2);
    let coupler = ComplexMat2::new(s, is, is, s);
    let one = C64::new(1.0, 0.0);
    let shifter = |phi: f64| ComplexMat2::diag(one, C64::from_polar(1.0, phi));
    Ok(coupler * shifter(phi1) * coupler * shifter(phi2))
}

/// Smallest non-negative voltage with `a + b V + c V² ≡ target (mod 2π)`.
fn invert_phase(a: f64, b: f64, c: f64, target: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for k in -4..=16 {
        let rhs = target + 2.0 * PI * k as f64 - a;
        let roots: Vec<f64> = if c.abs() < 1e-15 {
            if b.abs() < 1e-15 {
                vec![]
            } else {
                vec![rhs / b]
            }
        } else {
            let disc = b * b + 4.0 * c * rhs;
            if disc < 0.0 {
                vec![]
            } else {
                let sq = disc.sqrt();
                vec![(-b + sq) / (2.0 * c), (-b - sq) / (2.0 * c)]
            }
        };
        for v in roots.into_iter().filter(|v| *v >= 0.0) {
            if best.is_none_or(|b| v < b) {
                best = Some(v);
            }
        }
    }
    best
}

/// Drive voltages that project onto the Bloch points `(θ, φ)` if the device
/// follows coefficients `c`.
///
/// The projected state has `tan(θ/2) e^{iφ} = -cot(φ_1/2) e^{-iφ_2}`, so
/// `φ_1 = π - θ` and `φ_2 = π - φ` reach any point.
pub fn chip_drives_for_targets(c: &[f64; 6], targets: &[(f64, f64)]) -> Result<Vec<ChipDrive>> {
    targets
        .iter()
        .map(|&(theta, phi)| {
            let v1 = invert_phase(c[0], c[1], c[2], PI - theta);
            let v2 = invert_phase(c[3], c[4], c[5], PI - phi);
            match (v1, v2) {
                (Some(v1), Some(v2)) => Ok(ChipDrive { v1, v2 }),
                _ => Err(invalid(format!("no non-negative drive reaches (θ={theta}, φ={phi})"))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{state_from_angles, Effect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phases_at_zero_volts_are_offsets() {
        let (p1, p2) = chip_phases(&CHIP_TRUE_COEFFS, &ChipDrive { v1: 0.0, v2: 0.0 });
        assert_eq!((p1, p2), (-1.887, -1.805));
    }

    #[test]
    fn unitary_is_unitary() {
        assert!(chip_unitary(0.3, -2.0).unwrap().is_unitary(1e-12));
    }

    #[test]
    fn drives_hit_requested_projectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let targets: Vec<(f64, f64)> = (0..50)
            .map(|_| (rng.random_range(0.0..=PI), rng.random_range(0.0..2.0 * PI)))
            .collect();
        let drives = chip_drives_for_targets(&CHIP_INITIAL_COEFFS, &targets).unwrap();
        for (d, (t, p)) in drives.iter().zip(&targets) {
            assert!(d.v1 >= 0.0 && d.v2 >= 0.0 && d.v1 < 15.0 && d.v2 < 15.0);
            let (p1, p2) = chip_phases(&CHIP_INITIAL_COEFFS, d);
            let e = Effect::after_unitary(&chip_unitary(p1, p2).unwrap()).unwrap();
            let want = state_from_angles(*t, *p).unwrap().projector();
            assert!(e.mat().approx_eq(&want, 1e-10), "θ={t} φ={p}");
        }
    }

    #[test]
    fn invert_phase_handles_linear_and_unreachable() {
        let v = invert_phase(0.0, 1.0, 0.0, 0.5).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert!(invert_phase(0.0, 0.0, 0.0, 1.0).is_none());
    }
}
