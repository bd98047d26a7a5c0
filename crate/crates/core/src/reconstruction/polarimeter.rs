use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::qubit::{waveplate_unitary, ComplexMat2, DensityMatrix, Effect};

pub const DEFAULT_TRACE_SAMPLES: usize = 360;

/// Stokes parameters with `S1 ↔ σz` (H/V balance), `S2 ↔ σx` (±45°) and
/// `S3 ↔ σy` (circular). Not constrained to the Poincaré ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn new(s0: f64, s1: f64, s2: f64, s3: f64) -> Self {
        Self { s0, s1, s2, s3 }
    }

    /// Stokes vector of light in state `rho` with total intensity `s0`.
    pub fn from_density(rho: &DensityMatrix, s0: f64) -> Self {
        let r = rho.bloch();
        Self::new(s0, s0 * r.z, s0 * r.x, s0 * r.y)
    }

    /// Degree of polarization `√(S1² + S2² + S3²)/S0`.
    pub fn degree_of_polarization(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt() / self.s0
    }

    /// Scaled to `S0 = 1`.
    pub fn normalized(&self) -> Self {
        Self::new(1.0, self.s1 / self.s0, self.s2 / self.s0, self.s3 / self.s0)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.s0, self.s1, self.s2, self.s3]
    }

    /// `(S0 I + S1 σz + S2 σx + S3 σy)/2`.
    fn operator(&self) -> ComplexMat2 {
        ComplexMat2::from_pauli_components(self.s0, [self.s2, self.s3, self.s1])
    }
}

/// Detected intensity behind a rotating quarter-wave plate and a fixed polarizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarimeterTrace {
    pub angles: Vec<f64>,
    pub intensities: Vec<f64>,
}

impl PolarimeterTrace {
    /// Two-column CSV `angle_rad,intensity`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "angle_rad,intensity")?;
        for (a, i) in self.angles.iter().zip(&self.intensities) {
            writeln!(w, "{a},{i}")?;
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let n = self.angles.len();
        if n != self.intensities.len() {
            return Err(invalid("trace angles and intensities differ in length"));
        }
        if n < 8 {
            return Err(invalid(format!("trace needs at least 8 samples, got {n}")));
        }
        let step = 2.0 * PI / n as f64;
        for w in self.angles.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-9 {
                return Err(invalid("trace angles must be uniformly spaced over one full turn"));
            }
        }
        if self.intensities.iter().any(|i| !i.is_finite()) {
            return Err(invalid("trace intensities must be finite"));
        }
        Ok(())
    }
}

fn analyzer_effect(alpha: f64, retardance: f64) -> Result<Effect> {
    Effect::after_unitary(&waveplate_unitary(alpha, retardance)?)
}

fn intensity(stokes: &StokesVector, e: &Effect) -> f64 {
    (stokes.operator() * *e.mat()).trace().re
}

/// Samples `I(α_k) = Tr[M(S) E(α_k)]` at `α_k = 2πk/n`, where the plate has
/// retardance `π/2 + true_retardance_deviation`.
pub fn polarimeter_trace(stokes: &StokesVector, true_retardance_deviation: f64, n_samples: usize) -> Result<PolarimeterTrace> {
    ensure_finite("retardance deviation", true_retardance_deviation)?;
    if n_samples < 8 {
        return Err(invalid(format!("trace needs at least 8 samples, got {n_samples}")));
    }
    let gamma = FRAC_PI_2 + true_retardance_deviation;
    let angles: Vec<f64> = (0..n_samples).map(|k| 2.0 * PI * k as f64 / n_samples as f64).collect();
    let intensities = angles
        .iter()
        .map(|&a| analyzer_effect(a, gamma).map(|e| intensity(stokes, &e).max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PolarimeterTrace { angles, intensities })
}

/// `[mean, cos 2α, sin 2α, cos 4α, sin 4α]` Fourier coefficients.
fn fourier_coefficients(angles: &[f64], values: &[f64]) -> [f64; 5] {
    let n = values.len() as f64;
    let mut c = [0.0; 5];
    for (&a, &v) in angles.iter().zip(values) {
        c[0] += v;
        c[1] += v * (2.0 * a).cos();
        c[2] += v * (2.0 * a).sin();
        c[3] += v * (4.0 * a).cos();
        c[4] += v * (4.0 * a).sin();
    }
    c[0] /= n;
    for x in &mut c[1..] {
        *x *= 2.0 / n;
    }
    c
}

/// Fourier analysis of a trace under the assumed retardance
/// `π/2 + assumed_retardance_deviation`.
///
/// The coefficient map is obtained by pushing the four unit Stokes vectors
/// through the forward model at the trace's own angles and is inverted by
/// least squares. The result can lie outside the Poincaré ball when the
/// assumed and true retardances differ.
pub fn polarimeter_reconstruct(trace: &PolarimeterTrace, assumed_retardance_deviation: f64) -> Result<StokesVector> {
    ensure_finite("retardance deviation", assumed_retardance_deviation)?;
    trace.validate()?;
    let gamma = FRAC_PI_2 + assumed_retardance_deviation;
    let effects = trace
        .angles
        .iter()
        .map(|&a| analyzer_effect(a, gamma))
        .collect::<Result<Vec<_>>>()?;
    let mut map = DMatrix::zeros(5, 4);
    for k in 0..4 {
        let mut basis = [0.0; 4];
        basis[k] = 1.0;
        let s = StokesVector::new(basis[0], basis[1], basis[2], basis[3]);
        let values: Vec<f64> = effects.iter().map(|e| intensity(&s, e)).collect();
        for (row, c) in fourier_coefficients(&trace.angles, &values).iter().enumerate() {
            map[(row, k)] = *c;
        }
    }
    let svd = map.svd(true, true);
    let sv = &svd.singular_values;
    let (max, min) = (sv.max(), sv.min());
    if !(min > 1e-6 * max) {
        return Err(Error::IllConditioned(format!(
            "retardance π/2 + {assumed_retardance_deviation} leaves the Stokes map singular (σ ratio {:.3e})",
            min / max
        )));
    }
    let coeffs = DVector::from_column_slice(&fourier_coefficients(&trace.angles, &trace.intensities));
    let s = svd
        .solve(&coeffs, 1e-12 * max)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    Ok(StokesVector::new(s[0], s[1], s[2], s[3]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{BlochVector, PureState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zero() -> StokesVector {
        StokesVector::from_density(&DensityMatrix::from_pure(&PureState::zero()), 1.0)
    }

    #[test]
    fn unpolarized_trace_is_flat() {
        let s = StokesVector::from_density(&DensityMatrix::maximally_mixed(), 2.0);
        let t = polarimeter_trace(&s, 0.3, DEFAULT_TRACE_SAMPLES).unwrap();
        assert!(t.intensities.iter().all(|i| (i - 1.0).abs() < 1e-12));
        let r = polarimeter_reconstruct(&t, 0.0).unwrap();
        assert!(r.degree_of_polarization() < 1e-12);
    }

    #[test]
    fn horizontal_light_closed_form() {
        let t = polarimeter_trace(&zero(), 0.0, 8).unwrap();
        for (a, i) in t.angles.iter().zip(&t.intensities) {
            let expected = 1.0 - (2.0 * a).sin().powi(2) / 2.0;
            assert!((i - expected).abs() < 1e-12, "α={a}");
        }
        let t = polarimeter_trace(&zero(), 0.7, 16).unwrap();
        assert!((t.intensities[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matched_reconstruction_of_horizontal_light() {
        let t = polarimeter_trace(&zero(), 0.0, DEFAULT_TRACE_SAMPLES).unwrap();
        let s = polarimeter_reconstruct(&t, 0.0).unwrap().normalized();
        assert!((s.s1 - 1.0).abs() < 1e-9 && s.s2.abs() < 1e-9 && s.s3.abs() < 1e-9);
        assert!((s.degree_of_polarization() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mismatch_exceeds_unit_polarization() {
        let t = polarimeter_trace(&zero(), 5f64.to_radians(), DEFAULT_TRACE_SAMPLES).unwrap();
        let s = polarimeter_reconstruct(&t, 0.0).unwrap();
        assert!(s.degree_of_polarization() > 1.0);
    }

    #[test]
    fn round_trip_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let v = BlochVector::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let v = if rng.random_bool(0.5) { v.normalized() } else { v.scaled(rng.random_range(0.0..0.57)) };
            let rho = DensityMatrix::from_bloch(v).unwrap();
            let s = StokesVector::from_density(&rho, rng.random_range(0.5..3.0));
            let dev = rng.random_range(-0.3..0.3);
            let t = polarimeter_trace(&s, dev, DEFAULT_TRACE_SAMPLES).unwrap();
            let r = polarimeter_reconstruct(&t, dev).unwrap();
            for (a, b) in r.to_array().iter().zip(s.to_array()) {
                assert!((a - b).abs() <= 1e-8 * s.s0, "{r:?} vs {s:?}");
            }
        }
    }

    #[test]
    fn singular_retardance_is_rejected() {
        let t = polarimeter_trace(&zero(), 0.0, 64).unwrap();
        assert!(matches!(polarimeter_reconstruct(&t, -FRAC_PI_2), Err(Error::IllConditioned(_))));
        assert!(matches!(polarimeter_reconstruct(&t, FRAC_PI_2), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn malformed_traces() {
        assert!(polarimeter_trace(&zero(), 0.0, 7).is_err());
        let mut t = polarimeter_trace(&zero(), 0.0, 16).unwrap();
        t.intensities.pop();
        assert!(polarimeter_reconstruct(&t, 0.0).is_err());
    }

    #[test]
    fn csv_export() {
        let t = polarimeter_trace(&zero(), 0.0, 8).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("angle_rad,intensity\n0,1\n"));
        assert_eq!(text.lines().count(), 9);
    }
}
