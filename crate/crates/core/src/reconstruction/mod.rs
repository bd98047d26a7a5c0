//! Tomogram simulation and state reconstruction.

mod grid;
mod maxlik;
mod polarimeter;

pub use grid::{grid_log_likelihood, grid_search};
pub use maxlik::{log_likelihood, maxlik, MaxLikOptions, MaxLikResult, PROBABILITY_FLOOR};
pub use polarimeter::{
    polarimeter_reconstruct, polarimeter_trace, PolarimeterTrace, StokesVector, DEFAULT_TRACE_SAMPLES,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::qubit::{born_probability, DensityMatrix, Effect};

/// Outcome frequencies of one two-outcome setting `{e, I − e}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SettingRecord {
    pub effect_index: usize,
    pub f_plus: f64,
    pub f_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Tomogram {
    pub per_setting: Vec<SettingRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
}

impl Tomogram {
    pub fn new(per_setting: Vec<SettingRecord>, shots: Option<u64>) -> Result<Self> {
        let t = Self { per_setting, shots };
        t.validate()?;
        Ok(t)
    }

    /// One setting per effect index, `fMinus = 1 − fPlus`.
    pub fn from_frequencies(f_plus: &[f64]) -> Result<Self> {
        let records = f_plus
            .iter()
            .enumerate()
            .map(|(effect_index, &f)| SettingRecord {
                effect_index,
                f_plus: f,
                f_minus: 1.0 - f,
            })
            .collect();
        Self::new(records, None)
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_setting.is_empty() {
            return Err(invalid("tomogram has no settings"));
        }
        if self.shots == Some(0) {
            return Err(invalid("shot count must be positive"));
        }
        for (k, s) in self.per_setting.iter().enumerate() {
            let in_range = |f: f64| f.is_finite() && (0.0..=1.0).contains(&f);
            if !in_range(s.f_plus) || !in_range(s.f_minus) {
                return Err(invalid(format!("setting {k}: frequencies outside [0, 1]")));
            }
            if (s.f_plus + s.f_minus - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("setting {k}: fPlus + fMinus = {}", s.f_plus + s.f_minus)));
            }
        }
        Ok(())
    }

    pub fn f_plus(&self) -> Vec<f64> {
        self.per_setting.iter().map(|s| s.f_plus).collect()
    }

    pub fn len(&self) -> usize {
        self.per_setting.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_setting.is_empty()
    }
}

/// Born-rule tomogram of `rho`. Without `shots` the frequencies are the exact
/// probabilities; with `shots` each setting is binomially sampled from a
/// generator seeded by `seed` (0 if absent).
pub fn simulate_tomogram(
    rho: &DensityMatrix,
    true_effects: &[Effect],
    shots: Option<u64>,
    seed: Option<u64>,
) -> Result<Tomogram> {
    if true_effects.is_empty() {
        return Err(invalid("no effects to simulate"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
    let mut records = Vec::with_capacity(true_effects.len());
    for (effect_index, e) in true_effects.iter().enumerate() {
        let p = born_probability(rho, e);
        let f_plus = match shots {
            None => p,
            Some(0) => return Err(invalid("shot count must be positive")),
            Some(n) => {
                let dist = Binomial::new(n, p).map_err(|err| invalid(err.to_string()))?;
                dist.sample(&mut rng) as f64 / n as f64
            }
        };
        records.push(SettingRecord {
            effect_index,
            f_plus,
            f_minus: 1.0 - f_plus,
        });
    }
    Ok(Tomogram {
        per_setting: records,
        shots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{effects_from_model, ErrorModel, MeasurementScheme};
    use crate::qubit::PureState;

    fn nominal() -> Vec<Effect> {
        let model = ErrorModel::AdditiveAngles {
            delta: [0.0; 6],
            epsilon: [0.0; 6],
        };
        effects_from_model(&model, &MeasurementScheme::pauli()).unwrap()
    }

    #[test]
    fn exact_pauli_frequencies() {
        let t = simulate_tomogram(&DensityMatrix::from_pure(&PureState::zero()), &nominal(), None, None).unwrap();
        let expected = [1.0, 0.0, 0.5, 0.5, 0.5, 0.5];
        for (f, e) in t.f_plus().iter().zip(expected) {
            assert!((f - e).abs() < 1e-15);
        }
    }

    #[test]
    fn mixed_state_is_flat() {
        let t = simulate_tomogram(&DensityMatrix::maximally_mixed(), &nominal(), None, None).unwrap();
        assert!(t.f_plus().iter().all(|f| (f - 0.5).abs() < 1e-15));
    }

    #[test]
    fn tilted_projector() {
        let mut delta = [0.0; 6];
        delta[0] = 0.1;
        let model = ErrorModel::AdditiveAngles {
            delta,
            epsilon: [0.0; 6],
        };
        let effects = effects_from_model(&model, &MeasurementScheme::pauli()).unwrap();
        let t = simulate_tomogram(&DensityMatrix::from_pure(&PureState::zero()), &effects, None, None).unwrap();
        assert!((t.per_setting[0].f_plus - 0.05f64.cos().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn shot_noise_is_seeded() {
        let rho = DensityMatrix::from_pure(&PureState::zero());
        let a = simulate_tomogram(&rho, &nominal(), Some(1000), Some(3)).unwrap();
        let b = simulate_tomogram(&rho, &nominal(), Some(1000), Some(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_setting[0].f_plus, 1.0);
        assert!((a.per_setting[2].f_plus - 0.5).abs() < 0.1);
        a.validate().unwrap();
    }

    #[test]
    fn validation() {
        assert!(Tomogram::from_frequencies(&[]).is_err());
        assert!(Tomogram::from_frequencies(&[1.5]).is_err());
        let bad = SettingRecord {
            effect_index: 0,
            f_plus: 0.3,
            f_minus: 0.6,
        };
        assert!(Tomogram::new(vec![bad], None).is_err());
        assert!(simulate_tomogram(&DensityMatrix::maximally_mixed(), &[], None, None).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let t = simulate_tomogram(&DensityMatrix::maximally_mixed(), &nominal(), None, None).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("perSetting") && json.contains("fPlus"));
        assert_eq!(serde_json::from_str::<Tomogram>(&json).unwrap(), t);
    }
}
