//! Ensemble statistics, quantiles and seed derivation.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tomocal_core::{fidelity_pure, purity, DensityMatrix, PureState};

pub const LOWER_QUANTILE: f64 = 0.158;
pub const UPPER_QUANTILE: f64 = 0.842;

/// Nearest-rank quantile: the `⌈q·n⌉`-th smallest value (1-based), with
/// `q = 0` giving the minimum. `None` for an empty sample.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).max(1);
    Some(v[rank - 1])
}

/// Median with the 0.158 and 0.842 quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Spread {
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Self> {
        Some(Self {
            median: quantile(values, 0.5)?,
            lower: quantile(values, LOWER_QUANTILE)?,
            upper: quantile(values, UPPER_QUANTILE)?,
        })
    }
}

/// Independent stream `stream` of the root seed.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Seed of trial `index`, independent of scheduling.
pub fn trial_seed(root: u64, index: usize) -> u64 {
    derive_seed(root, index as u64)
}

/// Purity and fidelity summary of a reconstructed ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnsembleStats {
    pub min_fidelity: f64,
    pub mean_fidelity: f64,
    pub min_purity: f64,
    pub mean_purity: f64,
    pub delta_p: f64,
}

impl EnsembleStats {
    /// Statistics of `states` against the ideal `targets`.
    pub fn of(states: &[DensityMatrix], targets: &[PureState]) -> Self {
        assert_eq!(states.len(), targets.len());
        assert!(!states.is_empty());
        let n = states.len() as f64;
        let f: Vec<f64> = states.iter().zip(targets).map(|(r, t)| fidelity_pure(t, r)).collect();
        let p: Vec<f64> = states.iter().map(purity).collect();
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            min_fidelity: min(&f),
            mean_fidelity: f.iter().sum::<f64>() / n,
            min_purity: min(&p),
            mean_purity: p.iter().sum::<f64>() / n,
            delta_p: max(&p) - min(&p),
        }
    }

    /// Worst-case infidelity `1 − min F`.
    pub fn infidelity(&self) -> f64 {
        1.0 - self.min_fidelity
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_on_five_values() {
        let v = [0.5, 0.1, 0.4, 0.2, 0.3];
        // ⌈0.158·5⌉ = 1, ⌈0.5·5⌉ = 3, ⌈0.842·5⌉ = 5
        assert_eq!(quantile(&v, LOWER_QUANTILE), Some(0.1));
        assert_eq!(quantile(&v, 0.5), Some(0.3));
        assert_eq!(quantile(&v, UPPER_QUANTILE), Some(0.5));
        assert_eq!(quantile(&v, 0.0), Some(0.1));
        assert_eq!(quantile(&v, 0.2), Some(0.1));
        assert_eq!(quantile(&v, 0.21), Some(0.2));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn trial_seeds_are_stable_and_distinct() {
        assert_eq!(trial_seed(7, 3), trial_seed(7, 3));
        assert_ne!(trial_seed(7, 3), trial_seed(7, 4));
        assert_ne!(trial_seed(7, 3), trial_seed(8, 3));
    }

    #[test]
    fn perfect_ensemble() {
        let s = [PureState::zero(), PureState::one()];
        let r: Vec<DensityMatrix> = s.iter().map(DensityMatrix::from_pure).collect();
        let e = EnsembleStats::of(&r, &s);
        assert!((e.min_fidelity - 1.0).abs() < 1e-12 && e.delta_p.abs() < 1e-12);
    }
}
