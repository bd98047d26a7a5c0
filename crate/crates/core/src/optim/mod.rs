//! Derivative-free minimizers used by the waveplate solver and the calibrators.

mod covariance;
mod lhs;
mod nelder_mead;
mod pattern_search;

pub use covariance::{covariance_search, CovarianceOptions};
pub use lhs::latin_hypercube;
pub use nelder_mead::{nelder_mead, NelderMeadOptions};
pub use pattern_search::{pattern_search, PatternSearchOptions};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(invalid("bounds must be non-empty and of equal length"));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !l.is_finite() || !u.is_finite() || l >= u {
                return Err(invalid(format!("invalid bound pair [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[-half_width, half_width]^dim`.
    pub fn symmetric(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    /// `center ± half_widths`.
    pub fn around(center: &[f64], half_widths: &[f64]) -> Result<Self> {
        if center.len() != half_widths.len() {
            return Err(invalid("center and half widths differ in length"));
        }
        Self::new(
            center.iter().zip(half_widths).map(|(c, h)| c - h).collect(),
            center.iter().zip(half_widths).map(|(c, h)| c + h).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i])
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

/// Outcome of a minimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// `(evaluation index, best value so far)` recorded at every improvement.
    pub trace: Vec<(usize, f64)>,
}

/// Index of the smallest value; ties resolve to the lowest index and NaN never wins.
pub(crate) fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some(b) if values[b] <= *v => {}
            _ => best = Some(i),
        }
    }
    best
}
