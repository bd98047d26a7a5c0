//! Exhaustive likelihood search over the Bloch ball, a slow reference for
//! checking the iterative estimator.

use rayon::prelude::*;

use super::Tomogram;
use crate::error::{invalid, Result};
use crate::qubit::{BlochVector, DensityMatrix, Effect, C64};

/// `Tr(ρE)` for the Bloch point `r`, computed from the raw matrix entries.
fn prob(e: &Effect, r: [f64; 3]) -> f64 {
    let m = e.mat();
    let rho = [
        [C64::new((1.0 + r[2]) / 2.0, 0.0), C64::new(r[0] / 2.0, -r[1] / 2.0)],
        [C64::new(r[0] / 2.0, r[1] / 2.0), C64::new((1.0 - r[2]) / 2.0, 0.0)],
    ];
    let mut t = C64::new(0.0, 0.0);
    for (i, row) in rho.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t += v * m.get(j, i);
        }
    }
    t.re
}

/// Log-likelihood of the Bloch point `r`, probabilities clamped to `[1e-12, 1 − 1e-12]`.
pub fn grid_log_likelihood(t: &Tomogram, effects: &[Effect], r: [f64; 3]) -> f64 {
    t.per_setting
        .iter()
        .map(|s| {
            let p = prob(&effects[s.effect_index], r).clamp(1e-12, 1.0 - 1e-12);
            s.f_plus * p.ln() + s.f_minus * (1.0 - p).ln()
        })
        .sum()
}

fn better(a: (f64, [f64; 3]), b: (f64, [f64; 3])) -> (f64, [f64; 3]) {
    if b.0 > a.0 {
        b
    } else {
        a
    }
}

/// Best lattice point with spacing `h` inside the ball, within `half` of `center`.
fn lattice_argmax(t: &Tomogram, effects: &[Effect], center: [f64; 3], half: f64, h: f64) -> [f64; 3] {
    let n = (half / h).round() as i64;
    let axis: Vec<f64> = (-n..=n).map(|k| k as f64 * h).collect();
    axis.par_iter()
        .map(|&dx| {
            let mut best = (f64::NEG_INFINITY, [0.0; 3]);
            for &dy in &axis {
                for &dz in &axis {
                    let r = [center[0] + dx, center[1] + dy, center[2] + dz];
                    if r[0] * r[0] + r[1] * r[1] + r[2] * r[2] > 1.0 {
                        continue;
                    }
                    best = better(best, (grid_log_likelihood(t, effects, r), r));
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, [0.0; 3]), better)
        .1
}

/// Best point of an angular grid on the unit sphere within `half` radians of `dir`.
fn sphere_argmax(t: &Tomogram, effects: &[Effect], dir: [f64; 3], half: f64, h: f64) -> [f64; 3] {
    let (theta0, phi0) = BlochVector::from_array(dir).angles();
    let n = (half / h).round() as i64;
    (-n..=n)
        .into_par_iter()
        .map(|i| {
            let theta = (theta0 + i as f64 * h).clamp(0.0, std::f64::consts::PI);
            let mut best = (f64::NEG_INFINITY, [0.0; 3]);
            for j in -n..=n {
                let phi = phi0 + j as f64 * h / theta.sin().max(h);
                let r = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                best = better(best, (grid_log_likelihood(t, effects, r), r));
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, [0.0; 3]), better)
        .1
}

/// Brute force: a 0.01 lattice over the ball, then a 0.0005 lattice around
/// its winner. Near the boundary a lattice cannot follow the sphere, so a
/// fine angular grid on the surface competes as well.
pub fn grid_search(t: &Tomogram, effects: &[Effect]) -> Result<DensityMatrix> {
    t.validate()?;
    if let Some(s) = t.per_setting.iter().find(|s| s.effect_index >= effects.len()) {
        return Err(invalid(format!(
            "setting refers to effect {} of {}",
            s.effect_index,
            effects.len()
        )));
    }
    let coarse = lattice_argmax(t, effects, [0.0; 3], 1.0, 0.01);
    let mut best = lattice_argmax(t, effects, coarse, 0.01, 0.0005);
    if BlochVector::from_array(coarse).norm() > 0.97 {
        let surface = sphere_argmax(t, effects, coarse, 0.03, 0.0002);
        if grid_log_likelihood(t, effects, surface) > grid_log_likelihood(t, effects, best) {
            best = surface;
        }
    }
    DensityMatrix::from_bloch(BlochVector::from_array(best))
}
