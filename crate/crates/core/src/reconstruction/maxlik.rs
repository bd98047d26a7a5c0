use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::Tomogram;
use crate::error::{invalid, Result};
use crate::qubit::{BlochVector, ComplexMat2, DensityMatrix, Effect};

/// Lower clamp on outcome probabilities inside logarithms and ratios.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Backtracking halvings tried for the Newton candidates.
const MAX_BACKTRACK: usize = 40;
/// Dilution halvings tried for the RρR candidate.
const MAX_DILUTION_HALVINGS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct MaxLikOptions {
    pub max_iterations: usize,
    pub trace_distance_tol: f64,
    pub dilution: f64,
}

impl Default for MaxLikOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            trace_distance_tol: 1e-10,
            dilution: 1.0,
        }
    }
}

impl MaxLikOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(invalid("maxIterations must be at least 1"));
        }
        if !(self.trace_distance_tol > 0.0) {
            return Err(invalid("traceDistanceTol must be positive"));
        }
        if !(self.dilution > 0.0 && self.dilution <= 1.0) {
            return Err(invalid("dilution must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MaxLikResult {
    pub state: DensityMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
}

/// The likelihood restricted to Bloch coordinates: `p_j = (t_j + n_j·r)/2`.
struct Problem {
    t: Vec<f64>,
    n: Vec<Vector3<f64>>,
    f_plus: Vec<f64>,
    f_minus: Vec<f64>,
}

impl Problem {
    fn new(tomogram: &Tomogram, effects: &[Effect]) -> Result<Self> {
        tomogram.validate()?;
        let m = tomogram.len();
        let mut p = Problem {
            t: Vec::with_capacity(m),
            n: Vec::with_capacity(m),
            f_plus: Vec::with_capacity(m),
            f_minus: Vec::with_capacity(m),
        };
        for s in &tomogram.per_setting {
            let e = effects.get(s.effect_index).ok_or_else(|| {
                invalid(format!(
                    "tomogram references effect {} but only {} effects were given",
                    s.effect_index,
                    effects.len()
                ))
            })?;
            let (t, n) = e.pauli_components();
            p.t.push(t);
            p.n.push(Vector3::from(n));
            p.f_plus.push(s.f_plus);
            p.f_minus.push(s.f_minus);
        }
        Ok(p)
    }

    fn probability(&self, j: usize, r: &Vector3<f64>) -> f64 {
        (self.t[j] + self.n[j].dot(r)) / 2.0
    }

    fn log_likelihood(&self, r: &Vector3<f64>) -> f64 {
        let mut l = 0.0;
        for j in 0..self.t.len() {
            let p = self.probability(j, r).clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR);
            if self.f_plus[j] > 0.0 {
                l += self.f_plus[j] * p.ln();
            }
            if self.f_minus[j] > 0.0 {
                l += self.f_minus[j] * (1.0 - p).ln();
            }
        }
        l
    }

    fn gradient_hessian(&self, r: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
        let mut g = Vector3::zeros();
        let mut h = Matrix3::zeros();
        for j in 0..self.t.len() {
            let p = self.probability(j, r).clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR);
            let q = 1.0 - p;
            let n = &self.n[j];
            g += n * ((self.f_plus[j] / p - self.f_minus[j] / q) / 2.0);
            h -= n * n.transpose() * ((self.f_plus[j] / (p * p) + self.f_minus[j] / (q * q)) / 4.0);
        }
        (g, h)
    }

    /// One diluted `R ρ R` step, `R = (1/m) Σ_j [f⁺_j/p_j e_j + f⁻_j/(1−p_j) (I − e_j)]`.
    fn rrr_step(&self, r: &Vector3<f64>, dilution: f64) -> Vector3<f64> {
        let m = self.t.len() as f64;
        let mut trace = 0.0;
        let mut vec = Vector3::zeros();
        for j in 0..self.t.len() {
            let p = self.probability(j, r).clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR);
            let a = self.f_plus[j] / p;
            let b = self.f_minus[j] / (1.0 - p);
            trace += a * self.t[j] + b * (2.0 - self.t[j]);
            vec += self.n[j] * (a - b);
        }
        // R − I in Pauli components, then A = I + d (R − I)
        let a_trace = 2.0 + dilution * (trace / m - 2.0);
        let a_vec = vec * (dilution / m);
        let a = ComplexMat2::from_pauli_components(a_trace, [a_vec.x, a_vec.y, a_vec.z]);
        let rho = ComplexMat2::from_pauli_components(1.0, [r.x, r.y, r.z]);
        let next = a * rho * a;
        let (t, n) = next.pauli_components();
        Vector3::from(n) / t
    }
}

fn project_to_ball(r: Vector3<f64>) -> Vector3<f64> {
    let n = r.norm();
    if n > 1.0 {
        r / n
    } else {
        r
    }
}

/// `L(ρ) = Σ_j [f⁺_j log p_j + f⁻_j log(1 − p_j)]` with the probability floor applied.
pub fn log_likelihood(tomogram: &Tomogram, effects: &[Effect], rho: &DensityMatrix) -> Result<f64> {
    let p = Problem::new(tomogram, effects)?;
    Ok(p.log_likelihood(&Vector3::from(rho.bloch().to_array())))
}

/// Maximum-likelihood state estimate.
///
/// Each iteration forms three candidates and keeps the one with the highest
/// likelihood: the diluted `RρR` update (dilution halved until the
/// likelihood does not drop), a backtracked Newton step in Bloch
/// coordinates projected onto the ball, and, on the sphere, a Newton step
/// constrained to the sphere. The `RρR` fixed point is the likelihood
/// maximum but approaches pure estimates only sublinearly; the Newton
/// candidates give quadratic convergence without changing the optimum.
/// The likelihood never decreases by more than rounding between iterations.
pub fn maxlik(tomogram: &Tomogram, effects: &[Effect], opts: &MaxLikOptions) -> Result<MaxLikResult> {
    opts.validate()?;
    let problem = Problem::new(tomogram, effects)?;
    let slack = |l: f64| 1e-14 * (1.0 + l.abs());

    let mut r = Vector3::zeros();
    let mut l = problem.log_likelihood(&r);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let mut candidates: Vec<(Vector3<f64>, f64)> = Vec::with_capacity(3);

        let mut d = opts.dilution;
        for _ in 0..=MAX_DILUTION_HALVINGS {
            let c = project_to_ball(problem.rrr_step(&r, d));
            let lc = problem.log_likelihood(&c);
            if lc >= l - slack(l) {
                candidates.push((c, lc));
                break;
            }
            d /= 2.0;
        }

        let (g, h) = problem.gradient_hessian(&r);
        if let Some(h_inv) = h.try_inverse() {
            let step = -(h_inv * g);
            if step.iter().all(|v| v.is_finite()) {
                let mut alpha = 1.0;
                for _ in 0..MAX_BACKTRACK {
                    let c = project_to_ball(r + step * alpha);
                    let lc = problem.log_likelihood(&c);
                    if lc >= l - slack(l) {
                        candidates.push((c, lc));
                        break;
                    }
                    alpha /= 2.0;
                }
            }
        }

        let norm = r.norm();
        if norm > 1.0 - 1e-9 {
            let u = r / norm;
            let mu = u.dot(&g);
            if mu > 0.0 {
                if let Some(c) = sphere_newton(&problem, &u, &g, &h, mu, l, slack(l)) {
                    candidates.push(c);
                }
            }
        }

        let best = candidates
            .into_iter()
            .filter(|(c, lc)| lc.is_finite() && c.iter().all(|v| v.is_finite()))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((next, l_next)) = best else {
            // nothing improves on a concave objective: we are at the maximum
            converged = true;
            break;
        };
        let step = (next - r).norm() / 2.0;
        r = next;
        l = l_next;
        if step < opts.trace_distance_tol {
            converged = true;
            break;
        }
    }

    let state = DensityMatrix::from_bloch(BlochVector::new(r.x, r.y, r.z))?;
    Ok(MaxLikResult {
        state,
        iterations,
        converged,
        log_likelihood: l,
    })
}

/// Newton step on the unit sphere from the KKT system
/// `[H − μI, u; uᵀ, 0] [Δ; ν] = [−(g − μu); 0]`, retracted by normalization.
fn sphere_newton(
    problem: &Problem,
    u: &Vector3<f64>,
    g: &Vector3<f64>,
    h: &Matrix3<f64>,
    mu: f64,
    l: f64,
    slack: f64,
) -> Option<(Vector3<f64>, f64)> {
    let hm = h - Matrix3::identity() * mu;
    let mut k = Matrix4::zeros();
    k.fixed_view_mut::<3, 3>(0, 0).copy_from(&hm);
    for i in 0..3 {
        k[(i, 3)] = u[i];
        k[(3, i)] = u[i];
    }
    let gt = g - u * mu;
    let rhs = Vector4::new(-gt.x, -gt.y, -gt.z, 0.0);
    let sol = k.lu().solve(&rhs)?;
    let delta = Vector3::new(sol[0], sol[1], sol[2]);
    if !delta.iter().all(|v| v.is_finite()) {
        return None;
    }
    let mut alpha = 1.0;
    for _ in 0..MAX_BACKTRACK {
        let c = (u + delta * alpha).normalize();
        let lc = problem.log_likelihood(&c);
        if lc >= l - slack {
            return Some((c, lc));
        }
        alpha /= 2.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{effects_from_model, ErrorModel, MeasurementScheme};
    use crate::qubit::{fidelity_pure, purity, PureState};
    use crate::reconstruction::simulate_tomogram;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn effects(model: &ErrorModel) -> Vec<Effect> {
        effects_from_model(model, &MeasurementScheme::pauli()).unwrap()
    }

    fn nominal() -> Vec<Effect> {
        effects(&ErrorModel::Multiplicative {
            delta: 0.0,
            epsilon: 0.0,
        })
    }

    #[test]
    fn round_trip_pure_state() {
        let rho = DensityMatrix::from_pure(&PureState::zero());
        let t = simulate_tomogram(&rho, &nominal(), None, None).unwrap();
        let est = maxlik(&t, &nominal(), &MaxLikOptions::default()).unwrap();
        assert!(est.converged);
        assert!(fidelity_pure(&PureState::zero(), &est.state) >= 1.0 - 1e-8);
    }

    #[test]
    fn flat_tomogram_gives_mixed_state() {
        let t = Tomogram::from_frequencies(&[0.5; 6]).unwrap();
        let est = maxlik(&t, &nominal(), &MaxLikOptions::default()).unwrap();
        assert!(est.state.trace_distance(&DensityMatrix::maximally_mixed()) < 1e-8);
    }

    #[test]
    fn mismatched_plus_state_estimate() {
        // The inconsistent data pull the estimate against the sphere: the
        // maximizer is pure and shifted off |+⟩, and every interior point
        // nearby has lower likelihood.
        let plus = PureState::normalized([FRAC_1_SQRT_2.into(), FRAC_1_SQRT_2.into()]).unwrap();
        let truth = effects(&ErrorModel::Multiplicative {
            delta: 0.02,
            epsilon: -0.04,
        });
        let t = simulate_tomogram(&DensityMatrix::from_pure(&plus), &truth, None, None).unwrap();
        let est = maxlik(&t, &nominal(), &MaxLikOptions::default()).unwrap();
        assert!(est.converged);
        assert!((purity(&est.state) - 1.0).abs() < 1e-9);
        let r = est.state.bloch();
        assert!((r.x - 0.9936).abs() < 1e-3 && (r.y - 0.109).abs() < 2e-3 && (r.z - 0.027).abs() < 2e-3, "{r:?}");
        for k in 1..=20 {
            let shrunk = DensityMatrix::from_bloch(r.scaled(1.0 - 0.001 * k as f64)).unwrap();
            assert!(log_likelihood(&t, &nominal(), &shrunk).unwrap() < est.log_likelihood);
        }
    }

    #[test]
    fn interior_estimate_matches_linear_inversion() {
        // with consistent mixed data the maximum is the exact state
        let rho = DensityMatrix::from_bloch(BlochVector::new(0.3, -0.2, 0.5)).unwrap();
        let t = simulate_tomogram(&rho, &nominal(), None, None).unwrap();
        let est = maxlik(&t, &nominal(), &MaxLikOptions::default()).unwrap();
        assert!(est.state.trace_distance(&rho) < 1e-10);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let rho = DensityMatrix::from_bloch(BlochVector::new(0.3, -0.2, 0.5)).unwrap();
        let t = simulate_tomogram(&rho, &nominal(), None, None).unwrap();
        let opts = MaxLikOptions {
            max_iterations: 1,
            ..Default::default()
        };
        let est = maxlik(&t, &nominal(), &opts).unwrap();
        assert_eq!(est.iterations, 1);
        assert!(!est.converged);
    }

    #[test]
    fn zero_frequency_with_vanishing_probability() {
        // |0⟩ data against effects that give p = 0 for one outcome
        let t = Tomogram::from_frequencies(&[1.0, 0.0, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let est = maxlik(&t, &nominal(), &MaxLikOptions::default()).unwrap();
        assert!(est.converged);
        assert!(est.log_likelihood.is_finite());
    }

    #[test]
    fn rejects_bad_input() {
        let t = Tomogram::from_frequencies(&[0.5; 7]).unwrap();
        assert!(maxlik(&t, &nominal(), &MaxLikOptions::default()).is_err());
        let t = Tomogram::from_frequencies(&[0.5; 6]).unwrap();
        let opts = MaxLikOptions {
            dilution: 0.0,
            ..Default::default()
        };
        assert!(maxlik(&t, &nominal(), &opts).is_err());
    }
}
