//! Self-calibration of measurement models from the purity artifact.

mod gauge;
mod landscape;

pub use gauge::{bloch_rotation, gauge_unitary, unitary_from_rotation};
pub use landscape::{landscape, minimum_basin, BasinStats, LandscapeAxis, LandscapeGrid};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measurement::{effects_from_model, ErrorModel, MeasurementScheme, WaveplateRole};
use crate::optim::{
    argmin, covariance_search, latin_hypercube, nelder_mead, pattern_search, Bounds, CovarianceOptions, NelderMeadOptions,
    PatternSearchOptions,
};
use crate::qubit::{purity, ComplexMat2, DensityMatrix};
use crate::reconstruction::{maxlik, MaxLikOptions, MaxLikResult, Tomogram};

/// Cost reported when a reconstruction inside a cost evaluation fails.
pub const SENTINEL_COST: f64 = 1.0;

/// Initial CMA-ES step of the refinement stage, as a fraction of the bound half-widths.
const REFINE_SIGMA: f64 = 0.3;
/// The refinement stops at this cost, far below any physical purity spread.
const REFINE_TARGET: f64 = 1e-12;

/// `max P − min P` over the ensemble.
pub fn purity_modulation(states: &[DensityMatrix]) -> Result<f64> {
    if states.len() < 2 {
        return Err(invalid(format!(
            "purity modulation needs at least 2 states, got {}",
            states.len()
        )));
    }
    let (lo, hi) = states
        .iter()
        .map(purity)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));
    Ok(hi - lo)
}

/// Lowest purity in the ensemble.
pub fn min_purity(states: &[DensityMatrix]) -> Result<f64> {
    if states.is_empty() {
        return Err(invalid("no states"));
    }
    Ok(states.iter().map(purity).fold(f64::INFINITY, f64::min))
}

/// Ensemble statistic used as the artifact measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub enum CostKind {
    #[default]
    PurityModulation,
    MinPurity,
}

impl CostKind {
    pub fn evaluate(self, states: &[DensityMatrix]) -> Result<f64> {
        match self {
            CostKind::PurityModulation => purity_modulation(states),
            CostKind::MinPurity => min_purity(states),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostValue {
    pub value: f64,
    /// False when some reconstruction did not converge and `value` is the sentinel.
    pub converged: bool,
}

/// Reconstructs every tomogram with the effects realized by `model` on `scheme`.
pub fn reconstruct_all(
    model: &ErrorModel,
    tomograms: &[Tomogram],
    scheme: &MeasurementScheme,
    opts: &MaxLikOptions,
) -> Result<Vec<MaxLikResult>> {
    let effects = effects_from_model(model, scheme)?;
    tomograms.par_iter().map(|t| maxlik(t, &effects, opts)).collect()
}

/// Purity modulation of the ensemble reconstructed under the assumed `params`.
///
/// A reconstruction that hits its iteration cap turns the whole evaluation
/// into [`SENTINEL_COST`] with `converged = false`.
pub fn calibration_cost(params: &ErrorModel, tomograms: &[Tomogram], scheme: &MeasurementScheme) -> Result<CostValue> {
    Objective::new(params.variant().zero(), tomograms, scheme).cost_value(params)
}

/// Cost evaluator shared by the optimizers and landscape scans.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    template: ErrorModel,
    tomograms: &'a [Tomogram],
    scheme: &'a MeasurementScheme,
    pub kind: CostKind,
    pub maxlik: MaxLikOptions,
}

impl<'a> Objective<'a> {
    /// `template` fixes the model variant; its parameter values are unused.
    pub fn new(template: ErrorModel, tomograms: &'a [Tomogram], scheme: &'a MeasurementScheme) -> Self {
        Self {
            template,
            tomograms,
            scheme,
            kind: CostKind::PurityModulation,
            maxlik: MaxLikOptions::default(),
        }
    }

    pub fn with_kind(mut self, kind: CostKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn model(&self, params: &[f64]) -> Result<ErrorModel> {
        self.template.variant().with_params(params)
    }

    pub fn cost_value(&self, model: &ErrorModel) -> Result<CostValue> {
        if model.variant() != self.template.variant() {
            return Err(invalid("model variant differs from the objective's"));
        }
        if self.tomograms.is_empty() {
            return Err(invalid("no tomograms"));
        }
        let results = reconstruct_all(model, self.tomograms, self.scheme, &self.maxlik)?;
        if results.iter().any(|r| !r.converged) {
            return Ok(CostValue {
                value: SENTINEL_COST,
                converged: false,
            });
        }
        let states: Vec<DensityMatrix> = results.into_iter().map(|r| r.state).collect();
        Ok(CostValue {
            value: self.kind.evaluate(&states)?,
            converged: true,
        })
    }

    /// Cost at a flat parameter vector; any failure maps to the sentinel.
    pub fn eval(&self, params: &[f64]) -> f64 {
        self.model(params)
            .and_then(|m| self.cost_value(&m))
            .map(|c| c.value)
            .unwrap_or(SENTINEL_COST)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub enum PollDirections {
    #[default]
    Ortho2n,
}

/// Optional stage run from the best pattern-search point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub enum Refinement {
    #[default]
    None,
    /// CMA-ES with the remaining evaluation budget, for narrow kinked valleys
    /// where the poll stalls.
    Covariance,
}

/// Settings of the global search. Empty bounds mean ±0.5 around zero for
/// every parameter. Mesh sizes are absolute for a bound width of 1 and scale
/// with each parameter's width otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub lower_bound: Vec<f64>,
    pub upper_bound: Vec<f64>,
    pub lh_samples: usize,
    pub max_evaluations: usize,
    pub poll_directions: PollDirections,
    pub seed: u64,
    pub local_starts: usize,
    pub mesh_initial: f64,
    pub mesh_min: f64,
    pub refinement: Refinement,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            lower_bound: Vec::new(),
            upper_bound: Vec::new(),
            lh_samples: 1100,
            max_evaluations: 100_000,
            poll_directions: PollDirections::Ortho2n,
            seed: 0,
            local_starts: 4,
            mesh_initial: 0.1,
            mesh_min: 1e-5,
            refinement: Refinement::None,
        }
    }
}

impl OptimizerConfig {
    pub fn bounds(&self, dim: usize) -> Result<Bounds> {
        if self.lower_bound.is_empty() && self.upper_bound.is_empty() {
            return Bounds::symmetric(dim, 0.5);
        }
        if self.lower_bound.len() != dim || self.upper_bound.len() != dim {
            return Err(invalid(format!(
                "optimizer bounds have lengths {}/{}, model has {dim} parameters",
                self.lower_bound.len(),
                self.upper_bound.len()
            )));
        }
        Bounds::new(self.lower_bound.clone(), self.upper_bound.clone())
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.bounds(dim)?;
        if self.lh_samples == 0 {
            return Err(invalid("lhSamples must be at least 1"));
        }
        if self.local_starts == 0 {
            return Err(invalid("localStarts must be at least 1"));
        }
        if !(self.mesh_initial > 0.0 && self.mesh_min > 0.0 && self.mesh_min <= self.mesh_initial) {
            return Err(invalid("need 0 < meshMin ≤ meshInitial"));
        }
        if self.max_evaluations < self.lh_samples {
            return Err(invalid("maxEvaluations must cover the Latin-hypercube samples"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CalibrationReport {
    pub optimal_params: ErrorModel,
    pub cost_before: f64,
    pub cost_after: f64,
    pub evaluations: usize,
    /// `(evaluation index, best cost so far)` at every improvement.
    pub cost_trace: Vec<(usize, f64)>,
    pub gauge: Option<ComplexMat2>,
    pub converged: bool,
}

impl CalibrationReport {
    /// Conjugating gauge applied to reconstructions, if one was fixed.
    pub fn with_gauge(mut self, gauge: ComplexMat2) -> Self {
        self.gauge = Some(gauge);
        self
    }
}

struct Trace {
    best: f64,
    points: Vec<(usize, f64)>,
}

impl Trace {
    fn new(first: f64) -> Self {
        Self {
            best: first,
            points: vec![(0, first)],
        }
    }

    fn offer(&mut self, evaluation: usize, value: f64) {
        if value < self.best {
            self.best = value;
            self.points.push((evaluation, value));
        }
    }
}

/// Latin-hypercube scan followed by pattern searches from the best samples.
///
/// `nominal` is the initially assumed model; its cost is `costBefore` and it
/// is kept if nothing beats it.
pub fn calibrate_global(
    tomograms: &[Tomogram],
    scheme: &MeasurementScheme,
    nominal: &ErrorModel,
    cfg: &OptimizerConfig,
) -> Result<CalibrationReport> {
    calibrate_global_with(&Objective::new(nominal.clone(), tomograms, scheme), nominal, cfg)
}

pub fn calibrate_global_with(objective: &Objective, nominal: &ErrorModel, cfg: &OptimizerConfig) -> Result<CalibrationReport> {
    let dim = nominal.variant().param_count();
    cfg.validate(dim)?;
    let bounds = cfg.bounds(dim)?;
    let x_nominal = nominal.params();
    let cost_before = objective.cost_value(nominal)?.value;
    let f = |x: &[f64]| objective.eval(x);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples = latin_hypercube(&bounds, cfg.lh_samples, &mut rng);
    let values: Vec<f64> = samples.par_iter().map(|x| f(x)).collect();
    let mut evaluations = 1 + samples.len();
    let mut trace = Trace::new(cost_before);
    for (i, v) in values.iter().enumerate() {
        trace.offer(i + 2, *v);
    }

    // seeds: best samples by cost, lowest index on ties
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let starts: Vec<usize> = order.into_iter().take(cfg.local_starts).collect();

    let mut best_x = x_nominal.clone();
    let mut best_f = cost_before;
    let mut converged = true;
    for (k, &s) in starts.iter().enumerate() {
        let remaining = cfg.max_evaluations.saturating_sub(evaluations);
        let share = remaining / (starts.len() - k);
        if share == 0 {
            converged = false;
            break;
        }
        // restart from each converged point with a fresh mesh and fresh poll
        // bases until a whole round brings no improvement
        let budget_end = evaluations + share;
        let (mut x, mut fx) = (samples[s].clone(), values[s]);
        for round in 0u64.. {
            let opts = PatternSearchOptions {
                mesh_initial: cfg.mesh_initial,
                mesh_min: cfg.mesh_min,
                max_evaluations: budget_end - evaluations,
                seed: cfg.seed.wrapping_add(1 + k as u64).wrapping_mul(0x9E37_79B9).wrapping_add(round),
            };
            let m = pattern_search(&f, &x, fx, &bounds, &opts);
            for &(e, v) in &m.trace {
                trace.offer(evaluations + e, v);
            }
            evaluations += m.evaluations;
            let improved = m.value < fx;
            (x, fx) = (m.x, m.value);
            if !m.converged {
                converged = false;
                break;
            }
            if !improved || evaluations >= budget_end {
                break;
            }
        }
        if fx < best_f {
            best_f = fx;
            best_x = x;
        }
    }
    if let Some(i) = argmin(&values) {
        if values[i] < best_f {
            best_f = values[i];
            best_x = samples[i].clone();
        }
    }
    if cfg.refinement == Refinement::Covariance && evaluations < cfg.max_evaluations {
        let opts = CovarianceOptions {
            sigma: REFINE_SIGMA,
            max_evaluations: cfg.max_evaluations - evaluations,
            target: REFINE_TARGET,
            seed: cfg.seed,
        };
        let m = covariance_search(&f, &best_x, best_f, &bounds, &opts);
        for &(e, v) in &m.trace {
            trace.offer(evaluations + e, v);
        }
        evaluations += m.evaluations;
        if m.value < best_f {
            (best_x, best_f) = (m.x, m.value);
        }
    }

    Ok(CalibrationReport {
        optimal_params: objective.model(&best_x)?,
        cost_before,
        cost_after: best_f,
        evaluations,
        cost_trace: trace.points,
        gauge: None,
        converged,
    })
}

/// Options of the local (simplex) calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct LocalConfig {
    /// Box for the search; `None` leaves it unconstrained.
    pub bounds: Option<Bounds>,
    pub initial_step: f64,
    pub max_evaluations: usize,
}

impl Default for LocalConfig {
    fn default() -> Self {
        Self {
            bounds: None,
            initial_step: 0.05,
            max_evaluations: 4000,
        }
    }
}

/// Nelder–Mead descent from `start`, whose cost is `costBefore`.
pub fn calibrate_local(
    tomograms: &[Tomogram],
    scheme: &MeasurementScheme,
    start: &ErrorModel,
    cfg: &LocalConfig,
) -> Result<CalibrationReport> {
    calibrate_local_with(&Objective::new(start.clone(), tomograms, scheme), start, cfg)
}

pub fn calibrate_local_with(objective: &Objective, start: &ErrorModel, cfg: &LocalConfig) -> Result<CalibrationReport> {
    let x0 = start.params();
    if let Some(b) = &cfg.bounds {
        if b.dim() != x0.len() {
            return Err(invalid("local bounds dimension differs from the model"));
        }
    }
    let cost_before = objective.cost_value(start)?.value;
    let mut opts = NelderMeadOptions::new(vec![cfg.initial_step; x0.len()]);
    opts.max_evaluations = cfg.max_evaluations;
    let m = nelder_mead(|x: &[f64]| objective.eval(x), &x0, &opts, cfg.bounds.as_ref());
    let mut trace = Trace::new(cost_before);
    for &(e, v) in &m.trace {
        trace.offer(e, v);
    }
    let (x, value) = if m.value <= cost_before { (m.x, m.value) } else { (x0, cost_before) };
    Ok(CalibrationReport {
        optimal_params: objective.model(&x)?,
        cost_before,
        cost_after: value,
        evaluations: m.evaluations,
        cost_trace: trace.points,
        gauge: None,
        converged: m.converged,
    })
}

/// Calibrates preparation-side waveplate retardances.
///
/// The tomograms are indexed by the former probe states, which now play the
/// role of unknown states, and each setting is a waveplate-prepared state
/// used as an effect. The cost machinery is the local one.
pub fn reversed_calibration(
    prep_tomograms: &[Tomogram],
    scheme: &MeasurementScheme,
    start: &ErrorModel,
    cfg: &LocalConfig,
) -> Result<CalibrationReport> {
    match scheme {
        MeasurementScheme::Waveplate(settings) if settings.iter().all(|s| s.role == WaveplateRole::Preparation) => {
            calibrate_local(prep_tomograms, scheme, start, cfg)
        }
        _ => Err(invalid("reversed calibration needs preparation-role waveplate settings")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::ModelVariant;
    use crate::probes::{probe_set, ProbeKind};
    use crate::qubit::PureState;
    use crate::reconstruction::simulate_tomogram;

    fn tomograms(truth: &ErrorModel, kind: ProbeKind, scheme: &MeasurementScheme) -> Vec<Tomogram> {
        let effects = effects_from_model(truth, scheme).unwrap();
        probe_set(kind)
            .unwrap()
            .states
            .iter()
            .map(|s| simulate_tomogram(&DensityMatrix::from_pure(s), &effects, None, None).unwrap())
            .collect()
    }

    #[test]
    fn modulation_examples() {
        let zero = DensityMatrix::from_pure(&PureState::zero());
        let plus = DensityMatrix::from_pure(
            &PureState::normalized([std::f64::consts::FRAC_1_SQRT_2.into(), std::f64::consts::FRAC_1_SQRT_2.into()])
                .unwrap(),
        );
        assert!(purity_modulation(&[zero, plus]).unwrap().abs() < 1e-15);
        let m = purity_modulation(&[zero, DensityMatrix::maximally_mixed()]).unwrap();
        assert!((m - 0.5).abs() < 1e-15);
        assert!(purity_modulation(&[zero]).is_err());
        assert_eq!(min_purity(&[zero, DensityMatrix::maximally_mixed()]).unwrap(), 0.5);
    }

    #[test]
    fn cost_vanishes_at_truth() {
        let scheme = MeasurementScheme::pauli();
        let truth = ErrorModel::Multiplicative {
            delta: 0.02,
            epsilon: -0.04,
        };
        let t = tomograms(&truth, ProbeKind::Cube8, &scheme);
        let at_truth = calibration_cost(&truth, &t, &scheme).unwrap();
        assert!(at_truth.converged && at_truth.value <= 1e-6);
        let nominal = calibration_cost(&ModelVariant::Multiplicative.zero(), &t, &scheme).unwrap();
        assert!(nominal.value > 1e-4);
    }

    #[test]
    fn sentinel_on_iteration_cap() {
        let scheme = MeasurementScheme::pauli();
        let truth = ErrorModel::Multiplicative {
            delta: 0.02,
            epsilon: -0.04,
        };
        let t = tomograms(&truth, ProbeKind::Cube8, &scheme);
        let mut obj = Objective::new(truth.clone(), &t, &scheme);
        obj.maxlik.max_iterations = 1;
        let c = obj.cost_value(&ModelVariant::Multiplicative.zero()).unwrap();
        assert_eq!(c.value, SENTINEL_COST);
        assert!(!c.converged);
    }

    #[test]
    fn local_recovers_multiplicative_truth() {
        let scheme = MeasurementScheme::pauli();
        let truth = ErrorModel::Multiplicative {
            delta: 0.02,
            epsilon: -0.04,
        };
        let t = tomograms(&truth, ProbeKind::Cube8, &scheme);
        let r = calibrate_local(&t, &scheme, &ModelVariant::Multiplicative.zero(), &LocalConfig::default()).unwrap();
        let p = r.optimal_params.params();
        assert!((p[0] - 0.02).abs() < 1e-3 && (p[1] + 0.04).abs() < 1e-3, "{p:?}");
        assert!(r.cost_after <= r.cost_before);
        assert!(r.cost_trace.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn global_search_is_reproducible_and_monotone() {
        let scheme = MeasurementScheme::pauli();
        let truth = ErrorModel::Multiplicative {
            delta: 0.1,
            epsilon: -0.2,
        };
        let t = tomograms(&truth, ProbeKind::Cube8, &scheme);
        let cfg = OptimizerConfig {
            lh_samples: 40,
            max_evaluations: 1500,
            local_starts: 2,
            seed: 3,
            ..Default::default()
        };
        let a = calibrate_global(&t, &scheme, &ModelVariant::Multiplicative.zero(), &cfg).unwrap();
        let b = calibrate_global(&t, &scheme, &ModelVariant::Multiplicative.zero(), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.evaluations <= cfg.max_evaluations);
        assert!(a.cost_after <= a.cost_before);
        assert!(a.cost_trace.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 > w[0].0));
        let p = a.optimal_params.params();
        assert!((p[0] - 0.1).abs() < 1e-2 && (p[1] + 0.2).abs() < 1e-2, "{p:?}");
    }

    #[test]
    fn config_validation() {
        let cfg = OptimizerConfig::default();
        cfg.validate(12).unwrap();
        let bad = OptimizerConfig {
            lower_bound: vec![0.0],
            upper_bound: vec![1.0],
            ..Default::default()
        };
        assert!(bad.validate(2).is_err());
        let bad = OptimizerConfig {
            mesh_min: 1.0,
            ..Default::default()
        };
        assert!(bad.validate(2).is_err());
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"pollDirections\":\"ortho2n\""));
        assert!(serde_json::from_str::<OptimizerConfig>(r#"{"lhSample": 3}"#).is_err());
    }

    #[test]
    fn reversed_requires_preparation_settings() {
        let scheme = MeasurementScheme::pauli();
        let t = tomograms(&ModelVariant::Multiplicative.zero(), ProbeKind::Cube8, &scheme);
        assert!(reversed_calibration(&t, &scheme, &ModelVariant::WaveplateRetardance.zero(), &LocalConfig::default()).is_err());
    }
}
