use std::cell::RefCell;

use cmaes::restart::{RestartOptions, RestartStrategy};
use cmaes::{CMAESOptions, DVector};

use super::{Bounds, Minimum};

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceOptions {
    /// Initial step size as a fraction of each bound half-width.
    pub sigma: f64,
    pub max_evaluations: usize,
    /// Stops once a value at or below this is found.
    pub target: f64,
    pub seed: u64,
}

/// CMA-ES started at `x0` in coordinates scaled to the box half-widths,
/// followed by IPOP restarts from random means while the target is unmet
/// and budget remains. Samples outside the box are clamped onto it before
/// evaluation. The evaluation order is sequential, so the result depends
/// only on the seed.
pub fn covariance_search<F>(f: &F, x0: &[f64], f0: f64, bounds: &Bounds, opts: &CovarianceOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let center: Vec<f64> = (0..n).map(|i| 0.5 * (bounds.lower[i] + bounds.upper[i])).collect();
    let half: Vec<f64> = (0..n).map(|i| 0.5 * bounds.width(i)).collect();
    let to_x = |z: &DVector<f64>| -> Vec<f64> { (0..n).map(|i| center[i] + half[i] * z[i].clamp(-1.0, 1.0)).collect() };
    let z0: Vec<f64> = (0..n).map(|i| ((x0[i] - center[i]) / half[i]).clamp(-1.0, 1.0)).collect();

    let mut best = (x0.to_vec(), f0);
    if opts.max_evaluations == 0 || n == 0 {
        return Minimum {
            x: best.0,
            value: f0,
            evaluations: 0,
            converged: false,
            trace: vec![(0, f0)],
        };
    }
    let state = RefCell::new((0usize, vec![(0, f0)], best.clone()));
    let objective = |z: &DVector<f64>| {
        let x = to_x(z);
        let v = f(&x);
        let mut s = state.borrow_mut();
        s.0 += 1;
        if v < s.2 .1 {
            let e = s.0;
            s.1.push((e, v));
            s.2 = (x, v);
        }
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let built = CMAESOptions::new(z0, opts.sigma)
        .max_function_evals(opts.max_evaluations)
        .fun_target(opts.target)
        .seed(opts.seed)
        .build(&objective);
    let Ok(mut cmaes) = built else {
        return Minimum {
            x: best.0,
            value: f0,
            evaluations: 0,
            converged: false,
            trace: vec![(0, f0)],
        };
    };
    let result = cmaes.run();
    drop(cmaes);
    let mut converged = !result
        .reasons
        .iter()
        .any(|r| matches!(r, cmaes::TerminationReason::MaxFunctionEvals));

    let (used, reached) = {
        let s = state.borrow();
        (s.0, s.2 .1 <= opts.target)
    };
    if !reached && used < opts.max_evaluations {
        let restarter = RestartOptions::new(n, -1.0..=1.0, RestartStrategy::BIPOP(Default::default()))
            .fun_target(opts.target)
            .max_function_evals(opts.max_evaluations - used)
            .seed(opts.seed)
            .build();
        if let Ok(r) = restarter {
            let out = r.run_with_reuse(&objective);
            converged = matches!(out.reason, cmaes::restart::RestartTerminationReason::FunTarget);
        }
    }
    let (evaluations, trace, incumbent) = state.into_inner();
    if incumbent.1 < best.1 {
        best = incumbent;
    }
    Minimum {
        x: best.0,
        value: best.1,
        evaluations,
        converged,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_an_ill_conditioned_kinked_valley() {
        // |a·x| with a long diagonal valley and a kink at the optimum
        let f = |x: &[f64]| (x[0] + x[1] - 0.2).abs() + 0.01 * (x[0] - x[1]).abs();
        let b = Bounds::symmetric(2, 1.0).unwrap();
        let opts = CovarianceOptions {
            sigma: 0.3,
            max_evaluations: 20_000,
            target: 1e-12,
            seed: 3,
        };
        let m = covariance_search(&f, &[0.8, -0.9], f(&[0.8, -0.9]), &b, &opts);
        assert!(m.value < 1e-9, "{m:?}");
        assert!((m.x[0] - 0.1).abs() < 1e-6 && (m.x[1] - 0.1).abs() < 1e-6);
    }

    #[test]
    fn deterministic_and_within_bounds() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + x[1] * x[1];
        let b = Bounds::symmetric(2, 1.0).unwrap();
        let opts = CovarianceOptions {
            sigma: 0.5,
            max_evaluations: 2_000,
            target: 1e-12,
            seed: 9,
        };
        let a = covariance_search(&f, &[0.0, 0.5], f(&[0.0, 0.5]), &b, &opts);
        let c = covariance_search(&f, &[0.0, 0.5], f(&[0.0, 0.5]), &b, &opts);
        assert_eq!(a, c);
        assert!(b.contains(&a.x));
        assert!((a.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_budget_returns_the_start() {
        let f = |x: &[f64]| x[0];
        let b = Bounds::symmetric(1, 1.0).unwrap();
        let opts = CovarianceOptions {
            sigma: 0.5,
            max_evaluations: 0,
            target: 0.0,
            seed: 0,
        };
        let m = covariance_search(&f, &[0.5], 0.5, &b, &opts);
        assert_eq!(m.x, vec![0.5]);
        assert_eq!(m.evaluations, 0);
    }
}
