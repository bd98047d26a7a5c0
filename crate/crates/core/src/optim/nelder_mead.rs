use super::{Bounds, Minimum};

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex along each coordinate.
    pub initial_step: Vec<f64>,
    pub max_evaluations: usize,
    /// Convergence requires the spread of simplex values to drop below this...
    pub f_tol: f64,
    /// ...and every vertex to lie within this distance (max-norm) of the best.
    pub x_tol: f64,
    /// Fresh simplices rebuilt around the best point after convergence.
    pub restarts: usize,
}

impl NelderMeadOptions {
    pub fn new(initial_step: Vec<f64>) -> Self {
        Self {
            initial_step,
            max_evaluations: 20_000,
            f_tol: 1e-14,
            x_tol: 1e-10,
            restarts: 3,
        }
    }
}

struct Counter<'a, F> {
    f: &'a F,
    bounds: Option<&'a Bounds>,
    evaluations: usize,
    best: f64,
    trace: Vec<(usize, f64)>,
}

impl<F: Fn(&[f64]) -> f64> Counter<'_, F> {
    fn eval(&mut self, x: &mut [f64]) -> f64 {
        if let Some(b) = self.bounds {
            b.clamp(x);
        }
        self.evaluations += 1;
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best {
            self.best = v;
            self.trace.push((self.evaluations, v));
        }
        v
    }
}

/// Downhill simplex with standard coefficients (reflection 1, expansion 2,
/// contraction ½, shrink ½). Points are clamped into `bounds` before every
/// evaluation.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &NelderMeadOptions, bounds: Option<&Bounds>) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(opts.initial_step.len(), n, "initial step dimension mismatch");
    let mut counter = Counter {
        f: &f,
        bounds,
        evaluations: 0,
        best: f64::INFINITY,
        trace: Vec::new(),
    };

    let mut start = x0.to_vec();
    let mut best_value = counter.eval(&mut start);
    let mut converged = false;

    for _ in 0..=opts.restarts {
        let (x, v, ok) = run_simplex(&mut counter, &start, best_value, opts);
        let improved = v < best_value - opts.f_tol;
        if v <= best_value {
            start = x;
            best_value = v;
        }
        converged = ok;
        if !ok || !improved || counter.evaluations >= opts.max_evaluations {
            break;
        }
    }

    Minimum {
        x: start,
        value: best_value,
        evaluations: counter.evaluations,
        converged,
        trace: counter.trace,
    }
}

fn run_simplex<F: Fn(&[f64]) -> f64>(
    counter: &mut Counter<'_, F>,
    x0: &[f64],
    f0: f64,
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step[i];
        if let Some(b) = counter.bounds {
            // step inward when the vertex would land on the wall
            if x[i] > b.upper[i] {
                x[i] = x0[i] - opts.initial_step[i];
            }
        }
        let v = counter.eval(&mut x);
        simplex.push((x, v));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best_x, best_f) = (&simplex[0].0, simplex[0].1);
        let f_spread = simplex[n].1 - best_f;
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best_x).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= opts.f_tol && x_spread <= opts.x_tol {
            return (simplex[0].0.clone(), simplex[0].1, true);
        }
        if x_spread <= f64::EPSILON * 4.0 {
            // collapsed without meeting the value tolerance
            return (simplex[0].0.clone(), simplex[0].1, f_spread <= opts.f_tol);
        }
        if counter.evaluations >= opts.max_evaluations {
            return (simplex[0].0.clone(), simplex[0].1, false);
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let mut xr = along(1.0);
        let fr = counter.eval(&mut xr);
        if fr < simplex[0].1 {
            let mut xe = along(2.0);
            let fe = counter.eval(&mut xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (mut xc, outside) = if fr < worst.1 {
            (along(0.5), true)
        } else {
            (along(-0.5), false)
        };
        let fc = counter.eval(&mut xc);
        if (outside && fc <= fr) || (!outside && fc < worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut x: Vec<f64> = anchor
                .iter()
                .zip(&vertex.0)
                .map(|(a, v)| a + 0.5 * (v - a))
                .collect();
            let v = counter.eval(&mut x);
            *vertex = (x, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn finds_rosenbrock_minimum() {
        let opts = NelderMeadOptions::new(vec![0.5, 0.5]);
        let m = nelder_mead(rosenbrock, &[-1.2, 1.0], &opts, None);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5, "{:?}", m.x);
        assert!((m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn respects_bounds() {
        let b = Bounds::new(vec![2.0, -1.0], vec![3.0, 1.0]).unwrap();
        let opts = NelderMeadOptions::new(vec![0.1, 0.1]);
        let m = nelder_mead(|x| x[0] * x[0] + x[1] * x[1], &[2.5, 0.5], &opts, Some(&b));
        assert!((m.x[0] - 2.0).abs() < 1e-8);
        assert!(m.x[1].abs() < 1e-5);
        assert!(b.contains(&m.x));
    }

    #[test]
    fn trace_is_monotone() {
        let opts = NelderMeadOptions::new(vec![0.3, 0.3]);
        let m = nelder_mead(rosenbrock, &[0.0, 0.0], &opts, None);
        assert!(m.trace.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 > w[0].0));
    }

    #[test]
    fn budget_exhaustion_is_not_convergence() {
        let mut opts = NelderMeadOptions::new(vec![0.5, 0.5]);
        opts.max_evaluations = 10;
        let m = nelder_mead(rosenbrock, &[-1.2, 1.0], &opts, None);
        assert!(!m.converged);
    }
}
