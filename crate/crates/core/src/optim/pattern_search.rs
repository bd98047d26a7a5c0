use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{argmin, Bounds, Minimum};

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSearchOptions {
    /// Initial poll size as a fraction of each bound width.
    pub mesh_initial: f64,
    /// Search stops once the poll size falls below this fraction.
    pub mesh_min: f64,
    pub max_evaluations: usize,
    /// Seeds the random orthonormal poll bases.
    pub seed: u64,
}

/// Mesh-adaptive direct search with an orthogonal 2n poll set.
///
/// Each iteration polls `x ± Δ·w∘h_i` where `h_i` are the columns of a
/// Householder reflection built from a fresh random direction and `w` are the
/// bound widths. The poll batch is evaluated in parallel and the best point
/// is accepted if it improves the incumbent (ties go to the lowest poll
/// index, so the result does not depend on the thread count). A successful
/// poll is followed by speculative steps of doubling length along the same
/// direction and doubles the mesh up to its initial size; a failed poll
/// halves it.
pub fn pattern_search<F>(f: &F, x0: &[f64], f0: f64, bounds: &Bounds, opts: &PatternSearchOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = x0.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let mut fx = f0;
    let mut mesh = opts.mesh_initial;
    let mut evaluations = 0usize;
    let mut trace = vec![(0, fx)];

    let converged = loop {
        if mesh < opts.mesh_min {
            break true;
        }
        if evaluations >= opts.max_evaluations {
            break false;
        }

        let basis = householder_basis(n, &mut rng);
        let mut polls: Vec<Vec<f64>> = Vec::with_capacity(2 * n);
        for sign in [1.0, -1.0] {
            for col in &basis {
                let mut p: Vec<f64> = (0..n)
                    .map(|i| x[i] + sign * mesh * bounds.width(i) * col[i])
                    .collect();
                bounds.clamp(&mut p);
                if p != x {
                    polls.push(p);
                }
            }
        }
        polls.truncate(opts.max_evaluations - evaluations);

        let values: Vec<f64> = polls.par_iter().map(|p| f(p)).collect();
        let first = evaluations;
        evaluations += polls.len();

        match argmin(&values) {
            Some(k) if values[k] < fx => {
                fx = values[k];
                let step: Vec<f64> = polls[k].iter().zip(&x).map(|(a, b)| a - b).collect();
                x = polls.swap_remove(k);
                trace.push((first + k + 1, fx));
                // speculative search: keep stepping along the successful direction
                let mut stride = 2.0;
                while evaluations < opts.max_evaluations {
                    let mut p: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + stride * d).collect();
                    bounds.clamp(&mut p);
                    if p == x {
                        break;
                    }
                    let v = f(&p);
                    evaluations += 1;
                    if !(v < fx) {
                        break;
                    }
                    fx = v;
                    x = p;
                    trace.push((evaluations, fx));
                    stride *= 2.0;
                }
                mesh = (mesh * 2.0).min(opts.mesh_initial);
            }
            _ => mesh /= 2.0,
        }
    };

    Minimum {
        x,
        value: fx,
        evaluations,
        converged,
        trace,
    }
}

/// Columns of `I - 2 v vᵀ / vᵀv` for a Gaussian random `v`.
fn householder_basis(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let vv: f64 = v.iter().map(|a| a * a).sum();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    delta - 2.0 * v[i] * v[j] / vv
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(seed: u64) -> PatternSearchOptions {
        PatternSearchOptions {
            mesh_initial: 0.1,
            mesh_min: 1e-7,
            max_evaluations: 50_000,
            seed,
        }
    }

    #[test]
    fn basis_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = householder_basis(5, &mut rng);
        for i in 0..5 {
            for j in 0..5 {
                let d: f64 = (0..5).map(|k| b[i][k] * b[j][k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn minimizes_nonsmooth_function() {
        // max-abs is kinked along every coordinate hyperplane
        let f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, v)| (v - 0.1 * i as f64).abs())
                .fold(0.0, f64::max)
        };
        let b = Bounds::symmetric(4, 1.0).unwrap();
        let x0 = [0.7, -0.4, 0.9, -0.9];
        let m = pattern_search(&f, &x0, f(&x0), &b, &opts(5));
        assert!(m.converged);
        assert!(m.value < 1e-5, "{}", m.value);
    }

    #[test]
    fn stays_inside_bounds() {
        let f = |x: &[f64]| x[0] + x[1];
        let b = Bounds::new(vec![0.25, -1.0], vec![1.0, 1.0]).unwrap();
        let m = pattern_search(&f, &[0.5, 0.5], 1.0, &b, &opts(2));
        assert!(b.contains(&m.x));
        assert!((m.value - (0.25 - 1.0)).abs() < 1e-5);
    }

    #[test]
    fn trace_is_non_increasing_and_reproducible() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] + 0.2).abs();
        let b = Bounds::symmetric(2, 1.0).unwrap();
        let a = pattern_search(&f, &[0.0, 0.0], f(&[0.0, 0.0]), &b, &opts(9));
        let c = pattern_search(&f, &[0.0, 0.0], f(&[0.0, 0.0]), &b, &opts(9));
        assert_eq!(a, c);
        assert!(a.trace.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn budget_is_respected() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let b = Bounds::symmetric(3, 1.0).unwrap();
        let mut o = opts(4);
        o.max_evaluations = 13;
        let m = pattern_search(&f, &[0.9, 0.9, 0.9], 2.43, &b, &o);
        assert!(!m.converged);
        assert!(m.evaluations <= 13);
    }
}
