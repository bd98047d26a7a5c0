use rand::seq::SliceRandom;
use rand::Rng;

use super::Bounds;

/// Latin-hypercube design of `n` points: every coordinate axis is cut into
/// `n` equal strata and each stratum holds exactly one point.
pub fn latin_hypercube<R: Rng + ?Sized>(bounds: &Bounds, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let dim = bounds.dim();
    let mut points = vec![vec![0.0; dim]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for d in 0..dim {
        strata.shuffle(rng);
        for (point, &s) in points.iter_mut().zip(&strata) {
            let u = (s as f64 + rng.random::<f64>()) / n as f64;
            point[d] = bounds.lower[d] + u * bounds.width(d);
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_point_per_stratum() {
        let b = Bounds::new(vec![-0.5, 0.0, 10.0], vec![0.5, 2.0, 11.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 17;
        let pts = latin_hypercube(&b, n, &mut rng);
        assert_eq!(pts.len(), n);
        for d in 0..3 {
            let mut hit = vec![false; n];
            for p in &pts {
                assert!(p[d] >= b.lower[d] && p[d] <= b.upper[d]);
                let s = (((p[d] - b.lower[d]) / b.width(d)) * n as f64).floor() as usize;
                hit[s.min(n - 1)] = true;
            }
            assert!(hit.iter().all(|h| *h), "axis {d} misses a stratum");
        }
    }

    #[test]
    fn seeded_design_is_reproducible() {
        let b = Bounds::symmetric(4, 0.5).unwrap();
        let a = latin_hypercube(&b, 9, &mut ChaCha8Rng::seed_from_u64(11));
        let c = latin_hypercube(&b, 9, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, c);
    }
}
