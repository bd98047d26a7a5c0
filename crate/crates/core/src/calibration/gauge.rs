use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::qubit::{BlochVector, ComplexMat2, DensityMatrix, PureState, C64};

/// Smallest and largest admissible Bloch angle between the two ideal states.
const MIN_PAIR_ANGLE_DEG: f64 = 10.0;
const MAX_PAIR_ANGLE_DEG: f64 = 170.0;

fn vec3(b: BlochVector) -> Vector3<f64> {
    Vector3::new(b.x, b.y, b.z)
}

/// Rotation `R` with `(R r)·σ = U (r·σ) U†` for a unitary `U`.
pub fn bloch_rotation(u: &ComplexMat2) -> Matrix3<f64> {
    let pauli = [ComplexMat2::pauli_x(), ComplexMat2::pauli_y(), ComplexMat2::pauli_z()];
    let mut r = Matrix3::zeros();
    for (j, s) in pauli.iter().enumerate() {
        let (_, n) = s.conjugated_by(u).pauli_components();
        for i in 0..3 {
            // pauli_components reads Tr(Mσ_i), twice the Bloch coordinate of M/2
            r[(i, j)] = n[i] / 2.0;
        }
    }
    r
}

/// SU(2) element whose adjoint action on Bloch vectors is the rotation `r`.
pub fn unitary_from_rotation(r: &Matrix3<f64>) -> ComplexMat2 {
    // axis-angle from the antisymmetric part and the trace
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let axis_sin = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) / 2.0;
    let sin = axis_sin.norm();
    let angle = sin.atan2(cos);
    let axis = if sin > 1e-9 {
        axis_sin / sin
    } else if cos > 0.0 {
        Vector3::new(0.0, 0.0, 1.0)
    } else {
        // half turn: the axis is the eigenvector of R + I
        let m = r + Matrix3::identity();
        let col = (0..3)
            .map(|j| m.column(j).into_owned())
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("three columns");
        col.normalize()
    };
    // U = cos(θ/2) I − i sin(θ/2) n·σ rotates Bloch vectors by θ about n
    let (s, c) = (angle / 2.0).sin_cos();
    ComplexMat2::from_pauli_components(2.0 * c, [0.0; 3])
        + ComplexMat2::from_pauli_components(0.0, [2.0 * axis.x, 2.0 * axis.y, 2.0 * axis.z]).scale(C64::new(0.0, -s))
}

/// Unitary `W` whose Bloch rotation best maps the reconstructed pair onto the
/// ideal pair in the least-squares (Wahba) sense, from Davenport's
/// q-method. Applying `W · W†` to reconstructions undoes a global gauge.
pub fn gauge_unitary(recon_pair: [&DensityMatrix; 2], ideal_pair: [&PureState; 2]) -> Result<ComplexMat2> {
    let ideal = [vec3(ideal_pair[0].bloch()), vec3(ideal_pair[1].bloch())];
    let angle = ideal[0].angle(&ideal[1]).to_degrees();
    if !(MIN_PAIR_ANGLE_DEG..=MAX_PAIR_ANGLE_DEG).contains(&angle) {
        return Err(Error::IllConditioned(format!(
            "reference states are {angle:.2}° apart on the Bloch sphere; need {MIN_PAIR_ANGLE_DEG}°–{MAX_PAIR_ANGLE_DEG}°"
        )));
    }
    let recon = [vec3(recon_pair[0].bloch()), vec3(recon_pair[1].bloch())];
    if recon.iter().any(|v| v.norm() < 1e-9) || recon[0].cross(&recon[1]).norm() < 1e-9 * recon[0].norm() * recon[1].norm()
    {
        return Err(Error::IllConditioned("reconstructed reference pair is degenerate".into()));
    }

    // attitude profile B = Σ b aᵀ (a: reconstructed, b: ideal)
    let b: Matrix3<f64> = (0..2).map(|i| ideal[i] * recon[i].transpose()).sum();
    let s = b + b.transpose();
    let sigma = b.trace();
    let z = Vector3::new(b[(1, 2)] - b[(2, 1)], b[(2, 0)] - b[(0, 2)], b[(0, 1)] - b[(1, 0)]);
    let mut k = Matrix4::zeros();
    k.fixed_view_mut::<3, 3>(0, 0).copy_from(&(s - Matrix3::identity() * sigma));
    for i in 0..3 {
        k[(i, 3)] = z[i];
        k[(3, i)] = z[i];
    }
    k[(3, 3)] = sigma;
    let eig = SymmetricEigen::new(k);
    let top = eig.eigenvalues.imax();
    let q = eig.eigenvectors.column(top);
    let (qv, q4) = (Vector3::new(q[0], q[1], q[2]), q[3]);
    // attitude matrix A(q) maps reconstructed vectors onto ideal ones
    let cross = Matrix3::new(0.0, -qv.z, qv.y, qv.z, 0.0, -qv.x, -qv.y, qv.x, 0.0);
    let a = Matrix3::identity() * (q4 * q4 - qv.norm_squared()) + qv * qv.transpose() * 2.0 - cross * (2.0 * q4);
    Ok(unitary_from_rotation(&a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{pauli_rotation, state_from_angles, Axis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unitary(rng: &mut ChaCha8Rng) -> ComplexMat2 {
        pauli_rotation(Axis::Z, rng.random_range(-3.0..3.0)).unwrap()
            * pauli_rotation(Axis::Y, rng.random_range(-3.0..3.0)).unwrap()
            * pauli_rotation(Axis::Z, rng.random_range(-3.0..3.0)).unwrap()
    }

    fn reference_pair() -> [PureState; 2] {
        [state_from_angles(1.2, 0.1).unwrap(), state_from_angles(1.7, 1.3).unwrap()]
    }

    #[test]
    fn rotation_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let u = random_unitary(&mut rng);
            let r = bloch_rotation(&u);
            assert!((r.determinant() - 1.0).abs() < 1e-9);
            let w = unitary_from_rotation(&r);
            assert!(w.is_unitary(1e-10));
            assert!((bloch_rotation(&w) - r).abs().max() < 1e-9);
            assert!(w.equal_up_to_phase(&u, 1e-7));
        }
    }

    #[test]
    fn half_turn_rotation() {
        let u = pauli_rotation(Axis::X, std::f64::consts::PI).unwrap();
        let w = unitary_from_rotation(&bloch_rotation(&u));
        assert!(w.equal_up_to_phase(&u, 1e-12));
    }

    #[test]
    fn identity_for_matching_pair() {
        let [a, b] = reference_pair();
        let w = gauge_unitary([&DensityMatrix::from_pure(&a), &DensityMatrix::from_pure(&b)], [&a, &b]).unwrap();
        assert!(w.equal_up_to_phase(&ComplexMat2::identity(), 1e-12));
    }

    #[test]
    fn undoes_a_known_gauge() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let [a, b] = reference_pair();
        for _ in 0..100 {
            let u = random_unitary(&mut rng);
            let ra = DensityMatrix::from_pure(&a).conjugated_by(&u).unwrap();
            let rb = DensityMatrix::from_pure(&b).conjugated_by(&u).unwrap();
            let w = gauge_unitary([&ra, &rb], [&a, &b]).unwrap();
            assert!(w.is_unitary(1e-10));
            let rw = bloch_rotation(&w);
            assert!((rw.determinant() - 1.0).abs() < 1e-9);
            assert!((rw - bloch_rotation(&u.adjoint())).abs().max() < 1e-6);
        }
    }

    #[test]
    fn best_fit_for_mixed_and_inconsistent_pairs() {
        // shrunken, slightly misaligned reconstructions: W must beat nearby rotations
        let [a, b] = reference_pair();
        let u = pauli_rotation(Axis::X, 0.4).unwrap();
        let shrink = |s: &PureState, f: f64| DensityMatrix::from_bloch(s.bloch().scaled(f)).unwrap();
        let ra = shrink(&a, 0.9).conjugated_by(&u).unwrap();
        let rb = shrink(&state_from_angles(1.75, 1.25).unwrap(), 0.8).conjugated_by(&u).unwrap();
        let w = gauge_unitary([&ra, &rb], [&a, &b]).unwrap();
        let score = |w: &ComplexMat2| {
            let r = bloch_rotation(w);
            let va = r * vec3(ra.bloch());
            let vb = r * vec3(rb.bloch());
            va.dot(&vec3(a.bloch())) + vb.dot(&vec3(b.bloch()))
        };
        let best = score(&w);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            for d in [-0.01, 0.01] {
                let nudged = pauli_rotation(axis, d).unwrap() * w;
                assert!(score(&nudged) <= best + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_degenerate_pairs() {
        let a = state_from_angles(1.0, 0.0).unwrap();
        let near = state_from_angles(1.05, 0.0).unwrap();
        let anti = state_from_angles(std::f64::consts::PI - 1.0, std::f64::consts::PI).unwrap();
        let da = DensityMatrix::from_pure(&a);
        let dn = DensityMatrix::from_pure(&near);
        assert!(matches!(gauge_unitary([&da, &dn], [&a, &near]), Err(Error::IllConditioned(_))));
        let dt = DensityMatrix::from_pure(&anti);
        assert!(matches!(gauge_unitary([&da, &dt], [&a, &anti]), Err(Error::IllConditioned(_))));
    }
}
