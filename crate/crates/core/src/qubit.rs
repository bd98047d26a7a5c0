//! Exact 2×2 complex linear algebra for a single qubit.
//!
//! Rotations follow the `exp(+i σ α / 2)` sign convention throughout the
//! crate. Every other module builds its rotations through [`pauli_rotation`]
//! and [`waveplate_unitary`] so the convention lives in exactly one place.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Tolerance for Hermiticity, trace and spectrum checks.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance for unitarity checks.
pub const UNITARY_TOL: f64 = 1e-12;

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexMat2 {
    pub entries: [C64; 4],
}

impl ComplexMat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self { entries: [a, b, c, d] }
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn pauli_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn pauli_y() -> Self {
        Self::new(ZERO, C64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn pauli_z() -> Self {
        Self::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0))
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Self::new(a, ZERO, ZERO, d)
    }

    /// `|v⟩⟨w|`.
    pub fn outer(v: [C64; 2], w: [C64; 2]) -> Self {
        Self::new(
            v[0] * w[0].conj(),
            v[0] * w[1].conj(),
            v[1] * w[0].conj(),
            v[1] * w[1].conj(),
        )
    }

    /// `(t I + n·σ) / 2`.
    pub fn from_pauli_components(t: f64, n: [f64; 3]) -> Self {
        Self::new(
            C64::new((t + n[2]) / 2.0, 0.0),
            C64::new(n[0] / 2.0, -n[1] / 2.0),
            C64::new(n[0] / 2.0, n[1] / 2.0),
            C64::new((t - n[2]) / 2.0, 0.0),
        )
    }

    /// `(Tr M, Tr Mσx, Tr Mσy, Tr Mσz)` real parts; exact for Hermitian input.
    pub fn pauli_components(&self) -> (f64, [f64; 3]) {
        let [a, b, c, d] = self.entries;
        let t = (a + d).re;
        let x = (b + c).re;
        let y = (I * (b - c)).re;
        let z = (a - d).re;
        (t, [x, y, z])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[2 * row + col]
    }

    pub fn adjoint(&self) -> Self {
        let [a, b, c, d] = self.entries;
        Self::new(a.conj(), c.conj(), b.conj(), d.conj())
    }

    pub fn trace(&self) -> C64 {
        self.entries[0] + self.entries[3]
    }

    pub fn det(&self) -> C64 {
        let [a, b, c, d] = self.entries;
        a * d - b * c
    }

    pub fn scale(&self, s: C64) -> Self {
        let [a, b, c, d] = self.entries;
        Self::new(a * s, b * s, c * s, d * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let [a, b, c, d] = self.entries;
        [a * v[0] + b * v[1], c * v[0] + d * v[1]]
    }

    /// `U M U†`.
    pub fn conjugated_by(&self, u: &ComplexMat2) -> Self {
        *u * *self * u.adjoint()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &ComplexMat2) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &ComplexMat2, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.approx_eq(&self.adjoint(), tol)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (*self * self.adjoint()).approx_eq(&Self::identity(), tol)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let (t, n) = self.pauli_components();
        let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        [(t - r) / 2.0, (t + r) / 2.0]
    }

    /// True if `self = e^{iχ} other` for some global phase χ.
    pub fn equal_up_to_phase(&self, other: &ComplexMat2, tol: f64) -> bool {
        let overlap = (other.adjoint() * *self).trace();
        if overlap.norm() < 1e-300 {
            return self.frobenius_norm() <= tol && other.frobenius_norm() <= tol;
        }
        let phase = overlap / overlap.norm();
        self.approx_eq(&other.scale(phase), tol)
    }
}

impl Mul for ComplexMat2 {
    type Output = ComplexMat2;

    fn mul(self, rhs: ComplexMat2) -> ComplexMat2 {
        let [a, b, c, d] = self.entries;
        let [e, f, g, h] = rhs.entries;
        ComplexMat2::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    }
}

impl Add for ComplexMat2 {
    type Output = ComplexMat2;

    fn add(self, rhs: ComplexMat2) -> ComplexMat2 {
        let mut out = self;
        for (x, y) in out.entries.iter_mut().zip(rhs.entries) {
            *x += y;
        }
        out
    }
}

impl Sub for ComplexMat2 {
    type Output = ComplexMat2;

    fn sub(self, rhs: ComplexMat2) -> ComplexMat2 {
        self + (-rhs)
    }
}

impl Neg for ComplexMat2 {
    type Output = ComplexMat2;

    fn neg(self) -> ComplexMat2 {
        self.scale_re(-1.0)
    }
}

/// Real 3-vector on (or inside) the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Unit vector at colatitude `theta` and longitude `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            *self
        } else {
            self.scaled(1.0 / n)
        }
    }

    /// Angle between the two vectors in radians.
    pub fn angle_to(&self, other: &BlochVector) -> f64 {
        let c = self.dot(other) / (self.norm() * other.norm());
        c.clamp(-1.0, 1.0).acos()
    }

    /// `(colatitude, longitude)` with longitude in `[0, 2π)`.
    pub fn angles(&self) -> (f64, f64) {
        let n = self.norm();
        if n == 0.0 {
            return (0.0, 0.0);
        }
        let theta = (self.z / n).clamp(-1.0, 1.0).acos();
        let phi = self.y.atan2(self.x).rem_euclid(2.0 * PI);
        (theta, phi)
    }
}

/// Validated density matrix of a single qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMat2", into = "ComplexMat2")]
pub struct DensityMatrix {
    mat: ComplexMat2,
}

impl TryFrom<ComplexMat2> for DensityMatrix {
    type Error = crate::Error;

    fn try_from(mat: ComplexMat2) -> Result<Self> {
        DensityMatrix::new(mat)
    }
}

impl From<DensityMatrix> for ComplexMat2 {
    fn from(rho: DensityMatrix) -> ComplexMat2 {
        rho.mat
    }
}

impl DensityMatrix {
    pub fn new(mat: ComplexMat2) -> Result<Self> {
        if !mat.is_finite() {
            return Err(invalid("density matrix has non-finite entries"));
        }
        if !mat.is_hermitian(HERMITIAN_TOL) {
            return Err(invalid("density matrix is not Hermitian"));
        }
        let tr = mat.trace();
        if (tr - ONE).norm() > HERMITIAN_TOL {
            return Err(invalid(format!("density matrix trace is {tr}, expected 1")));
        }
        let [lo, _] = mat.hermitian_eigenvalues();
        if lo < -HERMITIAN_TOL {
            return Err(invalid(format!("density matrix has negative eigenvalue {lo}")));
        }
        Ok(Self { mat })
    }

    /// `(I + r·σ)/2`. Vectors a hair outside the unit ball are pulled back
    /// onto the sphere; anything further out is rejected.
    pub fn from_bloch(r: BlochVector) -> Result<Self> {
        let n = r.norm();
        if !n.is_finite() || n > 1.0 + 1e-9 {
            return Err(invalid(format!("Bloch vector norm {n} exceeds 1")));
        }
        let r = if n > 1.0 { r.scaled(1.0 / n) } else { r };
        Ok(Self {
            mat: ComplexMat2::from_pauli_components(1.0, r.to_array()),
        })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            mat: psi.projector(),
        }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            mat: ComplexMat2::identity().scale_re(0.5),
        }
    }

    pub fn mat(&self) -> &ComplexMat2 {
        &self.mat
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_vector(self)
    }

    /// `U ρ U†`; `u` must be unitary.
    pub fn conjugated_by(&self, u: &ComplexMat2) -> Result<Self> {
        Self::new(self.mat.conjugated_by(u))
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let a = self.bloch();
        let b = other.bloch();
        BlochVector::new(a.x - b.x, a.y - b.y, a.z - b.z).norm() / 2.0
    }
}

/// Normalized state vector, optionally tagged with its Bloch angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    pub amplitudes: [C64; 2],
    pub bloch_angles: Option<(f64, f64)>,
}

impl PureState {
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("state norm is {norm}, expected 1")));
        }
        Ok(Self {
            amplitudes: [a, b],
            bloch_angles: None,
        })
    }

    /// Normalizes `v`; fails for the zero vector.
    pub fn normalized(v: [C64; 2]) -> Result<Self> {
        let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        Self::new(v[0] / norm, v[1] / norm)
    }

    pub fn zero() -> Self {
        Self {
            amplitudes: [ONE, ZERO],
            bloch_angles: Some((0.0, 0.0)),
        }
    }

    pub fn one() -> Self {
        Self {
            amplitudes: [ZERO, ONE],
            bloch_angles: Some((PI, 0.0)),
        }
    }

    pub fn projector(&self) -> ComplexMat2 {
        ComplexMat2::outer(self.amplitudes, self.amplitudes)
    }

    pub fn bloch(&self) -> BlochVector {
        let (_, n) = self.projector().pauli_components();
        BlochVector::from_array(n)
    }

    /// `U|ψ⟩`; drops the angle tag since it no longer applies.
    pub fn evolved(&self, u: &ComplexMat2) -> Result<Self> {
        Self::normalized(u.apply(self.amplitudes))
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &PureState) -> f64 {
        let [a, b] = self.amplitudes;
        let [c, d] = other.amplitudes;
        (a.conj() * c + b.conj() * d).norm_sqr()
    }
}

/// Validated measurement effect `0 ≤ e ≤ I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMat2", into = "ComplexMat2")]
pub struct Effect {
    mat: ComplexMat2,
}

impl TryFrom<ComplexMat2> for Effect {
    type Error = crate::Error;

    fn try_from(mat: ComplexMat2) -> Result<Self> {
        Effect::new(mat)
    }
}

impl From<Effect> for ComplexMat2 {
    fn from(e: Effect) -> ComplexMat2 {
        e.mat
    }
}

impl Effect {
    pub fn new(mat: ComplexMat2) -> Result<Self> {
        if !mat.is_finite() {
            return Err(invalid("effect has non-finite entries"));
        }
        if !mat.is_hermitian(HERMITIAN_TOL) {
            return Err(invalid("effect is not Hermitian"));
        }
        let [lo, hi] = mat.hermitian_eigenvalues();
        if lo < -HERMITIAN_TOL || hi > 1.0 + HERMITIAN_TOL {
            return Err(invalid(format!("effect spectrum [{lo}, {hi}] outside [0, 1]")));
        }
        Ok(Self { mat })
    }

    /// Rank-1 projector `|ψ⟩⟨ψ|`.
    pub fn projector(psi: &PureState) -> Self {
        Self {
            mat: psi.projector(),
        }
    }

    /// `U† |0⟩⟨0| U`: the outcome "found in |0⟩ after evolving by U".
    pub fn after_unitary(u: &ComplexMat2) -> Result<Self> {
        let zero = ComplexMat2::diag(ONE, ZERO);
        Self::new(zero.conjugated_by(&u.adjoint()))
    }

    pub fn mat(&self) -> &ComplexMat2 {
        &self.mat
    }

    pub fn complement(&self) -> Self {
        Self {
            mat: ComplexMat2::identity() - self.mat,
        }
    }

    /// `U e U†`; `u` must be unitary.
    pub fn conjugated_by(&self, u: &ComplexMat2) -> Result<Self> {
        Self::new(self.mat.conjugated_by(u))
    }

    /// `(Tr e, n)` with `e = (Tr e · I + n·σ)/2`, so `Tr(ρ e) = (Tr e + r·n)/2`.
    pub fn pauli_components(&self) -> (f64, [f64; 3]) {
        self.mat.pauli_components()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn pauli(self) -> ComplexMat2 {
        match self {
            Axis::X => ComplexMat2::pauli_x(),
            Axis::Y => ComplexMat2::pauli_y(),
            Axis::Z => ComplexMat2::pauli_z(),
        }
    }
}

/// `R(α) = exp(i σ α / 2) = cos(α/2) I + i sin(α/2) σ`.
pub fn pauli_rotation(axis: Axis, angle: f64) -> Result<ComplexMat2> {
    ensure_finite("rotation angle", angle)?;
    let half = angle / 2.0;
    Ok(ComplexMat2::identity().scale_re(half.cos()) + axis.pauli().scale(I * half.sin()))
}

/// Jones operator `|α⟩⟨α| + e^{-iΓ}|α⊥⟩⟨α⊥|` of a waveplate with its fast
/// axis at `angle` and retardance `retardance`.
pub fn waveplate_unitary(angle: f64, retardance: f64) -> Result<ComplexMat2> {
    ensure_finite("waveplate angle", angle)?;
    ensure_finite("waveplate retardance", retardance)?;
    let (s, c) = angle.sin_cos();
    let fast = [C64::new(c, 0.0), C64::new(s, 0.0)];
    let slow = [C64::new(-s, 0.0), C64::new(c, 0.0)];
    let phase = C64::from_polar(1.0, -retardance);
    Ok(ComplexMat2::outer(fast, fast) + ComplexMat2::outer(slow, slow).scale(phase))
}

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn state_from_angles(theta: f64, phi: f64) -> Result<PureState> {
    ensure_finite("colatitude", theta)?;
    ensure_finite("longitude", phi)?;
    if !(-1e-12..=PI + 1e-12).contains(&theta) {
        return Err(invalid(format!("colatitude {theta} outside [0, π]")));
    }
    let theta = theta.clamp(0.0, PI);
    let phi = phi.rem_euclid(2.0 * PI);
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(PureState {
        amplitudes: [C64::new(c, 0.0), C64::from_polar(s, phi)],
        bloch_angles: Some((theta, phi)),
    })
}

pub fn bloch_vector(rho: &DensityMatrix) -> BlochVector {
    let (_, n) = rho.mat.pauli_components();
    BlochVector::from_array(n)
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    (rho.mat * rho.mat).trace().re
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity_pure(psi: &PureState, rho: &DensityMatrix) -> f64 {
    let [a, b] = psi.amplitudes;
    let v = rho.mat.apply(psi.amplitudes);
    (a.conj() * v[0] + b.conj() * v[1]).re
}

/// Born rule `Tr(ρ e)`, clamped to `[0, 1]`.
pub fn born_probability(rho: &DensityMatrix, e: &Effect) -> f64 {
    (rho.mat * e.mat).trace().re.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn plus() -> PureState {
        PureState::new(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).unwrap()
    }

    #[test]
    fn rotation_examples() {
        let id = pauli_rotation(Axis::Y, 0.0).unwrap();
        assert!(id.approx_eq(&ComplexMat2::identity(), 1e-15));

        let ry = pauli_rotation(Axis::Y, PI).unwrap();
        let expected = ComplexMat2::new(c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0));
        assert!(ry.approx_eq(&expected, 1e-15));

        let rz = pauli_rotation(Axis::Z, PI).unwrap();
        assert!(rz.approx_eq(&ComplexMat2::diag(c(0.0, 1.0), c(0.0, -1.0)), 1e-15));
    }

    #[test]
    fn rotation_rejects_nan() {
        assert!(pauli_rotation(Axis::Z, f64::NAN).is_err());
        assert!(pauli_rotation(Axis::Y, f64::INFINITY).is_err());
    }

    #[test]
    fn waveplate_examples() {
        let hwp = waveplate_unitary(0.0, PI).unwrap();
        assert!(hwp.approx_eq(&ComplexMat2::pauli_z(), 1e-15));

        let diag_hwp = waveplate_unitary(FRAC_PI_4, PI).unwrap();
        assert!(diag_hwp.equal_up_to_phase(&ComplexMat2::pauli_x(), 1e-15));

        for alpha in [0.0, 0.3, -1.2, 2.5] {
            let w = waveplate_unitary(alpha, 0.0).unwrap();
            assert!(w.approx_eq(&ComplexMat2::identity(), 1e-15));
        }
        assert!(waveplate_unitary(f64::NAN, PI).is_err());
    }

    #[test]
    fn waveplate_spectrum() {
        let w = waveplate_unitary(0.4, 1.3).unwrap();
        assert!(w.is_unitary(UNITARY_TOL));
        // eigenvalues 1 and e^{-iΓ}: trace and determinant pin them down.
        let e = C64::from_polar(1.0, -1.3);
        assert!((w.trace() - (ONE + e)).norm() < 1e-14);
        assert!((w.det() - e).norm() < 1e-14);
    }

    #[test]
    fn state_examples() {
        let north = state_from_angles(0.0, 1.234).unwrap();
        assert!(north.overlap(&PureState::zero()) > 1.0 - 1e-15);

        let south = state_from_angles(PI, 0.0).unwrap();
        assert!((south.amplitudes[0]).norm() < 1e-15);
        assert!((south.amplitudes[1] - ONE).norm() < 1e-15);

        let y_plus = state_from_angles(FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!((y_plus.amplitudes[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((y_plus.amplitudes[1] - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert_eq!(y_plus.bloch_angles, Some((FRAC_PI_2, FRAC_PI_2)));

        assert!(state_from_angles(-0.1, 0.0).is_err());
        assert!(state_from_angles(PI + 0.1, 0.0).is_err());
    }

    #[test]
    fn bloch_examples() {
        let mixed = DensityMatrix::maximally_mixed();
        assert_eq!(bloch_vector(&mixed), BlochVector::new(0.0, 0.0, 0.0));

        let zero = DensityMatrix::from_pure(&PureState::zero());
        let v = bloch_vector(&zero);
        assert!((v.z - 1.0).abs() < 1e-15 && v.x.abs() < 1e-15 && v.y.abs() < 1e-15);

        let p = DensityMatrix::from_pure(&plus());
        let v = bloch_vector(&p);
        assert!((v.x - 1.0).abs() < 1e-15 && v.y.abs() < 1e-15 && v.z.abs() < 1e-15);
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&DensityMatrix::from_pure(&PureState::zero())) - 1.0).abs() < 1e-15);
        assert!((purity(&DensityMatrix::maximally_mixed()) - 0.5).abs() < 1e-15);
        let rho = DensityMatrix::from_bloch(BlochVector::new(0.0, 0.36, 0.48)).unwrap();
        assert!((purity(&rho) - 0.68).abs() < 1e-14);
    }

    #[test]
    fn fidelity_examples() {
        let zero = PureState::zero();
        assert!((fidelity_pure(&zero, &DensityMatrix::from_pure(&zero)) - 1.0).abs() < 1e-15);
        assert!(fidelity_pure(&zero, &DensityMatrix::from_pure(&PureState::one())).abs() < 1e-15);
        assert!((fidelity_pure(&zero, &DensityMatrix::maximally_mixed()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn born_examples() {
        let rho0 = DensityMatrix::from_pure(&PureState::zero());
        assert!((born_probability(&rho0, &Effect::projector(&PureState::zero())) - 1.0).abs() < 1e-15);
        assert!((born_probability(&rho0, &Effect::projector(&plus())) - 0.5).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed();
        let psi = state_from_angles(1.1, 4.0).unwrap();
        assert!((born_probability(&mixed, &Effect::projector(&psi)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_matrices_are_rejected() {
        let not_unit_trace = ComplexMat2::identity();
        assert!(DensityMatrix::new(not_unit_trace).is_err());
        let negative = ComplexMat2::diag(c(1.5, 0.0), c(-0.5, 0.0));
        assert!(DensityMatrix::new(negative).is_err());
        let non_hermitian = ComplexMat2::new(c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0));
        assert!(DensityMatrix::new(non_hermitian).is_err());
        assert!(Effect::new(ComplexMat2::identity().scale_re(1.1)).is_err());
        assert!(PureState::new(ONE, ONE).is_err());
        assert!(DensityMatrix::from_bloch(BlochVector::new(0.0, 0.0, 1.1)).is_err());
    }

    #[test]
    fn after_unitary_projects_onto_preimage_of_zero() {
        let u = pauli_rotation(Axis::Y, PI).unwrap();
        let e = Effect::after_unitary(&u).unwrap();
        assert!(e.mat().approx_eq(&PureState::one().projector(), 1e-15));
    }

    fn random_pure() -> impl Strategy<Value = PureState> {
        (0.0..=PI, 0.0..2.0 * PI).prop_map(|(t, p)| state_from_angles(t, p).unwrap())
    }

    fn random_rho() -> impl Strategy<Value = DensityMatrix> {
        (0.0..=PI, 0.0..2.0 * PI, 0.0..=1.0f64).prop_map(|(t, p, r)| {
            DensityMatrix::from_bloch(BlochVector::from_angles(t, p).scaled(r)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn rotation_inverse(alpha in -10.0..10.0f64, axis in prop_oneof![Just(Axis::Y), Just(Axis::Z), Just(Axis::X)]) {
            let r = pauli_rotation(axis, alpha).unwrap();
            let rinv = pauli_rotation(axis, -alpha).unwrap();
            prop_assert!((r * rinv).approx_eq(&ComplexMat2::identity(), 1e-12));
            prop_assert!(r.is_unitary(UNITARY_TOL));
            prop_assert!((r.det().norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn half_wave_plate_is_involution(alpha in -10.0..10.0f64) {
            let w = waveplate_unitary(alpha, PI).unwrap();
            prop_assert!((w * w).approx_eq(&ComplexMat2::identity(), 1e-12));
        }

        #[test]
        fn pure_states_have_unit_purity(psi in random_pure()) {
            let rho = DensityMatrix::from_pure(&psi);
            prop_assert!((purity(&rho) - 1.0).abs() < 1e-10);
            prop_assert!((bloch_vector(&rho).norm() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn purity_matches_bloch_norm(rho in random_rho()) {
            let v = bloch_vector(&rho);
            prop_assert!((purity(&rho) - (1.0 + v.dot(&v)) / 2.0).abs() < 1e-10);
            let p = purity(&rho);
            prop_assert!((0.5 - 1e-9..=1.0 + 1e-9).contains(&p));
        }

        #[test]
        fn born_complement_sums_to_one(rho in random_rho(), t in 0.0..=PI, p in 0.0..2.0 * PI, w in 0.0..=1.0f64) {
            // a general (non-projective) effect: weighted projector plus a bit of identity
            let psi = state_from_angles(t, p).unwrap();
            let e = Effect::new(psi.projector().scale_re(w * 0.8) + ComplexMat2::identity().scale_re(0.1)).unwrap();
            let total = born_probability(&rho, &e) + born_probability(&rho, &e.complement());
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
