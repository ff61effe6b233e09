//! Projective measurement stroke in an arbitrary basis on the Bloch sphere.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use thiserror::Error;

use crate::qubit::{energy_expectation, ComplexMatrix2, DensityMatrix, Hamiltonian};

/// Outcome probabilities at or below this are flagged unreachable.
pub const UNREACHABLE_PROB: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasurementError {
    #[error("colatitude must lie in [0, π], got {0}")]
    ColatitudeOutOfRange(f64),
    #[error("longitude must lie in [0, 2π), got {0}")]
    LongitudeOutOfRange(f64),
}

/// Measurement outcome label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

/// Basis `{|ψ₊⟩, |ψ₋⟩}` parameterised by colatitude `θ` and longitude `φ`:
///
/// ```text
/// |ψ₊⟩ = cos(θ/2)|e⟩ + e^{iφ} sin(θ/2)|g⟩
/// |ψ₋⟩ = e^{−iφ} sin(θ/2)|e⟩ − cos(θ/2)|g⟩
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementBasis {
    theta: f64,
    phi: f64,
}

impl MeasurementBasis {
    /// Out-of-range angles are rejected rather than wrapped.
    pub fn new(theta: f64, phi: f64) -> Result<Self, MeasurementError> {
        if !(0.0..=PI).contains(&theta) {
            return Err(MeasurementError::ColatitudeOutOfRange(theta));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(MeasurementError::LongitudeOutOfRange(phi));
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn ket(&self, k: Outcome) -> [Complex64; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        let phase = Complex64::from_polar(1.0, self.phi);
        match k {
            Outcome::Plus => [Complex64::new(c, 0.0), phase * s],
            Outcome::Minus => [phase.conj() * s, Complex64::new(-c, 0.0)],
        }
    }

    /// `π_k = |ψ_k⟩⟨ψ_k|`
    pub fn projector(&self, k: Outcome) -> ComplexMatrix2 {
        let ket = self.ket(k);
        ComplexMatrix2::outer(ket, ket)
    }

    /// `(π₊, π₋)`
    pub fn projectors(&self) -> (ComplexMatrix2, ComplexMatrix2) {
        (
            self.projector(Outcome::Plus),
            self.projector(Outcome::Minus),
        )
    }

    /// Post-measurement state `|ψ_k⟩⟨ψ_k|`.
    pub fn post_state(&self, k: Outcome) -> DensityMatrix {
        DensityMatrix::pure(self.ket(k)).expect("basis kets are normalised")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOutcome {
    pub label: Outcome,
    /// `p⁰_k = ⟨ψ_k|ρ₀|ψ_k⟩`
    pub probability: f64,
    pub post_state: DensityMatrix,
    /// Set when `p⁰_k ≤ 1e−15`; the post-state is still the projector.
    pub unreachable: bool,
}

/// Measures `rho0` in `basis`, returning the `+` and `−` outcomes.
pub fn measure(
    rho0: &DensityMatrix,
    basis: &MeasurementBasis,
) -> (MeasurementOutcome, MeasurementOutcome) {
    let outcome = |k: Outcome| {
        let p = rho0.expectation_in(basis.ket(k)).clamp(0.0, 1.0);
        MeasurementOutcome {
            label: k,
            probability: p,
            post_state: basis.post_state(k),
            unreachable: p <= UNREACHABLE_PROB,
        }
    };
    (outcome(Outcome::Plus), outcome(Outcome::Minus))
}

/// Average energy change of a single measurement act on `rho_pre`:
/// `Σ_k p⁰_k ⟨ψ_k|H|ψ_k⟩ − Tr(H ρ_pre)`.
pub fn measurement_energy_jump(
    rho_pre: &DensityMatrix,
    basis: &MeasurementBasis,
    h: &Hamiltonian,
) -> f64 {
    let (plus, minus) = measure(rho_pre, basis);
    let after: f64 = [plus, minus]
        .iter()
        .map(|o| o.probability * energy_expectation(&o.post_state, h))
        .sum();
    after - energy_expectation(rho_pre, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn projector_at_poles() {
        let b = MeasurementBasis::new(0.0, 0.0).unwrap();
        assert!((b.projector(Outcome::Plus) - ComplexMatrix2::diag(1.0, 0.0)).max_abs() < 1e-15);
        let b = MeasurementBasis::new(PI, 1.0).unwrap();
        assert!((b.projector(Outcome::Plus) - ComplexMatrix2::diag(0.0, 1.0)).max_abs() < 1e-15);
        assert!((b.projector(Outcome::Minus) - ComplexMatrix2::diag(1.0, 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn projector_on_equator() {
        let b = MeasurementBasis::new(FRAC_PI_2, FRAC_PI_4).unwrap();
        let e = Complex64::from_polar(0.5, FRAC_PI_4);
        let expected = ComplexMatrix2::new(c(0.5, 0.0), e.conj(), e, c(0.5, 0.0));
        assert!((b.projector(Outcome::Plus) - expected).max_abs() < 1e-15);
    }

    #[test]
    fn projectors_idempotent_and_complete() {
        let b = MeasurementBasis::new(1.1, 4.0).unwrap();
        let (p, m) = b.projectors();
        assert!((p * p - p).max_abs() < 1e-12);
        assert!((m * m - m).max_abs() < 1e-12);
        assert!((p + m - ComplexMatrix2::identity()).max_abs() < 1e-12);
        assert!((p * m).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_angles() {
        assert!(MeasurementBasis::new(-0.1, 0.0).is_err());
        assert!(MeasurementBasis::new(PI + 1e-9, 0.0).is_err());
        assert!(MeasurementBasis::new(1.0, TAU).is_err());
        assert!(MeasurementBasis::new(1.0, -0.5).is_err());
        assert!(MeasurementBasis::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn measure_examples() {
        let b = MeasurementBasis::new(0.0, 0.0).unwrap();
        let (p, m) = measure(&DensityMatrix::ground(), &b);
        assert_eq!(p.probability, 0.0);
        assert!(p.unreachable);
        assert_eq!(m.probability, 1.0);
        assert!((p.post_state.purity() - 1.0).abs() < 1e-10);

        let b = MeasurementBasis::new(2.2, 0.3).unwrap();
        let (p, m) = measure(&DensityMatrix::maximally_mixed(), &b);
        assert!((p.probability - 0.5).abs() < 1e-15 && (m.probability - 0.5).abs() < 1e-15);

        let b = MeasurementBasis::new(0.98 * PI, 0.0).unwrap();
        let (p, _) = measure(&DensityMatrix::excited(), &b);
        assert!((p.probability - 0.000987).abs() < 5e-7, "{}", p.probability);
    }

    #[test]
    fn energy_jump_examples() {
        let h = Hamiltonian::new(0.5).unwrap();
        let b = MeasurementBasis::new(PI, 0.7).unwrap();
        let rho = DensityMatrix::from_bloch(0.3, -0.2, 0.5).unwrap();
        assert!(measurement_energy_jump(&rho, &b, &h).abs() < 1e-15);

        let b = MeasurementBasis::new(1.3, 2.0).unwrap();
        let own = b.post_state(Outcome::Plus);
        assert!(measurement_energy_jump(&own, &b, &h).abs() < 1e-15);

        let b = MeasurementBasis::new(FRAC_PI_2, 0.0).unwrap();
        let jump = measurement_energy_jump(&DensityMatrix::excited(), &b, &h);
        assert!((jump + 0.25).abs() < 1e-15);
    }
}
