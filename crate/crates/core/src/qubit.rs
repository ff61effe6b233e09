//! Exact 2×2 complex algebra and single-qubit state primitives.
//!
//! Every matrix uses the ordered basis `(|e⟩, |g⟩)`: index 0 is the excited
//! state, index 1 the ground state, so `σ_z = diag(+1, −1)`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance on Hermiticity, trace and eigenvalue negativity of a state.
pub const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace is {0} instead of 1")]
    BadTrace(f64),
    #[error("matrix has negative eigenvalue {0:e}")]
    NegativeEigenvalue(f64),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("angular frequency must be positive and finite, got {0}")]
    BadFrequency(f64),
}

#[inline]
fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A general complex 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2(pub [[Complex64; 2]; 2]);

impl ComplexMatrix2 {
    pub const fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Self([[a11, a12], [a21, a22]])
    }

    pub fn zeros() -> Self {
        Self([[c(0.0, 0.0); 2]; 2])
    }

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0)
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(c(a, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(b, 0.0))
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: [Complex64; 2], v: [Complex64; 2]) -> Self {
        Self([
            [u[0] * v[0].conj(), u[0] * v[1].conj()],
            [u[1] * v[0].conj(), u[1] * v[1].conj()],
        ])
    }

    /// `σ₊ = |e⟩⟨g|`
    pub fn raising() -> Self {
        Self::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))
    }

    /// `σ₋ = |g⟩⟨e|`
    pub fn lowering() -> Self {
        Self::new(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self::new(
            m[0][0].conj(),
            m[1][0].conj(),
            m[0][1].conj(),
            m[1][1].conj(),
        )
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    /// `M ρ M†`
    pub fn sandwich(&self, rho: &Self) -> Self {
        *self * *rho * self.adjoint()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `max |M − M†|` entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for ComplexMatrix2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

impl Sub for ComplexMatrix2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self::new(
            a[0][0] - b[0][0],
            a[0][1] - b[0][1],
            a[1][0] - b[1][0],
            a[1][1] - b[1][1],
        )
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Real eigenvalues of a Hermitian 2×2 matrix, descending.
///
/// Uses `λ = (T ± √(T² − 4D))/2`, written as `T/2 ± √(((a−d)/2)² + |b|²)`
/// so the discriminant is non-negative by construction.
pub fn eigvals_2x2(m: &ComplexMatrix2) -> Result<(f64, f64), StateError> {
    if !m.is_finite() {
        return Err(StateError::NonFinite);
    }
    let defect = m.hermiticity_defect();
    if defect > STATE_TOL {
        return Err(StateError::NotHermitian(defect));
    }
    let a = m.get(0, 0).re;
    let d = m.get(1, 1).re;
    let b = 0.5 * (m.get(0, 1) + m.get(1, 0).conj());
    let half_trace = 0.5 * (a + d);
    let radius = (0.5 * (a - d)).hypot(b.norm());
    Ok((half_trace + radius, half_trace - radius))
}

/// Qubit Hamiltonian `H = (ω/2) σ_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian {
    omega: f64,
}

impl Hamiltonian {
    pub fn new(omega: f64) -> Result<Self, StateError> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(StateError::BadFrequency(omega));
        }
        Ok(Self { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn matrix(&self) -> ComplexMatrix2 {
        ComplexMatrix2::diag(0.5 * self.omega, -0.5 * self.omega)
    }
}

/// A validated qubit state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(ComplexMatrix2);

impl DensityMatrix {
    /// Validates all three state invariants to [`STATE_TOL`].
    pub fn new(m: ComplexMatrix2) -> Result<Self, StateError> {
        let (_, low) = eigvals_2x2(&m)?;
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(StateError::BadTrace(tr.re));
        }
        if low < -STATE_TOL {
            return Err(StateError::NegativeEigenvalue(low));
        }
        Ok(Self(m))
    }

    /// Pure state `|ψ⟩⟨ψ|`; the ket is normalised first.
    pub fn pure(ket: [Complex64; 2]) -> Result<Self, StateError> {
        let norm = (ket[0].norm_sqr() + ket[1].norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(StateError::NonFinite);
        }
        let k = [ket[0] / norm, ket[1] / norm];
        Self::new(ComplexMatrix2::outer(k, k))
    }

    pub fn excited() -> Self {
        Self(ComplexMatrix2::diag(1.0, 0.0))
    }

    pub fn ground() -> Self {
        Self(ComplexMatrix2::diag(0.0, 1.0))
    }

    pub fn maximally_mixed() -> Self {
        Self(ComplexMatrix2::diag(0.5, 0.5))
    }

    /// Diagonal state with excited population `p_e`.
    pub fn diagonal(p_e: f64) -> Result<Self, StateError> {
        Self::new(ComplexMatrix2::diag(p_e, 1.0 - p_e))
    }

    /// Inverse of [`bloch_coordinates`]: `ρ = (I + x σ_x + y σ_y + z σ_z)/2`.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self, StateError> {
        Self::new(ComplexMatrix2::new(
            c(0.5 * (1.0 + z), 0.0),
            c(0.5 * x, -0.5 * y),
            c(0.5 * x, 0.5 * y),
            c(0.5 * (1.0 - z), 0.0),
        ))
    }

    pub fn matrix(&self) -> &ComplexMatrix2 {
        &self.0
    }

    pub fn excited_population(&self) -> f64 {
        self.0.get(0, 0).re
    }

    /// `ρ_eg`, the coherence between excited and ground state.
    pub fn coherence(&self) -> Complex64 {
        self.0.get(0, 1)
    }

    /// `Tr(ρ²)`
    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        eigvals_2x2(&self.0).expect("validated state is Hermitian")
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalised ket.
    pub fn expectation_in(&self, ket: [Complex64; 2]) -> f64 {
        let m = &self.0 .0;
        let mut acc = c(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += ket[i].conj() * m[i][j] * ket[j];
            }
        }
        acc.re
    }

    /// `Tr(Pρ)` for any operator `P`.
    pub fn expectation(&self, op: &ComplexMatrix2) -> f64 {
        (*op * self.0).trace().re
    }

    /// Largest entrywise distance to another state.
    pub fn distance_max(&self, other: &Self) -> f64 {
        (self.0 - other.0).max_abs()
    }
}

/// `S(ρ) = −Σ λ ln λ` in nats, with `0 ln 0 = 0`.
///
/// Eigenvalues in `[−STATE_TOL, 0]` are clamped to zero; anything more
/// negative is reported as an error.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64, StateError> {
    let (hi, lo) = rho.eigenvalues();
    let mut s = 0.0;
    for lam in [hi, lo] {
        if lam < -STATE_TOL {
            return Err(StateError::NegativeEigenvalue(lam));
        }
        if lam > 0.0 {
            s -= lam * lam.ln();
        }
    }
    Ok(s.max(0.0))
}

/// `Tr(Hρ) = (ω/2)(ρ_ee − ρ_gg)`
pub fn energy_expectation(rho: &DensityMatrix, h: &Hamiltonian) -> f64 {
    let m = rho.matrix();
    0.5 * h.omega() * (m.get(0, 0).re - m.get(1, 1).re)
}

/// Bloch vector `(x, y, z)` with `x = 2 Re ρ_eg`, `y = −2 Im ρ_eg`,
/// `z = ρ_ee − ρ_gg`.
pub fn bloch_coordinates(rho: &DensityMatrix) -> (f64, f64, f64) {
    let m = rho.matrix();
    let eg = m.get(0, 1);
    (2.0 * eg.re, -2.0 * eg.im, m.get(0, 0).re - m.get(1, 1).re)
}
