//! Feedback stroke: finite-time relaxation of the qubit against a thermal
//! radiation bath.
//!
//! The reduced dynamics is the damped two-level master equation
//!
//! ```text
//! dρ/dt = −i[H, ρ] + γ(n+1) D[σ₋]ρ + γ n D[σ₊]ρ,
//! D[L]ρ = LρL† − ½{L†L, ρ}
//! ```
//!
//! with `n` the Planck occupation of the bath at the qubit frequency. Three
//! representations are provided: the closed-form solution ([`evolve`]), an
//! equivalent Kraus decomposition ([`kraus_apply`]) and a fixed-step RK4
//! integration of the equation above ([`evolve_ode_oracle`]).

use num_complex::Complex64;
use thiserror::Error;

use crate::qubit::{ComplexMatrix2, DensityMatrix, Hamiltonian};

/// Largest `h·rate` accepted by the RK4 integrator.
pub const RK4_STABILITY_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("temperature must be positive and finite, got {0}")]
    BadTemperature(f64),
    #[error("coupling must be positive and finite, got {0}")]
    BadCoupling(f64),
    #[error("frequency must be positive and finite, got {0}")]
    BadFrequency(f64),
    #[error("duration must be non-negative and finite, got {0}")]
    NegativeDuration(f64),
    #[error("integrator step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("integrator step {step} too large for rate {rate} (h·rate > {RK4_STABILITY_LIMIT})")]
    UnstableStep { step: f64, rate: f64 },
}

/// `n = 1/(e^{ω/T} − 1)`
pub fn planck_occupation(temperature: f64, omega: f64) -> Result<f64, ChannelError> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(ChannelError::BadTemperature(temperature));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(ChannelError::BadFrequency(omega));
    }
    // exp_m1 keeps precision when ω/T is small; overflow gives n = 0.
    Ok(1.0 / (omega / temperature).exp_m1())
}

/// A thermal bath and the time the qubit spends in contact with it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    temperature: f64,
    coupling: f64,
    contact_time: f64,
}

impl BathSpec {
    pub fn new(temperature: f64, coupling: f64, contact_time: f64) -> Result<Self, ChannelError> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(ChannelError::BadTemperature(temperature));
        }
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(ChannelError::BadCoupling(coupling));
        }
        if !(contact_time.is_finite() && contact_time >= 0.0) {
            return Err(ChannelError::NegativeDuration(contact_time));
        }
        Ok(Self {
            temperature,
            coupling,
            contact_time,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn contact_time(&self) -> f64 {
        self.contact_time
    }

    pub fn with_contact_time(self, contact_time: f64) -> Result<Self, ChannelError> {
        Self::new(self.temperature, self.coupling, contact_time)
    }

    /// Planck occupation at the qubit frequency.
    pub fn occupation(&self, h: &Hamiltonian) -> f64 {
        planck_occupation(self.temperature, h.omega()).expect("validated on construction")
    }

    /// Population relaxation rate `Γ = γ(2n + 1)`.
    pub fn decay_rate(&self, h: &Hamiltonian) -> f64 {
        self.coupling * (2.0 * self.occupation(h) + 1.0)
    }

    /// Fixed point of the channel, `diag(n, n+1)/(2n+1)`.
    pub fn gibbs_state(&self, h: &Hamiltonian) -> DensityMatrix {
        let n = self.occupation(h);
        DensityMatrix::diagonal(n / (2.0 * n + 1.0)).expect("Gibbs populations are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelOptions {
    /// Include the coherent rotation `−i[H, ρ]` alongside dissipation.
    pub include_unitary: bool,
    /// RK4 step for [`evolve_ode_oracle`]; `None` picks `min(0.01, 0.01/Γ)`, and also at
    /// most `0.01/ω` when the unitary part is on.
    pub integrator_step: Option<f64>,
}

impl Default for ChannelOptions {
    fn default() -> Self {
        Self {
            include_unitary: true,
            integrator_step: None,
        }
    }
}

impl ChannelOptions {
    pub fn with_unitary(include_unitary: bool) -> Self {
        Self {
            include_unitary,
            ..Self::default()
        }
    }
}

fn check_duration(t: f64) -> Result<(), ChannelError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(ChannelError::NegativeDuration(t));
    }
    Ok(())
}

/// Closed-form propagation for a duration `t`.
///
/// `p_e(t) = p_e^∞ + (p_e(0) − p_e^∞) e^{−Γt}` with `p_e^∞ = n/(2n+1)`, and
/// `ρ_eg(t) = ρ_eg(0) e^{−Γt/2}` times `e^{−iωt}` when the unitary part is on.
pub fn evolve(
    rho: &DensityMatrix,
    bath: &BathSpec,
    h: &Hamiltonian,
    t: f64,
    opts: &ChannelOptions,
) -> Result<DensityMatrix, ChannelError> {
    check_duration(t)?;
    if t == 0.0 {
        return Ok(*rho);
    }
    let n = bath.occupation(h);
    let rate = bath.decay_rate(h);
    let p_inf = n / (2.0 * n + 1.0);
    let decay = (-rate * t).exp();
    let p_e = p_inf + (rho.excited_population() - p_inf) * decay;
    let mut coherence = rho.coherence() * (-0.5 * rate * t).exp();
    if opts.include_unitary {
        coherence *= Complex64::from_polar(1.0, -h.omega() * t);
    }
    let m = ComplexMatrix2::new(
        Complex64::new(p_e, 0.0),
        coherence,
        coherence.conj(),
        Complex64::new(1.0 - p_e, 0.0),
    );
    Ok(DensityMatrix::new(m).expect("thermal channel output is a valid state"))
}

/// `V[ρ] − ρ` for duration `t`, evaluated without cancellation so that it
/// keeps full relative precision when the channel is close to the identity.
pub fn displacement(
    rho: &DensityMatrix,
    bath: &BathSpec,
    h: &Hamiltonian,
    t: f64,
    opts: &ChannelOptions,
) -> Result<ComplexMatrix2, ChannelError> {
    check_duration(t)?;
    let n = bath.occupation(h);
    let rate = bath.decay_rate(h);
    let p_inf = n / (2.0 * n + 1.0);
    let dp = (p_inf - rho.excited_population()) * -(-rate * t).exp_m1();
    // e^{a+ib} − 1 = (e^a − 1) e^{ib} + (e^{ib} − 1)
    let a = (-0.5 * rate * t).exp_m1();
    let factor_m1 = if opts.include_unitary {
        let b = -h.omega() * t;
        let rot = Complex64::from_polar(1.0, b);
        let half = (0.5 * b).sin();
        rot * a + Complex64::new(-2.0 * half * half, b.sin())
    } else {
        Complex64::new(a, 0.0)
    };
    let dc = rho.coherence() * factor_m1;
    Ok(ComplexMatrix2::new(
        Complex64::new(dp, 0.0),
        dc,
        dc.conj(),
        Complex64::new(-dp, 0.0),
    ))
}

/// Kraus operators of the channel for duration `t`.
///
/// Generalized amplitude damping with thermal weight `p = (n+1)/(2n+1)` and
/// damping `η = 1 − e^{−Γt}`, each operator followed by `e^{−iHt}` when the
/// unitary part is on (the dissipator is phase covariant, so the order of
/// rotation and damping does not matter).
pub fn kraus_operators(
    bath: &BathSpec,
    h: &Hamiltonian,
    t: f64,
    opts: &ChannelOptions,
) -> Result<[ComplexMatrix2; 4], ChannelError> {
    check_duration(t)?;
    let n = bath.occupation(h);
    let p = (n + 1.0) / (2.0 * n + 1.0);
    let survive = (-bath.decay_rate(h) * t).exp();
    let eta = 1.0 - survive;
    let z = Complex64::new(0.0, 0.0);
    let r = |x: f64| Complex64::new(x, 0.0);

    let k0 = ComplexMatrix2::new(r(p.sqrt() * survive.sqrt()), z, z, r(p.sqrt()));
    let k1 = ComplexMatrix2::new(z, z, r((p * eta).sqrt()), z);
    let k2 = ComplexMatrix2::new(r((1.0 - p).sqrt()), z, z, r(((1.0 - p) * survive).sqrt()));
    let k3 = ComplexMatrix2::new(z, r(((1.0 - p) * eta).sqrt()), z, z);
    let mut ks = [k0, k1, k2, k3];

    if opts.include_unitary {
        let half = 0.5 * h.omega() * t;
        let u = ComplexMatrix2::new(
            Complex64::from_polar(1.0, -half),
            z,
            z,
            Complex64::from_polar(1.0, half),
        );
        for k in ks.iter_mut() {
            *k = u * *k;
        }
    }
    Ok(ks)
}

/// Applies the channel through its Kraus decomposition.
pub fn kraus_apply(
    rho: &DensityMatrix,
    bath: &BathSpec,
    h: &Hamiltonian,
    t: f64,
    opts: &ChannelOptions,
) -> Result<DensityMatrix, ChannelError> {
    let ks = kraus_operators(bath, h, t, opts)?;
    let out = ks.iter().fold(ComplexMatrix2::zeros(), |acc, k| {
        acc + k.sandwich(rho.matrix())
    });
    Ok(DensityMatrix::new(out).expect("Kraus map output is a valid state"))
}

fn dissipator(l: &ComplexMatrix2, rho: &ComplexMatrix2) -> ComplexMatrix2 {
    let ld = l.adjoint();
    l.sandwich(rho) - (ld * *l).anticommutator(rho).scale_re(0.5)
}

/// Right-hand side of the master equation.
pub fn lindblad_rhs(
    rho: &ComplexMatrix2,
    bath: &BathSpec,
    h: &Hamiltonian,
    opts: &ChannelOptions,
) -> ComplexMatrix2 {
    let n = bath.occupation(h);
    let g = bath.coupling();
    let lower = ComplexMatrix2::lowering();
    let raise = ComplexMatrix2::raising();
    let mut d =
        dissipator(&lower, rho).scale_re(g * (n + 1.0)) + dissipator(&raise, rho).scale_re(g * n);
    if opts.include_unitary {
        d = d + h.matrix().commutator(rho).scale(Complex64::new(0.0, -1.0));
    }
    d
}

/// Integrates the master equation with classical fixed-step RK4.
///
/// The step is shrunk so that a whole number of steps spans `t`.
pub fn evolve_ode_oracle(
    rho: &DensityMatrix,
    bath: &BathSpec,
    h: &Hamiltonian,
    t: f64,
    opts: &ChannelOptions,
) -> Result<DensityMatrix, ChannelError> {
    check_duration(t)?;
    let rate = bath.decay_rate(h);
    let fastest = if opts.include_unitary {
        rate.max(h.omega())
    } else {
        rate
    };
    let step = match opts.integrator_step {
        Some(s) if !(s.is_finite() && s > 0.0) => return Err(ChannelError::BadStep(s)),
        Some(s) => s,
        None => 0.01f64.min(0.01 / fastest),
    };
    if step * fastest > RK4_STABILITY_LIMIT {
        return Err(ChannelError::UnstableStep {
            step,
            rate: fastest,
        });
    }
    if t == 0.0 {
        return Ok(*rho);
    }

    let n_steps = (t / step).ceil().max(1.0) as u64;
    let dt = t / n_steps as f64;
    let f = |m: &ComplexMatrix2| lindblad_rhs(m, bath, h, opts);
    let mut y = *rho.matrix();
    for _ in 0..n_steps {
        let k1 = f(&y);
        let k2 = f(&(y + k1.scale_re(0.5 * dt)));
        let k3 = f(&(y + k2.scale_re(0.5 * dt)));
        let k4 = f(&(y + k3.scale_re(dt)));
        let incr = (k1 + k2.scale_re(2.0) + k3.scale_re(2.0) + k4).scale_re(dt / 6.0);
        y = y + incr;
    }
    // Re-Hermitize to remove rounding drift before validation.
    let y = (y + y.adjoint()).scale_re(0.5);
    Ok(DensityMatrix::new(y).expect("RK4 output stays a valid state for stable steps"))
}
