//! The two-stroke measurement/feedback cycle and its thermodynamics.
//!
//! One cycle measures the qubit in the basis `{|ψ₊⟩, |ψ₋⟩}`, then couples it
//! to the cold bath for `τ_c` after outcome `+` or to the hot bath for `τ_h`
//! after outcome `−`. Because the measurement is rank-1 projective, the state
//! after measurement is fixed by the outcome label alone, so the sequence of
//! labels is a two-state Markov chain with kernel `q[k′|k]`. The steady state
//! of the engine is the stationary distribution of that chain.
//!
//! Sign conventions: `Qc`, `Qh` are heats flowing *into* the qubit from the
//! cold and hot bath; `W` is the energy delivered by the measurement. The
//! first law reads `W + Qc + Qh = 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use num_complex::Complex64;

use crate::channel::{displacement, evolve, BathSpec, ChannelError, ChannelOptions};
use crate::measurement::{measure, MeasurementBasis, MeasurementError, Outcome};
use crate::qubit::{
    energy_expectation, von_neumann_entropy, ComplexMatrix2, DensityMatrix, Hamiltonian, StateError,
};

/// Kernels whose `q[+|−] + q[−|+]` falls at or below this have no unique
/// stationary distribution.
pub const DEGENERATE_KERNEL_TOL: f64 = 1e-15;

/// `|W| ≤ PURE_INFORMATION_TOL · ω` counts as zero work.
pub const PURE_INFORMATION_TOL: f64 = 1e-14;

/// Minimum burn-in cycles discarded by [`monte_carlo_oracle`].
pub const MC_BURN_IN: usize = 100;
const MC_MAX_BURN_IN: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CycleError {
    #[error("hot bath must be hotter than cold bath (T_h = {hot}, T_c = {cold})")]
    TemperatureOrder { hot: f64, cold: f64 },
    #[error("no unique stationary distribution (q[+|−] + q[−|+] = {0:e})")]
    NoUniqueStationary(f64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Full description of one refrigerator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSpec {
    pub hamiltonian: Hamiltonian,
    pub basis: MeasurementBasis,
    pub cold: BathSpec,
    pub hot: BathSpec,
    pub options: ChannelOptions,
}

impl CycleSpec {
    pub fn new(
        hamiltonian: Hamiltonian,
        basis: MeasurementBasis,
        cold: BathSpec,
        hot: BathSpec,
        options: ChannelOptions,
    ) -> Result<Self, CycleError> {
        if !(hot.temperature() > cold.temperature()) {
            return Err(CycleError::TemperatureOrder {
                hot: hot.temperature(),
                cold: cold.temperature(),
            });
        }
        Ok(Self {
            hamiltonian,
            basis,
            cold,
            hot,
            options,
        })
    }

    /// Bath contacted after outcome `k`.
    pub fn bath_for(&self, k: Outcome) -> &BathSpec {
        match k {
            Outcome::Plus => &self.cold,
            Outcome::Minus => &self.hot,
        }
    }

    /// Reversible (Carnot) COP `T_c/(T_h − T_c)`.
    pub fn carnot_cop(&self) -> f64 {
        let (tc, th) = (self.cold.temperature(), self.hot.temperature());
        tc / (th - tc)
    }

    /// Post-feedback state `ρ̃_k = V_k[|ψ_k⟩⟨ψ_k|]`.
    pub fn feedback_state(&self, k: Outcome) -> Result<DensityMatrix, CycleError> {
        let bath = self.bath_for(k);
        Ok(evolve(
            &self.basis.post_state(k),
            bath,
            &self.hamiltonian,
            bath.contact_time(),
            &self.options,
        )?)
    }

    fn feedback_states(&self) -> Result<[DensityMatrix; 2], CycleError> {
        Ok([
            self.feedback_state(Outcome::Plus)?,
            self.feedback_state(Outcome::Minus)?,
        ])
    }
}

/// Conditional outcome probabilities `q[k′|k]` of consecutive cycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionKernel {
    /// `q[+|+]`
    pub q_pp: f64,
    /// `q[+|−]`
    pub q_pm: f64,
    /// `q[−|+]`
    pub q_mp: f64,
    /// `q[−|−]`
    pub q_mm: f64,
}

impl TransitionKernel {
    /// Kernel from the two independent entries `q[+|+]`, `q[+|−]`.
    pub fn from_plus_column(q_pp: f64, q_pm: f64) -> Self {
        Self {
            q_pp,
            q_pm,
            q_mp: 1.0 - q_pp,
            q_mm: 1.0 - q_pm,
        }
    }

    /// `q[next|prev]`
    pub fn prob(&self, next: Outcome, prev: Outcome) -> f64 {
        match (next, prev) {
            (Outcome::Plus, Outcome::Plus) => self.q_pp,
            (Outcome::Plus, Outcome::Minus) => self.q_pm,
            (Outcome::Minus, Outcome::Plus) => self.q_mp,
            (Outcome::Minus, Outcome::Minus) => self.q_mm,
        }
    }

    /// Second eigenvalue `q[+|+] − q[+|−]`; distances to the stationary
    /// distribution shrink by this factor every cycle.
    pub fn contraction(&self) -> f64 {
        self.q_pp - self.q_pm
    }

    /// One step of the label chain applied to `p₊`.
    pub fn step(&self, p_plus: f64) -> f64 {
        self.q_pp * p_plus + self.q_pm * (1.0 - p_plus)
    }
}

fn quadratic_form(m: &ComplexMatrix2, v: [Complex64; 2]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += v[i].conj() * m.get(i, j) * v[j];
        }
    }
    acc.re
}

/// The switching probabilities come from the displacement `V_k[ρ_k] − ρ_k`
/// (orthogonal to `ψ_k′` at zero order), so they stay accurate when the
/// contact is short and the kernel is close to the identity.
fn kernel_for(spec: &CycleSpec) -> Result<TransitionKernel, CycleError> {
    let switch = |k: Outcome| -> Result<f64, CycleError> {
        let bath = spec.bath_for(k);
        let d = displacement(
            &spec.basis.post_state(k),
            bath,
            &spec.hamiltonian,
            bath.contact_time(),
            &spec.options,
        )?;
        Ok(quadratic_form(&d, spec.basis.ket(k.other())).clamp(0.0, 1.0))
    };
    let q_mp = switch(Outcome::Plus)?;
    let q_pm = switch(Outcome::Minus)?;
    Ok(TransitionKernel {
        q_pp: 1.0 - q_mp,
        q_mp,
        q_pm,
        q_mm: 1.0 - q_pm,
    })
}

/// `q[k′|k] = ⟨ψ_k′|V_k[|ψ_k⟩⟨ψ_k|]|ψ_k′⟩`
pub fn transition_kernel(spec: &CycleSpec) -> Result<TransitionKernel, CycleError> {
    kernel_for(spec)
}

/// Stationary probability of outcome `+`: `p₊ = q[+|−]/(q[+|−] − q[+|+] + 1)`.
///
/// The denominator is evaluated as `q[+|−] + q[−|+]`, which is the same
/// quantity without the cancellation in `1 − q[+|+]`.
pub fn steady_p_plus(kernel: &TransitionKernel) -> Result<f64, CycleError> {
    let denom = kernel.q_pm + kernel.q_mp;
    if !(denom > DEGENERATE_KERNEL_TOL) {
        return Err(CycleError::NoUniqueStationary(denom));
    }
    Ok(kernel.q_pm / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Net heat is drawn out of the cold bath.
    Cooler,
    NonCooler,
    /// Zero measurement work while still cooling; COP diverges.
    PureInformation,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Cooler => "cooler",
            Regime::NonCooler => "non-cooler",
            Regime::PureInformation => "pure-information",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stationarity {
    Unique,
    /// Identity-like kernel: both labels are absorbing and no bath changes the
    /// state, so every mixture gives the same (null) thermodynamics. `p₊` is
    /// reported as 1/2.
    Degenerate,
}

/// Steady-state thermodynamics of one cycle. Entropies in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleReport {
    pub p_plus: f64,
    pub stationarity: Stationarity,
    pub kernel: TransitionKernel,
    /// `⟨W⟩`
    pub work: f64,
    /// `⟨Q_c⟩`
    pub heat_cold: f64,
    /// `⟨Q_h⟩`
    pub heat_hot: f64,
    /// `⟨ΔSᵐ⟩ = Σ p_k Tr(ρ̃_k ln ρ̃_k)`
    pub measurement_entropy_change: f64,
    /// `⟨I⟩`
    pub information: f64,
    /// `⟨S⟩ = −Q_h/T_h − Q_c/T_c`
    pub bath_entropy_change: f64,
    /// `⟨σ⟩ = ⟨I⟩ + ⟨S⟩`
    pub entropy_production: f64,
    /// Entropy production of the cold (`[0]`) and hot (`[1]`) feedback
    /// branches, unweighted.
    pub branch_entropy_production: [f64; 2],
    /// `Q_c/W`; `+∞` in the pure-information regime, NaN when undefined.
    pub cop: f64,
    pub cop_carnot: f64,
    pub cop_ratio: f64,
    pub regime: Regime,
}

impl CycleReport {
    /// `|W + Q_c + Q_h|` relative to the scale of the largest term.
    pub fn first_law_residual(&self) -> f64 {
        let scale = 1f64
            .max(self.work.abs())
            .max(self.heat_cold.abs())
            .max(self.heat_hot.abs());
        (self.work + self.heat_cold + self.heat_hot).abs() / scale
    }

    /// Whether `cop` is a number or `+∞` (as opposed to undefined).
    pub fn cop_defined(&self) -> bool {
        !self.cop.is_nan()
    }
}

/// Computes every steady-state quantity of the cycle.
pub fn cycle_report(spec: &CycleSpec) -> Result<CycleReport, CycleError> {
    let h = &spec.hamiltonian;
    let tilde = spec.feedback_states()?;
    let pre = [
        spec.basis.post_state(Outcome::Plus),
        spec.basis.post_state(Outcome::Minus),
    ];
    let kernel = kernel_for(spec)?;
    let (p_plus, stationarity) = match steady_p_plus(&kernel) {
        Ok(p) => (p, Stationarity::Unique),
        Err(CycleError::NoUniqueStationary(_)) => (0.5, Stationarity::Degenerate),
        Err(e) => return Err(e),
    };
    let p = [p_plus, 1.0 - p_plus];

    let mut energy_gain = [0.0; 2];
    let mut s_tilde = [0.0; 2];
    let mut s_pre = [0.0; 2];
    let mut work = 0.0;
    for k in 0..2 {
        // E(ρ̃_k) − E(ψ_k) from the population shift directly, free of the
        // cancellation between two O(ω) energies
        let bath = spec.bath_for(Outcome::BOTH[k]);
        let d = displacement(&pre[k], bath, h, bath.contact_time(), &spec.options)?;
        energy_gain[k] = h.omega() * d.get(0, 0).re;
        work -= p[k] * energy_gain[k];
        s_tilde[k] = von_neumann_entropy(&tilde[k])?;
        s_pre[k] = von_neumann_entropy(&pre[k])?;
    }
    let heat_cold = p[0] * energy_gain[0];
    let heat_hot = p[1] * energy_gain[1];

    let measurement_entropy_change = -(p[0] * s_tilde[0] + p[1] * s_tilde[1]);
    let information = (p[0] * s_tilde[0] + p[1] * s_tilde[1]) - (p[0] * s_pre[0] + p[1] * s_pre[1]);
    let (tc, th) = (spec.cold.temperature(), spec.hot.temperature());
    let bath_entropy_change = -heat_hot / th - heat_cold / tc;
    let entropy_production = information + bath_entropy_change;
    let temps = [tc, th];
    let branch_entropy_production =
        [0, 1].map(|k| s_tilde[k] - s_pre[k] - energy_gain[k] / temps[k]);

    let cop_carnot = spec.carnot_cop();
    let zero_work = work.abs() <= PURE_INFORMATION_TOL * h.omega();
    let (cop, regime) = if zero_work {
        if heat_cold > 0.0 {
            (f64::INFINITY, Regime::PureInformation)
        } else {
            (f64::NAN, Regime::NonCooler)
        }
    } else {
        let regime = if heat_cold > 0.0 {
            Regime::Cooler
        } else {
            Regime::NonCooler
        };
        (heat_cold / work, regime)
    };

    Ok(CycleReport {
        p_plus,
        stationarity,
        kernel,
        work,
        heat_cold,
        heat_hot,
        measurement_entropy_change,
        information,
        bath_entropy_change,
        entropy_production,
        branch_entropy_production,
        cop,
        cop_carnot,
        cop_ratio: cop / cop_carnot,
        regime,
    })
}

/// Outcome of checking `ε/ε_C ≤ 1 + T_h⟨I⟩/⟨W⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CopBound {
    Applicable {
        lhs: f64,
        rhs: f64,
        holds: bool,
    },
    /// The bound is derived for `W > 0` only.
    NotApplicable,
}

/// Checks the information-corrected COP bound; `hot_temperature` is `T_h`.
pub fn cop_bound_check(report: &CycleReport, hot_temperature: f64) -> CopBound {
    if !(report.work > 0.0) || !report.cop.is_finite() {
        return CopBound::NotApplicable;
    }
    let lhs = report.cop_ratio;
    let rhs = 1.0 + hot_temperature * report.information / report.work;
    CopBound::Applicable {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-10,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumHeatRatio {
    /// `−⟨Q_c⟩/⟨Q_h⟩` in the long-contact limit.
    pub ratio: f64,
    /// `ratio ≥ T_c/T_h`, equivalent to `⟨S⟩ ≤ 0` when heat is released to
    /// the hot bath.
    pub beats_carnot: bool,
    /// Denominator vanished; `ratio` is a signed infinity.
    pub singular: bool,
}

/// Closed-form `−⟨Q_c⟩/⟨Q_h⟩` when both feedback strokes fully thermalize:
///
/// ```text
/// (n_h + sin²(θ/2)) (cos²(θ/2) + n_c cos θ)
/// ─────────────────────────────────────────
/// (n_c + cos²(θ/2)) (n_h cos θ − sin²(θ/2))
/// ```
///
/// Contact times and couplings drop out in that limit.
pub fn equilibrium_heat_ratio(spec: &CycleSpec) -> EquilibriumHeatRatio {
    let h = &spec.hamiltonian;
    let n_c = spec.cold.occupation(h);
    let n_h = spec.hot.occupation(h);
    let theta = spec.basis.theta();
    let (sin_half, cos_half) = (0.5 * theta).sin_cos();
    let (sin2, cos2) = (sin_half * sin_half, cos_half * cos_half);
    let cos_t = theta.cos();

    let num = (n_h + sin2) * (cos2 + n_c * cos_t);
    let den = (n_c + cos2) * (n_h * cos_t - sin2);
    let singular = den == 0.0;
    let ratio = if singular {
        f64::INFINITY.copysign(num)
    } else {
        num / den
    };
    let threshold = spec.cold.temperature() / spec.hot.temperature();
    EquilibriumHeatRatio {
        ratio,
        beats_carnot: ratio >= threshold,
        singular,
    }
}

/// Outcome distribution at the start of one cycle and the unselected state
/// at its end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCycleStep {
    pub p_plus: f64,
    pub p_minus: f64,
    /// `Σ_k p_k ρ̃_k`
    pub state: DensityMatrix,
}

/// Runs `n_cycles` cycles from `rho0`, propagating the outcome distribution
/// exactly: each cycle measures the unselected state left by the previous
/// feedback stroke.
pub fn iterate_limit_cycle(
    spec: &CycleSpec,
    rho0: &DensityMatrix,
    n_cycles: usize,
) -> Result<Vec<LimitCycleStep>, CycleError> {
    let tilde = spec.feedback_states()?;
    let mut out = Vec::with_capacity(n_cycles);
    let mut current = *rho0;
    for _ in 0..n_cycles {
        let (plus, minus) = measure(&current, &spec.basis);
        let mixed = tilde[0].matrix().scale_re(plus.probability)
            + tilde[1].matrix().scale_re(minus.probability);
        let state = DensityMatrix::new(mixed)?;
        out.push(LimitCycleStep {
            p_plus: plus.probability,
            p_minus: minus.probability,
            state,
        });
        current = state;
    }
    Ok(out)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl SampledReport {
    /// The sample covers at least 100 relaxation times and at least 100
    /// expected `+ → −` switches; below that the batch-means error bars are
    /// not trustworthy.
    pub fn resolved(&self) -> bool {
        let n = self.n_samples as f64;
        n >= 100.0 * self.mixing_time && n * self.expected_switch_rate >= 100.0
    }
}

impl Estimate {
    /// Whether `value` lies within `k` standard errors of the mean; a zero
    /// standard error requires exact agreement up to rounding.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error + 1e-15 * value.abs().max(1e-300)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledReport {
    pub n_samples: usize,
    /// Burn-in actually used: `max(100, 20/(q[+|−] + q[−|+]))`, capped.
    pub burn_in: usize,
    /// `1/(q[+|−] + q[−|+])`, the relaxation time of the label chain in
    /// cycles.
    pub mixing_time: f64,
    /// Stationary probability of a `+ → −` switch per cycle, `p₊ q[−|+]`.
    pub expected_switch_rate: f64,
    pub p_plus: Estimate,
    pub work: Estimate,
    pub heat_cold: Estimate,
    pub heat_hot: Estimate,
}

/// Batch-means accumulator; standard errors account for the chain's
/// autocorrelation as long as batches are much longer than `1/(1 − |λ|)`.
struct BatchMeans {
    batch_len: usize,
    batches: Vec<f64>,
    partial: f64,
    count_in_batch: usize,
    total: f64,
    n: usize,
}

impl BatchMeans {
    fn new(n_samples: usize, n_batches: usize) -> Self {
        Self {
            batch_len: (n_samples / n_batches).max(1),
            batches: Vec::with_capacity(n_batches + 1),
            partial: 0.0,
            count_in_batch: 0,
            total: 0.0,
            n: 0,
        }
    }

    fn push(&mut self, x: f64) {
        self.total += x;
        self.n += 1;
        self.partial += x;
        self.count_in_batch += 1;
        if self.count_in_batch == self.batch_len {
            self.batches.push(self.partial / self.batch_len as f64);
            self.partial = 0.0;
            self.count_in_batch = 0;
        }
    }

    fn finish(&self) -> Estimate {
        let mean = self.total / self.n as f64;
        let b = self.batches.len();
        let std_error = if b < 2 {
            0.0
        } else {
            let bm = self.batches.iter().sum::<f64>() / b as f64;
            let var = self.batches.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (b - 1) as f64;
            (var / b as f64).sqrt()
        };
        Estimate { mean, std_error }
    }
}

/// Stochastic reference for [`cycle_report`]: simulates individual cycles,
/// drawing each outcome from the Born rule on the state left by the previous
/// feedback stroke, and averages the per-cycle work and heats.
///
/// Starts from the maximally mixed state and discards a burn-in of at least
/// [`MC_BURN_IN`] cycles, longer for slowly mixing chains.
/// The work of a cycle is the energy jump of its measurement. Output depends
/// only on `(spec, n_samples, seed)`.
pub fn monte_carlo_oracle(
    spec: &CycleSpec,
    n_samples: usize,
    seed: u64,
) -> Result<SampledReport, CycleError> {
    let n_samples = n_samples.max(1);
    let h = &spec.hamiltonian;
    let tilde = spec.feedback_states()?;
    let e_pre = [
        energy_expectation(&spec.basis.post_state(Outcome::Plus), h),
        energy_expectation(&spec.basis.post_state(Outcome::Minus), h),
    ];
    let e_post = [
        energy_expectation(&tilde[0], h),
        energy_expectation(&tilde[1], h),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |state: &DensityMatrix, rng: &mut ChaCha8Rng| {
        let (plus, _) = measure(state, &spec.basis);
        if rng.random::<f64>() < plus.probability {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    };

    let kernel = kernel_for(spec)?;
    let mixing_time = 1.0 / (kernel.q_pm + kernel.q_mp);
    let burn_in = MC_BURN_IN.max((20.0 * mixing_time).min(MC_MAX_BURN_IN as f64) as usize);

    let start = DensityMatrix::maximally_mixed();
    let mut prev_energy = energy_expectation(&start, h);
    let mut label = draw(&start, &mut rng);
    for _ in 0..burn_in {
        prev_energy = e_post[label.index()];
        label = draw(&tilde[label.index()], &mut rng);
    }

    let n_batches = (n_samples / 1000).clamp(2, 100).min(n_samples);
    let mut acc_p = BatchMeans::new(n_samples, n_batches);
    let mut acc_w = BatchMeans::new(n_samples, n_batches);
    let mut acc_c = BatchMeans::new(n_samples, n_batches);
    let mut acc_h = BatchMeans::new(n_samples, n_batches);
    for _ in 0..n_samples {
        let k = label.index();
        let w = e_pre[k] - prev_energy;
        let q = e_post[k] - e_pre[k];
        acc_p.push(if label == Outcome::Plus { 1.0 } else { 0.0 });
        acc_w.push(w);
        match label {
            Outcome::Plus => {
                acc_c.push(q);
                acc_h.push(0.0);
            }
            Outcome::Minus => {
                acc_c.push(0.0);
                acc_h.push(q);
            }
        }
        prev_energy = e_post[k];
        label = draw(&tilde[k], &mut rng);
    }

    Ok(SampledReport {
        n_samples,
        burn_in,
        mixing_time,
        expected_switch_rate: kernel.q_pm * kernel.q_mp / (kernel.q_pm + kernel.q_mp),
        p_plus: acc_p.finish(),
        work: acc_w.finish(),
        heat_cold: acc_c.finish(),
        heat_hot: acc_h.finish(),
    })
}
