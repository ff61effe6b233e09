//! Simulation of a two-stroke quantum refrigerator whose working qubit is
//! alternately measured projectively and relaxed against one of two thermal
//! baths, chosen by the measurement outcome.
//!
//! The crate is organised bottom-up:
//!
//! * [`qubit`]: 2×2 complex algebra, density matrices, entropy and energy.
//! * [`measurement`]: the projective measurement stroke.
//! * [`channel`]: the thermal feedback stroke (closed form, Kraus form and
//!   an RK4 reference integrator).
//! * [`cycle`]: steady outcome statistics and per-cycle thermodynamics.
//! * [`sweep`]: parameter grids, CSV/manifest output and run verification.
//!
//! Units are natural throughout: `ħ = k_B = 1`, entropies in nats.

// `!(x > y)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cycle;
pub mod measurement;
pub mod qubit;
pub mod sweep;

pub use channel::{BathSpec, ChannelError, ChannelOptions};
pub use cycle::{CycleError, CycleReport, CycleSpec, Regime, TransitionKernel};
pub use measurement::{MeasurementBasis, MeasurementError, MeasurementOutcome, Outcome};
pub use qubit::{ComplexMatrix2, DensityMatrix, Hamiltonian, StateError};
