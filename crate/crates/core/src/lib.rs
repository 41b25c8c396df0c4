//! Stochastic processes driven by incomplete random variables.
//!
//! * [`channel`]: Q-rule reading channel, effective histogram, symmetric coupling.
//! * [`paths`]: exhaustive path expansion, exact census, phase solving and the
//!   path-sum / amplitude identity.
//! * [`markov`]: games driven by incomplete noise, effective kernels and
//!   amplitude propagation.
//! * [`quantum`]: transfer-matrix propagator of a noisy 1D particle and its
//!   reference wave-equation solver.

pub mod channel;
pub mod markov;
pub mod parallel;
pub mod paths;
pub mod quantum;
pub mod rng;
pub mod stats;

pub use channel::{
    effective_distribution, sample_reading, symmetric_coupling, symmetrizing_misreads,
    BareDistribution, ChannelError, CouplingMatrix, EffectiveDistribution, QRuleParams,
    ReadingChannel, ReadingOutcome, ReadingTally,
};

/// Version string embedded in run records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
