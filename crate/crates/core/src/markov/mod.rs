//! Games driven by incomplete noise.
//!
//! A game updates a real state by `x' = F(x) + g(x)·y` whenever the noise
//! is read, and leaves it frozen when the reading is lost. On a uniform grid
//! the same rule gives an effective transition kernel (Chapman–Kolmogorov
//! propagation), a joint path density, and an amplitude propagator whose
//! per-step factors are `√P_j` times a phase.

mod amplitude;
mod game;
mod grid;
mod kernel;

pub use amplitude::{amplitude_path_sum, amplitude_propagate, PhaseSource};
pub use game::{builtin_games, simulate_game, BuiltinGame, GameRun, GameSpec, MapSpec};
pub use grid::{Boundary, StateGrid};
pub use kernel::{
    effective_kernel, joint_path_density, propagate_distribution, FrozenMode, JointDensity,
    TransitionKernel,
};

use thiserror::Error;

use crate::channel::ChannelError;
use crate::paths::PathError;

/// Largest number of enumerated paths (or grid sequences) accepted.
pub const PATH_GUARD: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkovError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("image {image} of node {node} under outcome {outcome} is not within tolerance of a grid node")]
    OffGridImage {
        node: usize,
        outcome: usize,
        image: f64,
    },
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("initial distribution must be non-negative and sum to 1 (sum = {sum})")]
    InvalidDistribution { sum: f64 },
    #[error("at least one trial is required")]
    NoTrials,
    #[error("{what} needs {needed} items, above the guard of {limit}")]
    SizeGuardExceeded {
        what: &'static str,
        needed: u128,
        limit: u128,
    },
}

fn guard(what: &'static str, needed: u128) -> Result<(), MarkovError> {
    if needed > PATH_GUARD {
        return Err(MarkovError::SizeGuardExceeded {
            what,
            needed,
            limit: PATH_GUARD,
        });
    }
    Ok(())
}

fn pow_sat(base: usize, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
}
