//! A 1D particle whose energy is read through an incomplete variable.
//!
//! One time step `ε` contributes the phase-space amplitude
//! `exp(i[p·Δx − ε(p²/2m + V(x) − E0)]/α)` with an optional square-root
//! apodization in `ε(H − E0)/α`. Integrating the momentum on the reciprocal
//! lattice of a periodic grid gives a dense one-step kernel; its powers are
//! compared against a Crank–Nicolson solution of
//! `iα ∂ψ/∂t = −(α²/2m) ∂²ψ/∂x² + Vψ`.

mod classical;
mod kernel;
mod momentum;
mod params;
mod reference;
mod roughness;
mod study;
mod wave;

pub use classical::{classical_path_check, discrete_action, phase_space_action, ClassicalPathReport};
pub use kernel::{build_kernel, propagate, Boundary, KernelMatrix, Propagation};
pub use momentum::{inverse_momentum_transform, momentum_transform, uncertainty_product, MomentumState};
pub use params::{Apodization, ParticleParams, Potential};
pub use reference::{reference_solver, FdOrder, ReferenceOptions};
pub use roughness::{roughness_scan, RoughnessPoint, RoughnessSource};
pub use study::{apodization_study, convergence_study, fitted_order, StudyPoint, StudyReport};
pub use wave::{WaveGrid, WaveState};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("ε·max|V − E0|/α = {phase} reaches π; reduce the time step")]
    PhaseWrapGuard { phase: f64 },
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("total time {time} is not a whole number of steps of {eps}")]
    NonIntegerSteps { time: f64, eps: f64 },
    #[error("{0}")]
    Unsupported(&'static str),
    #[error("invalid potential table: {0}")]
    InvalidTable(&'static str),
}

fn positive(name: &'static str, value: f64) -> Result<(), QuantumError> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(QuantumError::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        });
    }
    Ok(())
}

/// Number of steps of size `eps` in `time`, if whole.
pub fn step_count(time: f64, eps: f64) -> Result<usize, QuantumError> {
    positive("time step", eps)?;
    let steps = time / eps;
    if !(steps >= 0.0) || (steps - steps.round()).abs() > 1e-6 {
        return Err(QuantumError::NonIntegerSteps { time, eps });
    }
    Ok(steps.round() as usize)
}
