//! Path expansion of products of effective probabilities, and the
//! amplitude space that reproduces it.
//!
//! For `N` rounds of an `M`-outcome incomplete variable the product
//! `Π_n p(y_{j_n})` branches into `M^{2N}` terms; symmetry of the coupling
//! merges twin terms down to `((M²+M)/2)^N`. The classical paths, equipped
//! with square-root weights and phases, form the amplitude space whose
//! squared sum is compared against the full path sum.

mod census;
mod constraints;
mod expand;
mod identity;
mod solver;

pub use census::{census, CensusReport};
pub use constraints::{build_constraints, ConstraintSet, PairConstraint};
pub use expand::{expand_paths, xi_sum, ExpandedTerm};
pub use identity::{amplitude_sum, identity_check, identity_check_with_coupling, IdentityReport};
pub use solver::{association, solve_phases, PhaseAssignment, SolveReport, SolverOptions};

use thiserror::Error;

use crate::channel::{BareDistribution, ChannelError, CouplingMatrix};

/// Largest raw term count `M^{2N}` accepted by the exhaustive expansion.
pub const EXPANSION_GUARD: u128 = 10_000_000;
/// Largest number of classical paths `M^N` accepted by the constraint builder.
pub const CONSTRAINT_GUARD: u128 = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("unsupported sizes M = {m}, N = {n} (path sums need M >= 2, N >= 1)")]
    InvalidDimensions { m: usize, n: usize },
    #[error("{what} needs {needed} items, above the guard of {limit}")]
    SizeGuardExceeded {
        what: &'static str,
        needed: u128,
        limit: u128,
    },
    #[error("constraint between paths {i} and {j} has target {target}, outside [-1, 1]")]
    Infeasible { i: usize, j: usize, target: f64 },
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("path index {index} out of range for M = {m}")]
    IndexOutOfRange { index: usize, m: usize },
}

/// An ordered sequence of `N` outcome indices, one per round.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassicalPath {
    indices: Vec<usize>,
}

impl ClassicalPath {
    pub fn new(indices: Vec<usize>, m: usize) -> Result<Self, PathError> {
        if indices.is_empty() {
            return Err(PathError::InvalidDimensions { m, n: 0 });
        }
        if let Some(&index) = indices.iter().find(|&&j| j >= m) {
            return Err(PathError::IndexOutOfRange { index, m });
        }
        Ok(Self { indices })
    }

    /// The `rank`-th path in lexicographic order (round 0 most significant).
    pub fn from_rank(mut rank: usize, m: usize, n: usize) -> Self {
        let mut indices = vec![0; n];
        for slot in indices.iter_mut().rev() {
            *slot = rank % m;
            rank /= m;
        }
        Self { indices }
    }

    /// Inverse of [`ClassicalPath::from_rank`].
    pub fn rank(&self, m: usize) -> usize {
        self.indices.iter().fold(0, |acc, &j| acc * m + j)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Product of bare probabilities along the path.
    pub fn weight(&self, bare: &BareDistribution) -> f64 {
        self.indices.iter().map(|&j| bare.prob(j)).product()
    }
}

impl std::fmt::Display for ClassicalPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, j) in self.indices.iter().enumerate() {
            if k > 0 {
                f.write_str("-")?;
            }
            write!(f, "{j}")?;
        }
        Ok(())
    }
}

fn check_dims(m: usize, n: usize) -> Result<(), PathError> {
    if m < 2 || n == 0 {
        return Err(PathError::InvalidDimensions { m, n });
    }
    Ok(())
}

fn check_coupling(bare: &BareDistribution, d: &CouplingMatrix) -> Result<(), PathError> {
    if d.len() != bare.len() {
        return Err(PathError::DimensionMismatch {
            what: "coupling size",
            expected: bare.len(),
            found: d.len(),
        });
    }
    Ok(())
}

/// `base^exp`, saturating at `u128::MAX`.
fn pow_sat(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

fn guard(what: &'static str, needed: u128, limit: u128) -> Result<(), PathError> {
    if needed > limit {
        return Err(PathError::SizeGuardExceeded {
            what,
            needed,
            limit,
        });
    }
    Ok(())
}
