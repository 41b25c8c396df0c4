use num_complex::Complex64;

use crate::paths::{ClassicalPath, PhaseAssignment};

use super::{guard, pow_sat, GameSpec, MarkovError, StateGrid};

/// Where the phase of each step (or whole label path) comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSource {
    Zero,
    /// First-order phase `κ·y_j`, the same in every round.
    Linear(f64),
    /// Segment phases `θ_n(j)` of an additive assignment.
    Segments(PhaseAssignment),
    /// One phase per label sequence, indexed by lexicographic rank. Only
    /// the exact path sum can use these.
    Paths(PhaseAssignment),
}

impl PhaseSource {
    fn check(&self, m: usize, n: usize) -> Result<(), MarkovError> {
        match self {
            Self::Zero | Self::Linear(_) => Ok(()),
            Self::Segments(a) | Self::Paths(a) => {
                if a.m() != m {
                    return Err(MarkovError::DimensionMismatch {
                        what: "phase assignment outcomes",
                        expected: m,
                        found: a.m(),
                    });
                }
                if a.n() != n {
                    return Err(MarkovError::DimensionMismatch {
                        what: "phase assignment rounds",
                        expected: n,
                        found: a.n(),
                    });
                }
                if matches!(self, Self::Segments(a) if a.segments().is_none()) {
                    return Err(MarkovError::InvalidMap(
                        "segment phases requested from a path-only assignment".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Phase of outcome `j` in `round`, when phases are per step.
    fn step(&self, spec: &GameSpec, round: usize, j: usize) -> Option<f64> {
        match self {
            Self::Zero => Some(0.0),
            Self::Linear(kappa) => Some(kappa * spec.bare.label(j)),
            Self::Segments(a) => a.segment(round, j),
            Self::Paths(_) => None,
        }
    }
}

fn check_state(grid: &StateGrid, psi0: &[Complex64]) -> Result<(), MarkovError> {
    if psi0.len() != grid.len() {
        return Err(MarkovError::DimensionMismatch {
            what: "initial amplitude",
            expected: grid.len(),
            found: psi0.len(),
        });
    }
    Ok(())
}

fn target(spec: &GameSpec, grid: &StateGrid, k: usize, j: usize) -> Result<usize, MarkovError> {
    let image = spec.image(grid.node(k), j);
    grid.locate(image).ok_or(MarkovError::OffGridImage {
        node: k,
        outcome: j,
        image,
    })
}

/// `ψ_N(x) = Σ_paths Π_n √P_{j_n} e^{iφ} ψ_0`, one round at a time.
/// Lost readings carry no amplitude. Per-path phases fall back to
/// [`amplitude_path_sum`].
pub fn amplitude_propagate(
    spec: &GameSpec,
    grid: &StateGrid,
    psi0: &[Complex64],
    n: usize,
    phases: &PhaseSource,
) -> Result<Vec<Complex64>, MarkovError> {
    if matches!(phases, PhaseSource::Paths(_)) {
        return amplitude_path_sum(spec, grid, psi0, n, phases);
    }
    check_state(grid, psi0)?;
    phases.check(spec.bare.len(), n)?;
    let roots: Vec<f64> = spec.bare.probs().iter().map(|p| p.sqrt()).collect();
    let mut psi = psi0.to_vec();
    for round in 0..n {
        let factors: Vec<Complex64> = (0..roots.len())
            .map(|j| Complex64::from_polar(roots[j], phases.step(spec, round, j).expect("per-step")))
            .collect();
        let mut next = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (k, &amp) in psi.iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, f) in factors.iter().enumerate() {
                next[target(spec, grid, k, j)?] += f * amp;
            }
        }
        psi = next;
    }
    Ok(psi)
}

/// Same quantity by explicit enumeration of label sequences from every
/// start node with nonzero amplitude.
pub fn amplitude_path_sum(
    spec: &GameSpec,
    grid: &StateGrid,
    psi0: &[Complex64],
    n: usize,
    phases: &PhaseSource,
) -> Result<Vec<Complex64>, MarkovError> {
    check_state(grid, psi0)?;
    let m = spec.bare.len();
    phases.check(m, n)?;
    let starts: Vec<usize> = (0..grid.len())
        .filter(|&k| psi0[k] != Complex64::new(0.0, 0.0))
        .collect();
    guard(
        "amplitude path sum (start nodes × M^N)",
        pow_sat(m, n).saturating_mul(starts.len() as u128),
    )?;
    let count = m.pow(n as u32);
    let mut psi = vec![Complex64::new(0.0, 0.0); grid.len()];
    for &start in &starts {
        for rank in 0..count {
            let path = ClassicalPath::from_rank(rank, m, n);
            let mut node = start;
            let mut weight = 1.0;
            let mut phase = 0.0;
            for (round, &j) in path.indices().iter().enumerate() {
                node = target(spec, grid, node, j)?;
                weight *= spec.bare.prob(j);
                if let Some(theta) = phases.step(spec, round, j) {
                    phase += theta;
                }
            }
            if let PhaseSource::Paths(a) = phases {
                phase = a.phases()[rank];
            }
            psi[node] += Complex64::from_polar(weight.sqrt(), phase) * psi0[start];
        }
    }
    Ok(psi)
}
