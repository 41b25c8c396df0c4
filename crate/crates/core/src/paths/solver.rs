//! Phase solving for the amplitude space.
//!
//! Phases are additive over rounds: path `a` carries
//! `φ_a = Σ_n θ_n(a_n)`, one segment phase per round and outcome. For a pair
//! of paths the association value is the product, over the rounds where
//! they differ, of `cos(θ_n(a_n) − θ_n(b_n))`; it must match the pair's
//! target `Π d`. Segment phases are found by Levenberg–Marquardt on the sum
//! of squared association residuals, with the gauge `θ_n(0) = 0` (so the
//! lexicographically first path has phase zero) and seeded multi-start.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::rng::substream;

use super::{ClassicalPath, ConstraintSet, PairConstraint, PathError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Convergence threshold on the largest absolute residual.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-12,
            restarts: 8,
            seed: 0,
        }
    }
}

/// One phase per classical path, optionally backed by segment phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAssignment {
    m: usize,
    n: usize,
    /// `N × M` row-major segment phases, when the assignment is additive.
    segments: Option<Vec<f64>>,
    /// Indexed by lexicographic path rank, each in `(−π, π]`.
    phases: Vec<f64>,
}

impl PhaseAssignment {
    /// Additive assignment from segment phases `θ_n(j)` (row-major `N × M`).
    pub fn from_segments(m: usize, n: usize, segments: Vec<f64>) -> Result<Self, PathError> {
        if segments.len() != m * n {
            return Err(PathError::DimensionMismatch {
                what: "segment phases",
                expected: m * n,
                found: segments.len(),
            });
        }
        let count = m.pow(n as u32);
        let phases = (0..count)
            .map(|r| {
                let path = ClassicalPath::from_rank(r, m, n);
                wrap(path.indices().iter().enumerate().map(|(k, &j)| segments[k * m + j]).sum())
            })
            .collect();
        Ok(Self {
            m,
            n,
            segments: Some(segments),
            phases,
        })
    }

    /// Arbitrary per-path phases, indexed by lexicographic rank.
    pub fn from_path_phases(m: usize, n: usize, phases: Vec<f64>) -> Result<Self, PathError> {
        let count = m.pow(n as u32);
        if phases.len() != count {
            return Err(PathError::DimensionMismatch {
                what: "path phases",
                expected: count,
                found: phases.len(),
            });
        }
        Ok(Self {
            m,
            n,
            segments: None,
            phases: phases.into_iter().map(wrap).collect(),
        })
    }

    pub fn zero(m: usize, n: usize) -> Self {
        Self::from_segments(m, n, vec![0.0; m * n]).expect("sizes agree")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn phase(&self, path: &ClassicalPath) -> f64 {
        self.phases[path.rank(self.m)]
    }

    /// `θ_round(j)`, if the assignment is additive.
    pub fn segment(&self, round: usize, j: usize) -> Option<f64> {
        self.segments.as_ref().map(|s| s[round * self.m + j])
    }

    pub fn segments(&self) -> Option<&[f64]> {
        self.segments.as_deref()
    }
}

/// Map an angle to `(−π, π]`.
fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Association value of a constraint's pair under `phases`: the product of
/// segment cosines over differing rounds, or `cos(φ_i − φ_j)` when only path
/// phases are known.
pub fn association(phases: &PhaseAssignment, set: &ConstraintSet, c: &PairConstraint) -> f64 {
    match phases.segments() {
        Some(seg) => {
            let (a, b) = (set.path(c.i).indices(), set.path(c.j).indices());
            c.diff_rounds()
                .map(|n| (seg[n * set.m + a[n]] - seg[n * set.m + b[n]]).cos())
                .product()
        }
        None => (phases.phases[c.i] - phases.phases[c.j]).cos(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// `association − target`, one per constraint in set order.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Sum of squared residuals.
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Index of the restart that produced the returned assignment.
    pub restart: usize,
}

struct Problem<'a> {
    set: &'a ConstraintSet,
    m: usize,
    n: usize,
    nvar: usize,
}

struct Attempt {
    x: Vec<f64>,
    cost: f64,
    max_residual: f64,
    iterations: usize,
}

impl<'a> Problem<'a> {
    fn new(set: &'a ConstraintSet) -> Self {
        Self {
            set,
            m: set.m,
            n: set.n,
            nvar: set.n * (set.m - 1),
        }
    }

    fn var(&self, round: usize, j: usize) -> Option<usize> {
        (j > 0).then(|| round * (self.m - 1) + j - 1)
    }

    fn theta(&self, x: &[f64], round: usize, j: usize) -> f64 {
        self.var(round, j).map_or(0.0, |v| x[v])
    }

    fn residual(&self, x: &[f64], c: &PairConstraint) -> f64 {
        let (a, b) = (self.set.path(c.i).indices(), self.set.path(c.j).indices());
        let prod: f64 = c
            .diff_rounds()
            .map(|n| (self.theta(x, n, a[n]) - self.theta(x, n, b[n])).cos())
            .product();
        prod - c.target
    }

    fn cost(&self, x: &[f64]) -> (f64, f64) {
        self.set.pairs.iter().fold((0.0, 0.0), |(s, mx), c| {
            let r = self.residual(x, c);
            (s + r * r, f64::max(mx, r.abs()))
        })
    }

    /// `JᵀJ`, `Jᵀr`, cost and largest residual at `x`.
    fn normal_equations(&self, x: &[f64]) -> (DMatrix<f64>, DVector<f64>, f64, f64) {
        let mut jtj = DMatrix::zeros(self.nvar, self.nvar);
        let mut jtr = DVector::zeros(self.nvar);
        let (mut cost, mut max_r) = (0.0, 0.0f64);
        let mut cosines = Vec::with_capacity(self.n);
        let mut sines = Vec::with_capacity(self.n);
        let mut rounds = Vec::with_capacity(self.n);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * self.n);
        for c in &self.set.pairs {
            let (a, b) = (self.set.path(c.i).indices(), self.set.path(c.j).indices());
            cosines.clear();
            sines.clear();
            rounds.clear();
            for n in c.diff_rounds() {
                let delta = self.theta(x, n, a[n]) - self.theta(x, n, b[n]);
                cosines.push(delta.cos());
                sines.push(delta.sin());
                rounds.push(n);
            }
            let prod: f64 = cosines.iter().product();
            let r = prod - c.target;
            cost += r * r;
            max_r = max_r.max(r.abs());

            // derivative of the product with respect to each difference,
            // using prefix/suffix products so no cosine is divided out
            row.clear();
            let k = cosines.len();
            let mut prefix = 1.0;
            for idx in 0..k {
                let suffix: f64 = cosines[idx + 1..].iter().product();
                let g = -sines[idx] * prefix * suffix;
                prefix *= cosines[idx];
                let n = rounds[idx];
                if let Some(v) = self.var(n, a[n]) {
                    row.push((v, g));
                }
                if let Some(v) = self.var(n, b[n]) {
                    row.push((v, -g));
                }
            }
            for &(u, ju) in &row {
                jtr[u] += ju * r;
                for &(v, jv) in &row {
                    jtj[(u, v)] += ju * jv;
                }
            }
        }
        (jtj, jtr, cost, max_r)
    }

    fn levenberg_marquardt(&self, mut x: Vec<f64>, opts: &SolverOptions) -> Attempt {
        let (mut jtj, mut jtr, mut cost, mut max_r) = self.normal_equations(&x);
        let mut lambda = 1e-3;
        let mut iterations = 0;
        while iterations < opts.max_iter && max_r > opts.tol {
            iterations += 1;
            let mut a = jtj.clone();
            for i in 0..self.nvar {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&jtr));
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, s)| xi + s).collect();
            let (trial_cost, _) = self.cost(&trial);
            if trial_cost < cost {
                x = trial;
                (jtj, jtr, cost, max_r) = self.normal_equations(&x);
                lambda = (lambda / 3.0).max(1e-15);
                if step.norm() <= 1e-15 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt()) {
                    break;
                }
            } else {
                lambda *= 4.0;
                if lambda > 1e15 {
                    break;
                }
            }
        }
        Attempt {
            x,
            cost,
            max_residual: max_r,
            iterations,
        }
    }

    /// Start from `θ_n(j) = ±arccos(d[0][j])`, read off the single-round
    /// pairs against the all-zero path.
    fn arccos_start(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.nvar];
        for n in 0..self.n {
            let stride = self.m.pow((self.n - 1 - n) as u32);
            for j in 1..self.m {
                // pairs with i = 0 are stored first, j = 1, 2, ...
                let target = self.set.pairs[j * stride - 1].target.clamp(-1.0, 1.0);
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                x[self.var(n, j).expect("j > 0")] = sign * target.acos();
            }
        }
        x
    }

    fn random_start(&self, seed: u64, restart: usize) -> Vec<f64> {
        let mut rng = substream(seed, restart as u64);
        (0..self.nvar).map(|_| rng.random_range(-PI..PI)).collect()
    }
}

/// Fit segment phases to every pair constraint.
///
/// Fails with [`PathError::Infeasible`] before solving when some target lies
/// outside `[-1, 1]`. Non-convergence is not an error: the report carries
/// the residuals and `converged = false`.
pub fn solve_phases(
    set: &ConstraintSet,
    opts: &SolverOptions,
) -> Result<(PhaseAssignment, SolveReport), PathError> {
    if let Some(c) = set.first_infeasible() {
        return Err(PathError::Infeasible {
            i: c.i,
            j: c.j,
            target: c.target,
        });
    }
    let problem = Problem::new(set);
    let restarts = opts.restarts.max(1);
    let attempts: Vec<Attempt> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                problem.arccos_start()
            } else {
                problem.random_start(opts.seed, r)
            };
            problem.levenberg_marquardt(start, opts)
        })
        .collect();

    let winner = attempts
        .iter()
        .position(|a| a.max_residual <= opts.tol)
        .unwrap_or_else(|| {
            let mut best = 0;
            for (k, a) in attempts.iter().enumerate() {
                if a.cost < attempts[best].cost {
                    best = k;
                }
            }
            best
        });
    let best = &attempts[winner];

    let mut segments = vec![0.0; set.m * set.n];
    for n in 0..set.n {
        for j in 1..set.m {
            segments[n * set.m + j] = wrap(problem.theta(&best.x, n, j));
        }
    }
    let phases = PhaseAssignment::from_segments(set.m, set.n, segments)?;
    let residuals: Vec<f64> = set
        .pairs
        .iter()
        .map(|c| association(&phases, set, c) - c.target)
        .collect();
    let max_residual = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let report = SolveReport {
        cost: residuals.iter().map(|r| r * r).sum(),
        converged: max_residual <= opts.tol,
        max_residual,
        residuals,
        iterations: best.iterations,
        restart: winner,
    };
    Ok((phases, report))
}
