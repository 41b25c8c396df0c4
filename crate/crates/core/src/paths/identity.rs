//! The path-sum identity `Σ_Ξ = |Σ_H|²`, checked end to end.

use num_complex::Complex64;

use crate::channel::{symmetric_coupling, BareDistribution, CouplingMatrix};
use crate::parallel::ordered_sum;

use super::expand::xi_abs_sum;
use super::{
    association, build_constraints, check_dims, solve_phases, xi_sum, ClassicalPath, PathError,
    PhaseAssignment, SolverOptions,
};

/// `Σ_H = Σ_paths √(Π_n P_{j_n}) · e^{iφ_path}` by enumeration.
pub fn amplitude_sum(bare: &BareDistribution, phases: &PhaseAssignment) -> Result<Complex64, PathError> {
    let m = bare.len();
    let n = phases.n();
    check_dims(m, n)?;
    if phases.m() != m {
        return Err(PathError::DimensionMismatch {
            what: "phase assignment outcomes",
            expected: m,
            found: phases.m(),
        });
    }
    let count = phases.phases().len();
    let term = |r: usize| {
        let path = ClassicalPath::from_rank(r, m, n);
        Complex64::from_polar(path.weight(bare).sqrt(), phases.phases()[r])
    };
    let re = ordered_sum(count, |r| term(r).re);
    let im = ordered_sum(count, |r| term(r).im);
    Ok(Complex64::new(re, im))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub m: usize,
    pub n: usize,
    /// `Σ_Ξ` from the exhaustive expansion.
    pub xi: f64,
    /// `|Σ_H|²`; absent when the phase system is infeasible.
    pub amp_sq: Option<f64>,
    /// `|Σ_Ξ − |Σ_H|²|`.
    pub gap: Option<f64>,
    /// Largest absolute association residual of the solved phases.
    pub max_residual: Option<f64>,
    /// `Σ_{a<b} 2 √(R_a R_b) |residual_ab|`, the gap the residuals can explain.
    pub analytic_bound: Option<f64>,
    /// Floating-point slack for the two sums.
    pub rounding_allowance: f64,
    pub feasible: bool,
    pub converged: bool,
    pub coupling_max_abs: f64,
    pub phases: Option<PhaseAssignment>,
}

impl IdentityReport {
    /// Analytic bound plus rounding allowance.
    pub fn bound(&self) -> Option<f64> {
        self.analytic_bound.map(|b| b + self.rounding_allowance)
    }

    pub fn gap_within_bound(&self) -> bool {
        matches!((self.gap, self.bound()), (Some(g), Some(b)) if g <= b)
    }
}

/// Coupling from `(P, γ)`, then [`identity_check_with_coupling`].
pub fn identity_check(
    bare: &BareDistribution,
    loss_rates: &[f64],
    n: usize,
    opts: &SolverOptions,
) -> Result<IdentityReport, PathError> {
    let d = symmetric_coupling(bare, loss_rates)?;
    identity_check_with_coupling(bare, &d, n, opts)
}

/// Expand `Σ_Ξ`, build and solve the phase system, and compare with
/// `|Σ_H|²`. An infeasible system is reported, not raised.
pub fn identity_check_with_coupling(
    bare: &BareDistribution,
    d: &CouplingMatrix,
    n: usize,
    opts: &SolverOptions,
) -> Result<IdentityReport, PathError> {
    let m = bare.len();
    let xi = xi_sum(bare, d, n)?;
    let set = build_constraints(bare, d, n)?;
    let roots: Vec<f64> = set.paths.iter().map(|p| p.weight(bare).sqrt()).collect();
    let count = roots.len() as f64;
    let root_sum: f64 = roots.iter().sum();
    let rounding_allowance =
        16.0 * f64::EPSILON * (count * xi_abs_sum(bare, d, n) + count * root_sum * root_sum);

    let mut report = IdentityReport {
        m,
        n,
        xi,
        amp_sq: None,
        gap: None,
        max_residual: None,
        analytic_bound: None,
        rounding_allowance,
        feasible: set.is_feasible(),
        converged: false,
        coupling_max_abs: d.max_abs(),
        phases: None,
    };
    if !report.feasible {
        return Ok(report);
    }

    let (phases, solved) = solve_phases(&set, opts)?;
    let amp = amplitude_sum(bare, &phases)?;
    let amp_sq = amp.norm_sqr();
    let analytic_bound = ordered_sum(set.pairs.len(), |k| {
        let c = &set.pairs[k];
        let rho = association(&phases, &set, c) - c.target;
        2.0 * roots[c.i] * roots[c.j] * rho.abs()
    });
    report.amp_sq = Some(amp_sq);
    report.gap = Some((xi - amp_sq).abs());
    report.max_residual = Some(solved.max_residual);
    report.analytic_bound = Some(analytic_bound);
    report.converged = solved.converged;
    report.phases = Some(phases);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn bare(p: &[f64]) -> BareDistribution {
        BareDistribution::indexed(p.to_vec()).unwrap()
    }

    #[test]
    fn amplitude_sum_examples() {
        let p = bare(&[0.5, 0.5]);
        let zero = PhaseAssignment::zero(2, 1);
        assert!((amplitude_sum(&p, &zero).unwrap().norm_sqr() - 2.0).abs() < 1e-14);
        let phases = PhaseAssignment::from_path_phases(2, 1, vec![0.0, (-0.2f64).acos()]).unwrap();
        assert!((amplitude_sum(&p, &phases).unwrap().norm_sqr() - 0.8).abs() < 1e-14);
        let wrong = PhaseAssignment::zero(3, 1);
        assert!(amplitude_sum(&p, &wrong).is_err());
    }

    #[test]
    fn scalar_case_closes() {
        let r = identity_check(&bare(&[0.5, 0.5]), &[0.2, 0.2], 1, &SolverOptions::default()).unwrap();
        assert!(r.feasible && r.converged);
        assert!((r.xi - 0.8).abs() < 1e-14);
        assert!(r.gap.unwrap() <= 1e-10);
        assert!((r.amp_sq.unwrap() - 0.8).abs() < 1e-10);
        assert!(r.gap_within_bound());
    }

    #[test]
    fn classical_limit() {
        // γ = 0 gives d = 0; for two outcomes the solved phases sit a
        // quarter turn apart in every round and the sums agree to rounding
        for n in 1..=4 {
            let r = identity_check(&bare(&[0.3, 0.7]), &[0.0, 0.0], n, &SolverOptions::default()).unwrap();
            assert!(r.coupling_max_abs == 0.0);
            assert!((r.xi - 1.0).abs() < 1e-14);
            assert!(r.max_residual.unwrap() <= 1e-12);
            assert!(r.gap.unwrap() <= r.rounding_allowance, "n={n}: {r:?}");
            assert!(r.gap.unwrap() <= 1e-10);
            let seg = r.phases.as_ref().unwrap().segment(0, 1).unwrap();
            assert!((seg.abs() - FRAC_PI_2).abs() < 1e-10);
        }
    }

    #[test]
    fn small_coupling_two_rounds() {
        let r = identity_check(&bare(&[0.5, 0.5]), &[0.02, 0.02], 2, &SolverOptions::default()).unwrap();
        assert!(r.max_residual.unwrap() <= 1e-6);
        assert!(r.gap.unwrap() <= 1e-6);
        assert!(r.gap_within_bound());
    }

    #[test]
    fn infeasible_coupling_is_reported() {
        let d = CouplingMatrix::from_rows(vec![vec![0.0, -1.2], vec![-1.2, 0.0]]).unwrap();
        let r = identity_check_with_coupling(&bare(&[0.5, 0.5]), &d, 1, &SolverOptions::default()).unwrap();
        assert!(!r.feasible);
        assert!(r.gap.is_none() && r.amp_sq.is_none());
        assert!(!r.gap_within_bound());
    }

    #[test]
    fn gap_stays_within_bound_when_overdetermined() {
        let p = bare(&[0.5, 0.3, 0.2]);
        for n in 1..=2 {
            let r = identity_check(&p, &[0.1, 0.2, 0.05], n, &SolverOptions::default()).unwrap();
            assert!(r.feasible);
            assert!(r.gap_within_bound(), "{r:?}");
        }
    }
}
