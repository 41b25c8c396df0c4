use crate::channel::{BareDistribution, CouplingMatrix};

use super::{check_coupling, check_dims, guard, pow_sat, ClassicalPath, PathError, CONSTRAINT_GUARD};

/// Association between two distinct classical paths: over the rounds where
/// they differ, the product of phase cosines must equal the product of
/// couplings `Π d[i_n][j_n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConstraint {
    /// Lexicographic rank of the first path; always below `j`.
    pub i: usize,
    pub j: usize,
    /// Bit `n` set when the paths differ in round `n`.
    pub diff_mask: u32,
    pub target: f64,
}

impl PairConstraint {
    pub fn diff_rounds(&self) -> impl Iterator<Item = usize> + '_ {
        (0..32).filter(move |n| self.diff_mask & (1 << n) != 0)
    }

    pub fn is_feasible(&self) -> bool {
        self.target.abs() <= 1.0
    }
}

/// Every unordered pair of distinct classical paths for `M` outcomes and
/// `N` rounds, ordered by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub m: usize,
    pub n: usize,
    pub paths: Vec<ClassicalPath>,
    pub pairs: Vec<PairConstraint>,
}

impl ConstraintSet {
    pub fn path(&self, rank: usize) -> &ClassicalPath {
        &self.paths[rank]
    }

    /// First pair whose target lies outside `[-1, 1]`.
    pub fn first_infeasible(&self) -> Option<&PairConstraint> {
        self.pairs.iter().find(|c| !c.is_feasible())
    }

    pub fn is_feasible(&self) -> bool {
        self.first_infeasible().is_none()
    }
}

pub fn build_constraints(
    bare: &BareDistribution,
    d: &CouplingMatrix,
    n: usize,
) -> Result<ConstraintSet, PathError> {
    check_coupling(bare, d)?;
    let m = bare.len();
    check_dims(m, n)?;
    guard("phase constraints (M^N classical paths)", pow_sat(m, n), CONSTRAINT_GUARD)?;
    let count = m.pow(n as u32);
    let paths: Vec<ClassicalPath> = (0..count).map(|r| ClassicalPath::from_rank(r, m, n)).collect();
    let mut pairs = Vec::with_capacity(count * (count - 1) / 2);
    for i in 0..count {
        for j in i + 1..count {
            let (a, b) = (paths[i].indices(), paths[j].indices());
            let mut diff_mask = 0u32;
            let mut target = 1.0;
            for round in 0..n {
                if a[round] != b[round] {
                    diff_mask |= 1 << round;
                    target *= d.get(a[round], b[round]);
                }
            }
            pairs.push(PairConstraint {
                i,
                j,
                diff_mask,
                target,
            });
        }
    }
    Ok(ConstraintSet { m, n, paths, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_outcomes(c: f64) -> (BareDistribution, CouplingMatrix) {
        (
            BareDistribution::indexed(vec![0.5, 0.5]).unwrap(),
            CouplingMatrix::from_rows(vec![vec![0.0, c], vec![c, 0.0]]).unwrap(),
        )
    }

    #[test]
    fn single_round_single_pair() {
        let (p, d) = two_outcomes(-0.2);
        let set = build_constraints(&p, &d, 1).unwrap();
        assert_eq!(set.pairs.len(), 1);
        assert_eq!(set.pairs[0].target, -0.2);
        assert_eq!(set.pairs[0].diff_rounds().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn two_rounds_six_pairs() {
        let (p, d) = two_outcomes(-0.3);
        let set = build_constraints(&p, &d, 2).unwrap();
        assert_eq!(set.pairs.len(), 6);
        // 0-0 vs 1-1 differ in both rounds
        let both = set.pairs.iter().find(|c| c.i == 0 && c.j == 3).unwrap();
        assert_eq!(both.diff_mask, 0b11);
        assert!((both.target - 0.09).abs() < 1e-16);
        let singles = set.pairs.iter().filter(|c| c.diff_mask.count_ones() == 1).count();
        assert_eq!(singles, 4);
        assert!(set.is_feasible());
    }

    #[test]
    fn bounded_couplings_give_bounded_targets() {
        let p = BareDistribution::indexed(vec![0.2, 0.3, 0.5]).unwrap();
        let d = CouplingMatrix::from_rows(vec![
            vec![0.0, -0.9, -1.0],
            vec![-0.9, 0.0, -0.4],
            vec![-1.0, -0.4, 0.0],
        ])
        .unwrap();
        let set = build_constraints(&p, &d, 3).unwrap();
        assert!(set.pairs.iter().all(|c| (-1.0..=1.0).contains(&c.target)));
    }

    #[test]
    fn oversized_coupling_is_flagged() {
        let (p, d) = two_outcomes(-1.2);
        let set = build_constraints(&p, &d, 2).unwrap();
        assert!(!set.is_feasible());
        assert!(!set.first_infeasible().unwrap().is_feasible());
    }

    #[test]
    fn size_guard() {
        let (p, d) = two_outcomes(0.0);
        assert_eq!(build_constraints(&p, &d, 6).unwrap().pairs.len(), 64 * 63 / 2);
        assert!(matches!(
            build_constraints(&p, &d, 13),
            Err(PathError::SizeGuardExceeded { .. })
        ));
    }
}
