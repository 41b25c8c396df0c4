use crate::channel::{BareDistribution, CouplingMatrix};
use crate::parallel::ordered_sum;

use super::{check_coupling, check_dims, guard, pow_sat, ClassicalPath, PathError, EXPANSION_GUARD};

/// One merged term of the path expansion.
///
/// Every round contributes either the classical factor `P_{j_n}` or, at a
/// crossing `(n, l)` with `l > j_n`, the merged pair of twin factors
/// `2 √(P_{j_n} P_l) d[j_n][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedTerm {
    pub base: ClassicalPath,
    /// `(round, partner)` pairs, partner strictly greater than the base index.
    pub crossings: Vec<(usize, usize)>,
    /// Number of raw terms merged into this one, `2^{crossings}`.
    pub multiplicity: u64,
    /// Product of the square-root factors with every `d` stripped.
    pub radix: f64,
    pub value: f64,
}

/// Canonical per-round factor choices `(j, l)` with `j <= l`, in
/// lexicographic order. `j == l` is the classical factor.
fn round_choices(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|j| (j..m).map(move |l| (j, l))).collect()
}

fn expansion_size(m: usize, n: usize) -> Result<usize, PathError> {
    check_dims(m, n)?;
    guard("path expansion (M^2N raw terms)", pow_sat(m, 2 * n), EXPANSION_GUARD)?;
    Ok(round_choices(m).len().pow(n as u32))
}

/// Per-choice factor values, with the twin factor 2 folded in.
fn factor_table(bare: &BareDistribution, d: &CouplingMatrix, choices: &[(usize, usize)]) -> Vec<f64> {
    choices
        .iter()
        .map(|&(j, l)| {
            if j == l {
                bare.prob(j)
            } else {
                2.0 * (bare.prob(j) * bare.prob(l)).sqrt() * d.get(j, l)
            }
        })
        .collect()
}

/// All `((M²+M)/2)^N` merged terms, rounds ordered most significant first.
pub fn expand_paths(
    bare: &BareDistribution,
    d: &CouplingMatrix,
    n: usize,
) -> Result<Vec<ExpandedTerm>, PathError> {
    check_coupling(bare, d)?;
    let m = bare.len();
    let count = expansion_size(m, n)?;
    let choices = round_choices(m);
    let k = choices.len();
    let mut terms = Vec::with_capacity(count);
    let mut digits = vec![0usize; n];
    for _ in 0..count {
        let mut base = Vec::with_capacity(n);
        let mut crossings = Vec::new();
        let (mut radix, mut dprod) = (1.0, 1.0);
        for (round, &c) in digits.iter().enumerate() {
            let (j, l) = choices[c];
            base.push(j);
            if j == l {
                radix *= bare.prob(j);
            } else {
                crossings.push((round, l));
                radix *= (bare.prob(j) * bare.prob(l)).sqrt();
                dprod *= d.get(j, l);
            }
        }
        let multiplicity = 1u64 << crossings.len();
        terms.push(ExpandedTerm {
            base: ClassicalPath { indices: base },
            crossings,
            multiplicity,
            radix,
            value: multiplicity as f64 * radix * dprod,
        });
        // odometer, last round fastest
        for slot in digits.iter_mut().rev() {
            *slot += 1;
            if *slot < k {
                break;
            }
            *slot = 0;
        }
    }
    Ok(terms)
}

/// Sum over every path term, `Σ_Ξ`, by exhaustive enumeration.
pub fn xi_sum(bare: &BareDistribution, d: &CouplingMatrix, n: usize) -> Result<f64, PathError> {
    check_coupling(bare, d)?;
    let m = bare.len();
    let count = expansion_size(m, n)?;
    let choices = round_choices(m);
    let factors = factor_table(bare, d, &choices);
    let k = factors.len();
    Ok(ordered_sum(count, |mut t| {
        let mut v = 1.0;
        for _ in 0..n {
            v *= factors[t % k];
            t /= k;
        }
        v
    }))
}

/// Sum of absolute term values, used to bound rounding in `Σ_Ξ`.
pub(super) fn xi_abs_sum(bare: &BareDistribution, d: &CouplingMatrix, n: usize) -> f64 {
    let choices = round_choices(bare.len());
    let factors = factor_table(bare, d, &choices);
    factors.iter().map(|f| f.abs()).sum::<f64>().powi(n as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::symmetric_coupling;
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;

    fn bare(p: &[f64]) -> BareDistribution {
        BareDistribution::indexed(p.to_vec()).unwrap()
    }

    #[test]
    fn classical_limit_has_only_path_weights() {
        let p = bare(&[0.2, 0.3, 0.5]);
        let d = CouplingMatrix::zeros(3);
        let terms = expand_paths(&p, &d, 2).unwrap();
        assert_eq!(terms.len(), 36);
        let nonzero: Vec<_> = terms.iter().filter(|t| t.value != 0.0).collect();
        assert_eq!(nonzero.len(), 9);
        for t in nonzero {
            assert!(t.crossings.is_empty());
            assert!((t.value - t.base.weight(&p)).abs() < 1e-16);
        }
        assert!((xi_sum(&p, &d, 2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_round_hand_expansion() {
        let p = bare(&[0.5, 0.5]);
        let d = CouplingMatrix::from_rows(vec![vec![0.0, -0.2], vec![-0.2, 0.0]]).unwrap();
        let terms = expand_paths(&p, &d, 1).unwrap();
        let values: Vec<f64> = terms.iter().map(|t| t.value).collect();
        assert_eq!(terms.len(), 3);
        assert!((values[0] - 0.5).abs() < 1e-16);
        assert!((values[1] + 0.2).abs() < 1e-16);
        assert!((values[2] - 0.5).abs() < 1e-16);
        assert_eq!(terms[1].crossings, vec![(0, 1)]);
        assert_eq!(terms[1].multiplicity, 2);
        assert!((values.iter().sum::<f64>() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn term_count_matches_census() {
        for (m, n) in [(2, 3), (3, 2), (4, 2)] {
            let p = BareDistribution::indexed(vec![1.0 / m as f64; m]).unwrap();
            let terms = expand_paths(&p, &CouplingMatrix::zeros(m), n).unwrap();
            let c = super::super::census(m, n).unwrap();
            assert_eq!(num_bigint::BigUint::from(terms.len()), c.reduced_total);
            let crossings = terms.iter().filter(|t| !t.crossings.is_empty()).count();
            assert_eq!(num_bigint::BigUint::from(crossings), c.independent_nonclassical);
        }
    }

    #[test]
    fn three_outcome_sum() {
        let p = bare(&[0.5, 0.3, 0.2]);
        let d = symmetric_coupling(&p, &[0.1; 3]).unwrap();
        assert!((xi_sum(&p, &d, 2).unwrap() - 0.81).abs() < 1e-12);
        let p2 = bare(&[0.5, 0.5]);
        let d2 = symmetric_coupling(&p2, &[0.2, 0.2]).unwrap();
        assert!((xi_sum(&p2, &d2, 3).unwrap() - 0.512).abs() < 1e-12);
    }

    #[test]
    fn guard_rejects_large_expansions() {
        let p = bare(&[0.5, 0.5]);
        let err = xi_sum(&p, &CouplingMatrix::zeros(2), 12).unwrap_err();
        assert!(matches!(err, PathError::SizeGuardExceeded { .. }));
        assert!(xi_sum(&p, &CouplingMatrix::zeros(2), 11).is_ok());
    }

    #[test]
    fn materialized_and_streamed_sums_agree() {
        let mut rng = substream(4, 0);
        for _ in 0..20 {
            let m = rng.random_range(2..=3);
            let n = rng.random_range(1..=4);
            let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
            let s: f64 = w.iter().sum();
            let mut probs: Vec<f64> = w.iter().map(|x| x / s).collect();
            probs[m - 1] = 1.0 - probs[..m - 1].iter().sum::<f64>();
            let p = bare(&probs);
            let gamma: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..0.3)).collect();
            let d = symmetric_coupling(&p, &gamma).unwrap();
            let listed: f64 = expand_paths(&p, &d, n).unwrap().iter().map(|t| t.value).sum();
            let streamed = xi_sum(&p, &d, n).unwrap();
            assert!((listed - streamed).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn sum_equals_power_of_effective_total(
            w in prop::collection::vec(0.05f64..1.0, 2..=3),
            g in prop::collection::vec(0.0f64..=0.5, 3),
            n in 1usize..=4,
        ) {
            let m = w.len();
            let s: f64 = w.iter().sum();
            let mut probs: Vec<f64> = w.iter().map(|x| x / s).collect();
            probs[m - 1] = 1.0 - probs[..m - 1].iter().sum::<f64>();
            let p = bare(&probs);
            let d = symmetric_coupling(&p, &g[..m]).unwrap();
            // oracle: direct product of the per-round effective totals
            let total: f64 = d.effective_probs(&p).iter().sum();
            let got = xi_sum(&p, &d, n).unwrap();
            prop_assert!((got - total.powi(n as i32)).abs() <= 1e-10);
        }
    }
}
