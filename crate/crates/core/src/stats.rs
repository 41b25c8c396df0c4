//! Goodness-of-fit helpers for Monte Carlo checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Result of a Pearson chi-square test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed counts against expected probabilities.
///
/// Categories with zero expected probability must have zero counts and are
/// dropped; a nonzero count in such a category yields `p_value = 0`.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> ChiSquareTest {
    assert_eq!(counts.len(), probs.len(), "chi_square: length mismatch");
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    let mut statistic = 0.0;
    let mut cats = 0usize;
    let mut impossible = false;
    for (&c, &p) in counts.iter().zip(probs) {
        if p <= 0.0 {
            impossible |= c > 0;
            continue;
        }
        let e = n * p;
        statistic += (c as f64 - e).powi(2) / e;
        cats += 1;
    }
    let dof = cats.saturating_sub(1);
    let p_value = if impossible {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(statistic)
    };
    ChiSquareTest { statistic, dof, p_value }
}

/// Standard error of a binomial frequency estimated from `n` draws.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
