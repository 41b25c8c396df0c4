use num_bigint::BigUint;
use num_integer::binomial;

use super::PathError;

/// Exact term counts of the path expansion.
///
/// `per_l_raw[l]` counts terms with `l` non-classical factors among the
/// `M^{2N}` raw terms; `per_l_reduced[l]` counts them after twin terms are
/// merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusReport {
    pub m: usize,
    pub n: usize,
    pub raw_total: BigUint,
    pub per_l_raw: Vec<BigUint>,
    pub per_l_reduced: Vec<BigUint>,
    pub reduced_total: BigUint,
    pub independent_nonclassical: BigUint,
}

impl CensusReport {
    /// Check the per-`l` counts against the closed-form totals.
    pub fn is_consistent(&self) -> bool {
        let m = BigUint::from(self.m);
        let classical = m.pow(self.n as u32);
        let raw_sum: BigUint = self.per_l_raw.iter().sum();
        let reduced_sum: BigUint = self.per_l_reduced.iter().sum();
        let nonclassical: BigUint = self.per_l_reduced.iter().skip(1).sum();
        raw_sum == self.raw_total
            && reduced_sum == self.reduced_total
            && nonclassical == self.independent_nonclassical
            && self.per_l_reduced[0] == classical
            && &self.reduced_total - &classical == self.independent_nonclassical
    }
}

/// Count the terms of the expansion of `Π_n (P_{j_n} + Σ_l C̃_{j_n,l})`
/// summed over all `M^N` classical paths. A single outcome is allowed: it
/// has no cross terms.
pub fn census(m: usize, n: usize) -> Result<CensusReport, PathError> {
    if m == 0 || n == 0 {
        return Err(PathError::InvalidDimensions { m, n });
    }
    let big_m = BigUint::from(m);
    let cross = BigUint::from(m * m - m);
    let cross_reduced = BigUint::from((m * m - m) / 2);
    let big_n = BigUint::from(n);

    let mut per_l_raw = Vec::with_capacity(n + 1);
    let mut per_l_reduced = Vec::with_capacity(n + 1);
    for l in 0..=n {
        let choose = binomial(big_n.clone(), BigUint::from(l));
        let classical = big_m.pow((n - l) as u32);
        per_l_raw.push(&choose * &classical * cross.pow(l as u32));
        per_l_reduced.push(&choose * &classical * cross_reduced.pow(l as u32));
    }

    let raw_total = big_m.pow(2 * n as u32);
    let reduced_total = BigUint::from((m * m + m) / 2).pow(n as u32);
    let independent_nonclassical = &reduced_total - big_m.pow(n as u32);
    Ok(CensusReport {
        m,
        n,
        raw_total,
        per_l_raw,
        per_l_reduced,
        reduced_total,
        independent_nonclassical,
    })
}
