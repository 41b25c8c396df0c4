//! Order-stable parallel reductions.

use rayon::prelude::*;

/// Fixed work-unit size. Partial sums are formed per unit and combined in
/// index order, so the floating-point result is the same for any number of
/// worker threads.
pub const CHUNK: usize = 4096;

/// `Σ_{i<len} f(i)` with a reduction tree that does not depend on the pool size.
pub fn ordered_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_result_for_any_pool_size() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let n = 3 * CHUNK + 17;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| ordered_sum(n, f));
        let b = four.install(|| ordered_sum(n, f));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn empty_range_is_zero() {
        assert_eq!(ordered_sum(0, |_| 1.0), 0.0);
    }
}
