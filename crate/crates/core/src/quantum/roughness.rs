use rand::Rng;
use rayon::prelude::*;

use crate::rng::substream;

use super::{positive, Apodization, ParticleParams, Potential, QuantumError};

/// Where the sampled increments come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoughnessSource {
    /// Grid paths drawn step by step with weights `|K(x', x)|²` of the
    /// imaginary-time free kernel, a Gaussian of variance `εα/m`.
    Kernel,
    /// The classical trajectory from `(x0, v0)` sampled every `ε` over a
    /// horizon of `samples` steps of the largest ε.
    Classical { x0: f64, v0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughnessPoint {
    pub eps: f64,
    /// `⟨(x_{n+1} − x_n)²⟩`.
    pub mean_sq: f64,
    /// Standard error of `mean_sq`.
    pub std_err: f64,
    /// `mean_sq / ε`.
    pub statistic: f64,
    pub samples: usize,
}

const STEPS_PER_PATH: usize = 16;
const PATHS_PER_BLOCK: usize = 256;

fn cdf(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut c: Vec<f64> = weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    for v in &mut c {
        *v /= acc;
    }
    c
}

fn draw<R: Rng>(rng: &mut R, cdf: &[f64]) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Mean-squared increments of sampled paths, one point per time step.
///
/// Kernel paths live on the lattice `k·dx` (default: a twentieth of the
/// smallest kernel width) and start at `offset·dx`, `0 ≤ offset < 1`; the
/// first step therefore leaves an off-lattice point. Paths are generated
/// in blocks with one generator substream per block and time step.
pub fn roughness_scan(
    params: &ParticleParams,
    eps_list: &[f64],
    samples: usize,
    dx: Option<f64>,
    offset: f64,
    seed: u64,
    source: RoughnessSource,
) -> Result<Vec<RoughnessPoint>, QuantumError> {
    params.validate()?;
    for &e in eps_list {
        positive("eps", e)?;
    }
    if samples == 0 {
        return Err(QuantumError::InvalidParameter {
            name: "samples",
            value: 0.0,
            reason: "need at least one sample",
        });
    }
    if !(0.0..1.0).contains(&offset) {
        return Err(QuantumError::InvalidParameter {
            name: "offset",
            value: offset,
            reason: "must lie in [0, 1)",
        });
    }
    let width = |eps: f64| (eps * params.alpha / params.mass).sqrt();
    match source {
        RoughnessSource::Kernel => {
            if params.potential != Potential::Free || params.apodization != Apodization::None {
                return Err(QuantumError::Unsupported(
                    "kernel path sampling needs a free particle without apodization",
                ));
            }
            let smallest = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
            let dx = match dx {
                Some(d) => {
                    positive("dx", d)?;
                    d
                }
                None => width(smallest) / 20.0,
            };
            eps_list
                .iter()
                .enumerate()
                .map(|(i, &eps)| Ok(kernel_point(width(eps), eps, dx, offset, samples, seed, i)))
                .collect()
        }
        RoughnessSource::Classical { x0, v0 } => {
            // a common time horizon: `samples` steps of the largest ε
            let horizon = samples as f64 * eps_list.iter().copied().fold(0.0, f64::max);
            eps_list
                .iter()
                .map(|&eps| {
                    let count = ((horizon / eps).round() as usize).max(1);
                    classical_point(params, eps, x0, v0, count)
                })
                .collect()
        }
    }
}

fn kernel_point(sigma: f64, eps: f64, dx: f64, offset: f64, samples: usize, seed: u64, index: usize) -> RoughnessPoint {
    let reach = (8.0 * sigma / dx).ceil() as i64;
    let gauss = |d: f64| (-d * d / (2.0 * sigma * sigma)).exp();
    let lattice = cdf((-reach..=reach).map(|j| gauss(j as f64 * dx)));
    let start = offset * dx;
    let first = cdf((-reach..=reach + 1).map(|k| gauss(k as f64 * dx - start)));

    let paths = samples.div_ceil(STEPS_PER_PATH);
    let blocks = paths.div_ceil(PATHS_PER_BLOCK);
    let sums: Vec<(f64, f64, usize)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, ((index as u64) << 32) | b as u64);
            let (mut s1, mut s2, mut count) = (0.0, 0.0, 0usize);
            let lo = b * PATHS_PER_BLOCK * STEPS_PER_PATH;
            let hi = (lo + PATHS_PER_BLOCK * STEPS_PER_PATH).min(samples);
            let mut step = 0;
            for _ in lo..hi {
                let d = if step == 0 {
                    (draw(&mut rng, &first) as i64 - reach) as f64 * dx - start
                } else {
                    (draw(&mut rng, &lattice) as i64 - reach) as f64 * dx
                };
                step = (step + 1) % STEPS_PER_PATH;
                let sq = d * d;
                s1 += sq;
                s2 += sq * sq;
                count += 1;
            }
            (s1, s2, count)
        })
        .collect();
    let (s1, s2, count) = sums
        .iter()
        .fold((0.0, 0.0, 0), |(a, b, c), (x, y, z)| (a + x, b + y, c + z));
    summarize(eps, s1, s2, count)
}

fn classical_point(params: &ParticleParams, eps: f64, x0: f64, v0: f64, samples: usize) -> Result<RoughnessPoint, QuantumError> {
    let x = |t: f64| match params.potential {
        Potential::Free => Ok(x0 + v0 * t),
        Potential::Harmonic(w) => Ok(x0 * (w * t).cos() + v0 / w * (w * t).sin()),
        Potential::Table(_) => Err(QuantumError::Unsupported(
            "classical increments need a free or harmonic potential",
        )),
    };
    let (mut s1, mut s2) = (0.0, 0.0);
    for n in 0..samples {
        let d = x((n + 1) as f64 * eps)? - x(n as f64 * eps)?;
        s1 += d * d;
        s2 += d * d * d * d;
    }
    Ok(summarize(eps, s1, s2, samples))
}

fn summarize(eps: f64, s1: f64, s2: f64, count: usize) -> RoughnessPoint {
    let n = count as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0);
    RoughnessPoint {
        eps,
        mean_sq: mean,
        std_err: (var / n).sqrt(),
        statistic: mean / eps,
        samples: count,
    }
}
