//! Incomplete random variables and the Q-rule reading channel.
//!
//! A bare distribution `P` over `M` labelled outcomes is observed only
//! through a lossy reader: a realization of outcome `l` is lost with
//! probability `γ_l` (the round is frozen) or misread as outcome `j` with
//! probability `Γ[j][l]`. The observable histogram is the sub-normalized
//! effective distribution `p`, whose missing mass is the loss defect.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::rng::substream;

/// Absolute tolerance for normalization and sign checks.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("an incomplete variable needs at least two outcomes, got {0}")]
    TooFewOutcomes(usize),
    #[error("{what}: expected {expected} entries, got {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("probability of outcome {index} must be positive and finite, got {value}")]
    NonPositiveProbability { index: usize, value: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("labels of outcomes {0} and {1} coincide")]
    DuplicateLabel(usize, usize),
    #[error("loss rate of outcome {index} is {value}, outside [0, 1]")]
    LossRateOutOfRange { index: usize, value: f64 },
    #[error("misread rate Γ[{row}][{col}] = {value} is invalid")]
    InvalidMisread { row: usize, col: usize, value: f64 },
    #[error("coupling entry d[{row}][{col}] = {value} breaks symmetry or zero diagonal")]
    InvalidCoupling { row: usize, col: usize, value: f64 },
    #[error("reading channel of outcome {column} is not sub-stochastic: γ + ΣΓ = {total}")]
    ChannelInfeasible { column: usize, total: f64 },
    #[error("effective probability of outcome {index} is negative ({value}); the Q-rules are too strong for this distribution")]
    NegativeEffectiveProbability { index: usize, value: f64 },
}

/// The hidden distribution `P` of an incomplete random variable.
#[derive(Debug, Clone, PartialEq)]
pub struct BareDistribution {
    labels: Vec<f64>,
    probs: Vec<f64>,
}

impl BareDistribution {
    pub fn new(labels: Vec<f64>, probs: Vec<f64>) -> Result<Self, ChannelError> {
        let m = probs.len();
        if m < 2 {
            return Err(ChannelError::TooFewOutcomes(m));
        }
        if labels.len() != m {
            return Err(ChannelError::DimensionMismatch {
                what: "labels",
                expected: m,
                found: labels.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ChannelError::NonPositiveProbability { index, value });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(ChannelError::NotNormalized(total));
        }
        for i in 0..m {
            for j in i + 1..m {
                if labels[i] == labels[j] {
                    return Err(ChannelError::DuplicateLabel(i, j));
                }
            }
        }
        Ok(Self { labels, probs })
    }

    /// Outcomes labelled `0, 1, ..., M-1`.
    pub fn indexed(probs: Vec<f64>) -> Result<Self, ChannelError> {
        let labels = (0..probs.len()).map(|j| j as f64).collect();
        Self::new(labels, probs)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, j: usize) -> f64 {
        self.probs[j]
    }

    pub fn label(&self, j: usize) -> f64 {
        self.labels[j]
    }
}

/// Loss rates `γ_j` and misread matrix `Γ[j][l]` (realization `l` read as `j`).
#[derive(Debug, Clone, PartialEq)]
pub struct QRuleParams {
    loss_rates: Vec<f64>,
    /// Row-major `M × M`.
    misreads: Vec<f64>,
}

impl QRuleParams {
    pub fn new(loss_rates: Vec<f64>, misreads: Vec<Vec<f64>>) -> Result<Self, ChannelError> {
        let m = loss_rates.len();
        validate_loss_rates(&loss_rates)?;
        if misreads.len() != m {
            return Err(ChannelError::DimensionMismatch {
                what: "misread rows",
                expected: m,
                found: misreads.len(),
            });
        }
        let mut flat = Vec::with_capacity(m * m);
        for (row, r) in misreads.iter().enumerate() {
            if r.len() != m {
                return Err(ChannelError::DimensionMismatch {
                    what: "misread columns",
                    expected: m,
                    found: r.len(),
                });
            }
            for (col, &value) in r.iter().enumerate() {
                let bad = !value.is_finite() || value < 0.0 || (row == col && value != 0.0);
                if bad {
                    return Err(ChannelError::InvalidMisread { row, col, value });
                }
                flat.push(value);
            }
        }
        for column in 0..m {
            let total = loss_rates[column] + (0..m).map(|j| flat[j * m + column]).sum::<f64>();
            if total > 1.0 + NORMALIZATION_TOL {
                return Err(ChannelError::ChannelInfeasible { column, total });
            }
        }
        Ok(Self {
            loss_rates,
            misreads: flat,
        })
    }

    /// Losses only, no misreads.
    pub fn losses_only(loss_rates: Vec<f64>) -> Result<Self, ChannelError> {
        let m = loss_rates.len();
        Self::new(loss_rates, vec![vec![0.0; m]; m])
    }

    /// The perfect reader.
    pub fn noiseless(m: usize) -> Self {
        Self {
            loss_rates: vec![0.0; m],
            misreads: vec![0.0; m * m],
        }
    }

    pub fn len(&self) -> usize {
        self.loss_rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loss_rates.is_empty()
    }

    pub fn loss_rates(&self) -> &[f64] {
        &self.loss_rates
    }

    pub fn loss_rate(&self, j: usize) -> f64 {
        self.loss_rates[j]
    }

    /// `Γ[j][l]`: probability that a realization of outcome `l` is read as `j`.
    pub fn misread(&self, j: usize, l: usize) -> f64 {
        self.misreads[j * self.len() + l]
    }
}

fn validate_loss_rates(gamma: &[f64]) -> Result<(), ChannelError> {
    for (index, &value) in gamma.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(ChannelError::LossRateOutOfRange { index, value });
        }
    }
    Ok(())
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), ChannelError> {
    if expected != found {
        return Err(ChannelError::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

/// Observed histogram `p` together with the non-classical terms `C̃[j][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveDistribution {
    probs: Vec<f64>,
    defect: f64,
    cross: Vec<f64>,
}

impl EffectiveDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability that a reading is lost.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// Total mass of successful readings, `Σ_j p_j`.
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `C̃[j][l]` for `j != l`; zero on the diagonal.
    pub fn cross_term(&self, j: usize, l: usize) -> f64 {
        self.cross[j * self.probs.len() + l]
    }
}

/// Effective histogram read through the channel `q`.
///
/// `p_j = P_j + Σ_{l≠j} C̃[j][l]` with
/// `C̃[j][l] = Γ[j][l] P_l − (Γ[l][j] + γ_j/(M−1)) P_j`.
pub fn effective_distribution(
    bare: &BareDistribution,
    q: &QRuleParams,
) -> Result<EffectiveDistribution, ChannelError> {
    let m = bare.len();
    check_len("Q-rule parameters", m, q.len())?;
    let share = 1.0 / (m as f64 - 1.0);
    let mut cross = vec![0.0; m * m];
    let mut probs = Vec::with_capacity(m);
    for j in 0..m {
        let pj = bare.prob(j);
        let mut p = pj;
        for l in (0..m).filter(|&l| l != j) {
            let c = q.misread(j, l) * bare.prob(l) - (q.misread(l, j) + q.loss_rate(j) * share) * pj;
            cross[j * m + l] = c;
            p += c;
        }
        if p < -NORMALIZATION_TOL {
            return Err(ChannelError::NegativeEffectiveProbability { index: j, value: p });
        }
        probs.push(p.max(0.0));
    }
    let defect = (0..m).map(|j| q.loss_rate(j) * bare.prob(j)).sum();
    Ok(EffectiveDistribution {
        probs,
        defect,
        cross,
    })
}

/// Symmetric coupling `d`, defined through `C̃[j][l] = √(P_j P_l) d[j][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    m: usize,
    d: Vec<f64>,
}

impl CouplingMatrix {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            d: vec![0.0; m * m],
        }
    }

    /// Build from explicit rows; the matrix must be symmetric with zero diagonal.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ChannelError> {
        let m = rows.len();
        let mut d = Vec::with_capacity(m * m);
        for r in &rows {
            check_len("coupling columns", m, r.len())?;
            d.extend_from_slice(r);
        }
        for row in 0..m {
            for col in 0..m {
                let value = d[row * m + col];
                let bad = !value.is_finite()
                    || (row == col && value != 0.0)
                    || value != d[col * m + row];
                if bad {
                    return Err(ChannelError::InvalidCoupling { row, col, value });
                }
            }
        }
        Ok(Self { m, d })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.d[j * self.m + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.d.iter().fold(0.0, |a, &x| a.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.d.iter().all(|&x| x == 0.0)
    }

    /// `p_j = P_j + Σ_{l≠j} √(P_j P_l) d[j][l]`.
    pub fn effective_probs(&self, bare: &BareDistribution) -> Vec<f64> {
        (0..self.m)
            .map(|j| {
                let pj = bare.prob(j);
                pj + (0..self.m)
                    .filter(|&l| l != j)
                    .map(|l| (pj * bare.prob(l)).sqrt() * self.get(j, l))
                    .sum::<f64>()
            })
            .collect()
    }
}

/// Coupling of the symmetric, loss-dominated channel:
/// `d[j][l] = −(γ_l √(P_l/P_j) + γ_j √(P_j/P_l)) / (2(M−1))`.
pub fn symmetric_coupling(
    bare: &BareDistribution,
    gamma: &[f64],
) -> Result<CouplingMatrix, ChannelError> {
    let m = bare.len();
    check_len("loss rates", m, gamma.len())?;
    validate_loss_rates(gamma)?;
    let scale = 1.0 / (2.0 * (m as f64 - 1.0));
    let mut d = vec![0.0; m * m];
    for j in 0..m {
        for l in (0..m).filter(|&l| l != j) {
            let (pj, pl) = (bare.prob(j), bare.prob(l));
            d[j * m + l] = -(gamma[l] * (pl / pj).sqrt() + gamma[j] * (pj / pl).sqrt()) * scale;
        }
    }
    // the formula is symmetric up to rounding of the two ratios; force exactness
    for j in 0..m {
        for l in j + 1..m {
            d[l * m + j] = d[j * m + l];
        }
    }
    Ok(CouplingMatrix { m, d })
}

/// Generative channel realizing the symmetric coupling:
/// `Γ[j][l] = γ_j P_j / (2(M−1) P_l)`.
pub fn symmetrizing_misreads(
    bare: &BareDistribution,
    gamma: &[f64],
) -> Result<QRuleParams, ChannelError> {
    let m = bare.len();
    check_len("loss rates", m, gamma.len())?;
    validate_loss_rates(gamma)?;
    let scale = 1.0 / (2.0 * (m as f64 - 1.0));
    let rows = (0..m)
        .map(|j| {
            (0..m)
                .map(|l| {
                    if l == j {
                        0.0
                    } else {
                        gamma[j] * bare.prob(j) * scale / bare.prob(l)
                    }
                })
                .collect()
        })
        .collect();
    QRuleParams::new(gamma.to_vec(), rows)
}

/// One reading of an incomplete variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReadingOutcome {
    /// The reader reported outcome `j` (possibly a misread).
    Read(usize),
    /// The realization was lost; the driven system stays frozen this round.
    Lost,
}

/// Precomputed sampler for the two-step reading process: draw the true
/// outcome `l ~ P`, then lose it with probability `γ_l`, misread it as `j`
/// with probability `Γ[j][l]`, and otherwise read it correctly.
#[derive(Debug, Clone)]
pub struct ReadingChannel {
    m: usize,
    bare_cdf: Vec<f64>,
    /// Per true outcome `l`: cumulative thresholds `(threshold, outcome)`.
    read_cdf: Vec<Vec<(f64, ReadingOutcome)>>,
}

impl ReadingChannel {
    pub fn new(bare: &BareDistribution, q: &QRuleParams) -> Result<Self, ChannelError> {
        let m = bare.len();
        check_len("Q-rule parameters", m, q.len())?;
        let mut acc = 0.0;
        let bare_cdf = bare
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let read_cdf = (0..m)
            .map(|l| {
                let mut acc = q.loss_rate(l);
                let mut table = vec![(acc, ReadingOutcome::Lost)];
                for j in (0..m).filter(|&j| j != l) {
                    acc += q.misread(j, l);
                    table.push((acc, ReadingOutcome::Read(j)));
                }
                table
            })
            .collect();
        Ok(Self {
            m,
            bare_cdf,
            read_cdf,
        })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ReadingOutcome {
        let u: f64 = rng.random();
        let truth = self
            .bare_cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.m - 1);
        let v: f64 = rng.random();
        self.read_cdf[truth]
            .iter()
            .find(|(threshold, _)| v < *threshold)
            .map(|&(_, outcome)| outcome)
            .unwrap_or(ReadingOutcome::Read(truth))
    }

    /// Counts of `draws` readings, generated in fixed blocks with one
    /// generator substream per block.
    pub fn tally(&self, draws: u64, seed: u64) -> ReadingTally {
        const BLOCK: u64 = 1 << 14;
        let blocks = draws.div_ceil(BLOCK);
        let partial: Vec<ReadingTally> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = substream(seed, b);
                let n = BLOCK.min(draws - b * BLOCK);
                let mut t = ReadingTally::empty(self.m);
                for _ in 0..n {
                    t.record(self.sample(&mut rng));
                }
                t
            })
            .collect();
        partial
            .into_iter()
            .fold(ReadingTally::empty(self.m), |mut a, t| {
                a.merge(&t);
                a
            })
    }
}

/// Draw a single reading. For repeated draws build a [`ReadingChannel`] once.
pub fn sample_reading<R: Rng + ?Sized>(
    bare: &BareDistribution,
    q: &QRuleParams,
    rng: &mut R,
) -> Result<ReadingOutcome, ChannelError> {
    Ok(ReadingChannel::new(bare, q)?.sample(rng))
}

/// Histogram of reading outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadingTally {
    pub reads: Vec<u64>,
    pub lost: u64,
}

impl ReadingTally {
    pub fn empty(m: usize) -> Self {
        Self {
            reads: vec![0; m],
            lost: 0,
        }
    }

    pub fn record(&mut self, outcome: ReadingOutcome) {
        match outcome {
            ReadingOutcome::Read(j) => self.reads[j] += 1,
            ReadingOutcome::Lost => self.lost += 1,
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.reads.iter_mut().zip(&other.reads) {
            *a += b;
        }
        self.lost += other.lost;
    }

    pub fn total(&self) -> u64 {
        self.reads.iter().sum::<u64>() + self.lost
    }

    /// Counts with the lost readings appended as a final category.
    pub fn categories(&self) -> Vec<u64> {
        let mut c = self.reads.clone();
        c.push(self.lost);
        c
    }
}
