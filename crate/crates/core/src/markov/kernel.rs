use crate::channel::EffectiveDistribution;

use super::{guard, pow_sat, GameSpec, MarkovError, StateGrid};

/// Column-sparse transition matrix: `T[k'][k]` is the probability of moving
/// from node `k` to node `k'` in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    /// Per source node, `(target, probability)` sorted by target.
    columns: Vec<Vec<(usize, f64)>>,
    /// Lost-reading mass kept on the diagonal of each column.
    frozen: Vec<f64>,
}

impl TransitionKernel {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, k: usize) -> &[(usize, f64)] {
        &self.columns[k]
    }

    pub fn get(&self, to: usize, from: usize) -> f64 {
        self.columns[from]
            .iter()
            .find(|(t, _)| *t == to)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn frozen(&self, k: usize) -> f64 {
        self.frozen[k]
    }

    pub fn column_sum(&self, k: usize) -> f64 {
        self.columns[k].iter().map(|(_, p)| p).sum()
    }

    /// `T·e`.
    pub fn apply(&self, e: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (col, &mass) in self.columns.iter().zip(e) {
            if mass != 0.0 {
                for &(to, p) in col {
                    out[to] += p * mass;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut t = vec![vec![0.0; n]; n];
        for (from, col) in self.columns.iter().enumerate() {
            for &(to, p) in col {
                t[to][from] = p;
            }
        }
        t
    }
}

/// One-round law out of node `k`, merged by target node.
fn step_law(
    spec: &GameSpec,
    grid: &StateGrid,
    eff: &EffectiveDistribution,
    k: usize,
    include_frozen: bool,
) -> Result<Vec<(usize, f64)>, MarkovError> {
    let x = grid.node(k);
    let mut col: Vec<(usize, f64)> = Vec::with_capacity(eff.probs().len() + 1);
    for (j, &p) in eff.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let image = spec.image(x, j);
        let to = grid.locate(image).ok_or(MarkovError::OffGridImage {
            node: k,
            outcome: j,
            image,
        })?;
        col.push((to, p));
    }
    if include_frozen && eff.defect() > 0.0 {
        col.push((k, eff.defect()));
    }
    col.sort_by_key(|(to, _)| *to);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
    for (to, p) in col {
        match merged.last_mut() {
            Some((t, q)) if *t == to => *q += p,
            _ => merged.push((to, p)),
        }
    }
    Ok(merged)
}

/// Kernel of the game on `grid`: each read outcome `j` moves mass `p_j` to
/// the node its image snaps to; the defect stays on the diagonal.
pub fn effective_kernel(spec: &GameSpec, grid: &StateGrid) -> Result<TransitionKernel, MarkovError> {
    let eff = spec.effective()?;
    let columns = (0..grid.len())
        .map(|k| step_law(spec, grid, &eff, k, true))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TransitionKernel {
        columns,
        frozen: vec![eff.defect(); grid.len()],
    })
}

/// `T^n e0`.
pub fn propagate_distribution(
    e0: &[f64],
    kernel: &TransitionKernel,
    n: usize,
) -> Result<Vec<f64>, MarkovError> {
    if e0.len() != kernel.len() {
        return Err(MarkovError::DimensionMismatch {
            what: "initial distribution",
            expected: kernel.len(),
            found: e0.len(),
        });
    }
    let sum: f64 = e0.iter().sum();
    if e0.iter().any(|&e| !(e >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(MarkovError::InvalidDistribution { sum });
    }
    let mut e = e0.to_vec();
    for _ in 0..n {
        e = kernel.apply(&e);
    }
    Ok(e)
}

/// What the joint density does with lost readings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrozenMode {
    /// A lost round repeats the previous state; the table sums to 1.
    #[default]
    Stay,
    /// Only read rounds carry mass; the table sums to `(Σ_j p_j)^N`.
    Drop,
}

/// Probability of every state sequence `(x_1, …, x_N)` reachable from a
/// fixed start node, as the product of one-round laws.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDensity {
    pub start: usize,
    pub grid_len: usize,
    pub rounds: usize,
    /// Node sequences in lexicographic order with their probabilities;
    /// sequences of probability zero are omitted.
    pub entries: Vec<(Vec<usize>, f64)>,
}

impl JointDensity {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// Distribution of the state after `round` rounds (`1 ≤ round ≤ N`).
    pub fn marginal(&self, round: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.grid_len];
        for (seq, p) in &self.entries {
            m[seq[round - 1]] += p;
        }
        m
    }
}

pub fn joint_path_density(
    spec: &GameSpec,
    grid: &StateGrid,
    start: usize,
    n: usize,
    mode: FrozenMode,
) -> Result<JointDensity, MarkovError> {
    if start >= grid.len() {
        return Err(MarkovError::DimensionMismatch {
            what: "start node",
            expected: grid.len(),
            found: start,
        });
    }
    guard("joint density (grid^N sequences)", pow_sat(grid.len(), n))?;
    let eff = spec.effective()?;
    let mut laws: Vec<Option<Vec<(usize, f64)>>> = vec![None; grid.len()];
    let mut law = |k: usize| -> Result<Vec<(usize, f64)>, MarkovError> {
        if laws[k].is_none() {
            laws[k] = Some(step_law(spec, grid, &eff, k, mode == FrozenMode::Stay)?);
        }
        Ok(laws[k].clone().expect("filled"))
    };

    let mut entries = Vec::new();
    // depth-first over sequences; each frame holds the law out of the
    // current node and the position within it
    let mut seq: Vec<usize> = Vec::with_capacity(n);
    let mut weights: Vec<f64> = vec![1.0];
    let mut stack: Vec<(Vec<(usize, f64)>, usize)> = vec![(law(start)?, 0)];
    while let Some((options, pos)) = stack.last_mut() {
        if *pos == options.len() {
            stack.pop();
            seq.pop();
            weights.pop();
            continue;
        }
        let (to, p) = options[*pos];
        *pos += 1;
        let w = weights[weights.len() - 1] * p;
        seq.push(to);
        if seq.len() == n {
            entries.push((seq.clone(), w));
            seq.pop();
        } else {
            weights.push(w);
            stack.push((law(to)?, 0));
        }
    }
    Ok(JointDensity {
        start,
        grid_len: grid.len(),
        rounds: n,
        entries,
    })
}
