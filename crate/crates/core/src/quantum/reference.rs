use num_complex::Complex64;

use super::{positive, ParticleParams, QuantumError, WaveState};

/// Finite-difference stencil for `∂²/∂x²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FdOrder {
    Second,
    #[default]
    Fourth,
}

impl FdOrder {
    fn stencil(self) -> &'static [f64] {
        match self {
            Self::Second => &[1.0, -2.0, 1.0],
            Self::Fourth => &[-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    /// Largest time step; the actual step divides the total time evenly.
    pub dt: f64,
    pub order: FdOrder,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            order: FdOrder::Fourth,
        }
    }
}

/// Banded matrix with `b` sub- and super-diagonals, LU-factorized in place
/// without pivoting.
struct Banded {
    n: usize,
    b: usize,
    a: Vec<Complex64>,
}

impl Banded {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.b + 1) + (j + self.b - i)
    }

    fn factor(&mut self) {
        let (n, b) = (self.n, self.b);
        for k in 0..n {
            let pivot = self.a[self.idx(k, k)];
            for i in k + 1..(k + b + 1).min(n) {
                let l = self.a[self.idx(i, k)] / pivot;
                let ik = self.idx(i, k);
                self.a[ik] = l;
                for j in k + 1..(k + b + 1).min(n) {
                    let kj = self.a[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.a[ij] -= l * kj;
                }
            }
        }
    }

    fn solve(&self, rhs: &mut [Complex64]) {
        let (n, b) = (self.n, self.b);
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let mut s = rhs[i];
            for j in lo..i {
                s -= self.a[self.idx(i, j)] * rhs[j];
            }
            rhs[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + b + 1).min(n);
            let mut s = rhs[i];
            for j in i + 1..hi {
                s -= self.a[self.idx(i, j)] * rhs[j];
            }
            rhs[i] = s / self.a[self.idx(i, i)];
        }
    }
}

/// Crank–Nicolson integration of `iα ∂ψ/∂t = −(α²/2m) ∂²ψ/∂x² + (V − E0)ψ`
/// with zero Dirichlet values beyond the grid ends.
pub fn reference_solver(
    psi0: &WaveState,
    params: &ParticleParams,
    total_time: f64,
    opts: &ReferenceOptions,
) -> Result<WaveState, QuantumError> {
    params.validate()?;
    positive("dt", opts.dt)?;
    if !(total_time >= 0.0) {
        return Err(QuantumError::InvalidParameter {
            name: "total time",
            value: total_time,
            reason: "must be non-negative",
        });
    }
    let grid = psi0.grid;
    let n = grid.n;
    let steps = (total_time / opts.dt).ceil() as usize;
    if steps == 0 {
        return Ok(psi0.clone());
    }
    let dt = total_time / steps as f64;
    let stencil = opts.order.stencil();
    let b = stencil.len() / 2;
    let kinetic = params.alpha * params.alpha / (2.0 * params.mass * grid.dx * grid.dx);
    // ±i dt/(2α) H, row by row
    let half = Complex64::new(0.0, dt / (2.0 * params.alpha));
    let h = |i: usize, j: usize| -> f64 {
        let off = j as isize - i as isize;
        let mut v = -kinetic * stencil[(off + b as isize) as usize];
        if i == j {
            v += params.potential_at(grid.x(i)) - params.e0;
        }
        v
    };
    let mut lhs = Banded {
        n,
        b,
        a: vec![Complex64::new(0.0, 0.0); n * (2 * b + 1)],
    };
    for i in 0..n {
        for j in i.saturating_sub(b)..(i + b + 1).min(n) {
            let id = if i == j { 1.0 } else { 0.0 };
            let at = lhs.idx(i, j);
            lhs.a[at] = id + half * h(i, j);
        }
    }
    lhs.factor();
    let rows: Vec<Vec<(usize, Complex64)>> = (0..n)
        .map(|i| {
            (i.saturating_sub(b)..(i + b + 1).min(n))
                .map(|j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    (j, id - half * h(i, j))
                })
                .collect()
        })
        .collect();
    let mut psi = psi0.values.clone();
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..steps {
        for (r, row) in rhs.iter_mut().zip(&rows) {
            *r = row.iter().map(|&(j, c)| c * psi[j]).sum();
        }
        lhs.solve(&mut rhs);
        std::mem::swap(&mut psi, &mut rhs);
    }
    WaveState::new(grid, psi)
}
