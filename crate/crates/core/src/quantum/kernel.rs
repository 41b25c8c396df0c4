use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::{FRAC_PI_2, PI};

use super::{ParticleParams, QuantumError, WaveGrid, WaveState};

/// Dense one-step propagator `K[k'][k]` on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub grid: WaveGrid,
    /// Row-major `n × n`.
    entries: Vec<Complex64>,
    /// Continuum normalization `√(m/(2πiεα))`; the lattice kernel carries
    /// its discrete counterpart `1/(nΔx)` per momentum mode.
    pub prefactor: Complex64,
    /// Largest `ε|V − E0|/α` over the grid.
    pub max_potential_phase: f64,
}

impl KernelMatrix {
    pub fn len(&self) -> usize {
        self.grid.n
    }

    pub fn is_empty(&self) -> bool {
        self.grid.n == 0
    }

    pub fn get(&self, to: usize, from: usize) -> Complex64 {
        self.entries[to * self.grid.n + from]
    }

    /// `K·ψ`, rows in parallel, each row summed in index order.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n;
        self.entries
            .par_chunks(n)
            .map(|row| {
                row.iter()
                    .zip(psi)
                    .fold(Complex64::new(0.0, 0.0), |acc, (k, v)| acc + k * v)
            })
            .collect()
    }
}

/// Kernel of one time step.
///
/// Column `k` is `Σ_q e^{ik_q(x' − x_k)} e^{−iε(H(αk_q, x_k) − E0)/α}
/// A(ε(H − E0)/α) / n`: the momentum integral of the phase-space amplitude
/// taken on the reciprocal lattice of the grid, with the potential read at
/// the starting point.
pub fn build_kernel(params: &ParticleParams, grid: &WaveGrid) -> Result<KernelMatrix, QuantumError> {
    params.validate()?;
    let n = grid.n;
    let scale = params.eps / params.alpha;
    let max_potential_phase = (0..n)
        .map(|k| (scale * (params.potential_at(grid.x(k)) - params.e0)).abs())
        .fold(0.0, f64::max);
    if max_potential_phase >= PI {
        return Err(QuantumError::PhaseWrapGuard {
            phase: max_potential_phase,
        });
    }
    let momenta: Vec<f64> = (0..n).map(|q| params.alpha * grid.wavenumber(q)).collect();
    let fft = FftPlanner::new().plan_fft_inverse(n);
    let columns: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let x = grid.x(k);
            let mut col: Vec<Complex64> = momenta
                .iter()
                .enumerate()
                .map(|(q, &p)| {
                    let y = scale * (params.hamiltonian(p, x) - params.e0);
                    let shift = -2.0 * PI * ((q * k) % n) as f64 / n as f64;
                    Complex64::from_polar(params.apodization.factor(y) / n as f64, shift - y)
                })
                .collect();
            fft.process(&mut col);
            col
        })
        .collect();
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for (k, col) in columns.iter().enumerate() {
        for (to, v) in col.iter().enumerate() {
            entries[to * n + k] = *v;
        }
    }
    let prefactor = (Complex64::new(params.mass, 0.0)
        / Complex64::new(0.0, 2.0 * PI * params.eps * params.alpha))
    .sqrt();
    Ok(KernelMatrix {
        grid: *grid,
        entries,
        prefactor,
        max_potential_phase,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Boundary {
    #[default]
    Periodic,
    /// Multiply by a `cos^{1/8}` mask within `width` of either end after
    /// every step.
    AbsorbingPad { width: f64 },
}

impl Boundary {
    fn mask(&self, grid: &WaveGrid) -> Option<Vec<f64>> {
        match *self {
            Self::Periodic => None,
            Self::AbsorbingPad { width } => Some(
                (0..grid.n)
                    .map(|k| {
                        let edge = (k.min(grid.n - 1 - k)) as f64 * grid.dx;
                        if edge >= width {
                            1.0
                        } else {
                            (FRAC_PI_2 * edge / width).sin().powf(0.125)
                        }
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    /// Final state, normalized.
    pub state: WaveState,
    /// Norm of `K^N ψ0` before the final renormalization.
    pub norm: f64,
    pub steps: usize,
    /// Normalized snapshots `(step, state)`, when requested.
    pub snapshots: Vec<(usize, WaveState)>,
}

/// `ψ_N = K^N ψ0`, renormalized once at the end. With `every = Some(s)`
/// a normalized snapshot is kept every `s` steps, starting with step 0.
pub fn propagate(
    psi0: &WaveState,
    kernel: &KernelMatrix,
    steps: usize,
    boundary: Boundary,
    every: Option<usize>,
) -> Result<Propagation, QuantumError> {
    if psi0.grid != kernel.grid {
        return Err(QuantumError::DimensionMismatch {
            what: "state grid",
            expected: kernel.grid.n,
            found: psi0.grid.n,
        });
    }
    let mask = boundary.mask(&kernel.grid);
    let mut psi = psi0.values.clone();
    let mut snapshots = Vec::new();
    let snapshot = |step: usize, values: &[Complex64], out: &mut Vec<(usize, WaveState)>| -> Result<(), QuantumError> {
        let mut s = WaveState::new(kernel.grid, values.to_vec())?;
        s.normalize()?;
        out.push((step, s));
        Ok(())
    };
    let every = every.filter(|&s| s > 0);
    if every.is_some() {
        snapshot(0, &psi, &mut snapshots)?;
    }
    for step in 1..=steps {
        psi = kernel.apply(&psi);
        if let Some(mask) = &mask {
            for (v, m) in psi.iter_mut().zip(mask) {
                *v *= m;
            }
        }
        if every.is_some_and(|s| step % s == 0) {
            snapshot(step, &psi, &mut snapshots)?;
        }
    }
    let mut state = WaveState::new(kernel.grid, psi)?;
    let norm = state.normalize()?;
    Ok(Propagation {
        state,
        norm,
        steps,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{Apodization, Potential};

    fn grid() -> WaveGrid {
        WaveGrid::symmetric(5.0, 0.1).unwrap()
    }

    #[test]
    fn free_plane_wave_phase() {
        let g = grid();
        let params = ParticleParams::new(1.0, 1.0, 0.01).unwrap();
        let k = build_kernel(&params, &g).unwrap();
        let wave = WaveState::plane_wave(g, 2.0);
        let kk = 2.0 * PI / g.length() * (2.0 / (2.0 * PI / g.length())).round();
        let out = k.apply(&wave.values);
        let factor = Complex64::from_polar(1.0, -0.01 * kk * kk / 2.0);
        for (a, b) in out.iter().zip(&wave.values) {
            assert!((a - b * factor).norm() < 1e-8);
        }
    }

    #[test]
    fn free_kernel_is_unitary() {
        let g = grid();
        let params = ParticleParams::new(1.0, 1.0, 0.05).unwrap();
        let k = build_kernel(&params, &g).unwrap();
        let n = g.n;
        for a in (0..n).step_by(7) {
            for b in (0..n).step_by(5) {
                let dot: Complex64 = (0..n).map(|r| k.get(r, a).conj() * k.get(r, b)).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).norm() < 1e-8, "{a},{b}: {dot}");
            }
        }
        let mut psi = WaveState::gaussian(g, 0.5, 0.7, 1.0, 1.0).unwrap();
        for _ in 0..20 {
            psi.values = k.apply(&psi.values);
            assert!((psi.norm_sqr() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn harmonic_kernel_is_free_kernel_with_diagonal_phase() {
        let g = grid();
        let eps = 0.02;
        let free = build_kernel(&ParticleParams::new(1.0, 1.0, eps).unwrap(), &g).unwrap();
        let harm = build_kernel(
            &ParticleParams::new(1.0, 1.0, eps)
                .unwrap()
                .with_potential(Potential::Harmonic(1.0)),
            &g,
        )
        .unwrap();
        for to in (0..g.n).step_by(3) {
            for from in (0..g.n).step_by(4) {
                let x = g.x(from);
                let phase = Complex64::from_polar(1.0, -eps * x * x / 2.0);
                assert!((harm.get(to, from) - free.get(to, from) * phase).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_apodization_damps_modes() {
        let g = grid();
        let sigma = 0.05;
        let eps = 0.02;
        let params = ParticleParams::new(1.0, 1.0, eps)
            .unwrap()
            .with_apodization(Apodization::Gaussian(sigma));
        let k = build_kernel(&params, &g).unwrap();
        let wave = WaveState::plane_wave(g, 3.0);
        let kk = 2.0 * PI / g.length() * (3.0 / (2.0 * PI / g.length())).round();
        let y = eps * kk * kk / 2.0;
        let damping = (-y * y / (4.0 * sigma * sigma)).exp();
        let out = k.apply(&wave.values);
        for (a, b) in out.iter().zip(&wave.values) {
            assert!((a.norm() - b.norm() * damping).abs() < 1e-10);
        }
        // pointwise → 1 as ε → 0 at fixed H
        let f = |e: f64| Apodization::Gaussian(sigma).factor(e * 4.5);
        assert!(f(1e-3) > f(1e-2) && f(1e-4) > 1.0 - 1e-4);
    }

    #[test]
    fn phase_wrap_guard() {
        let g = WaveGrid::symmetric(20.0, 0.1).unwrap();
        let params = ParticleParams::new(1.0, 1.0, 0.05)
            .unwrap()
            .with_potential(Potential::Harmonic(1.0));
        assert!(matches!(build_kernel(&params, &g), Err(QuantumError::PhaseWrapGuard { .. })));
    }

    #[test]
    fn energy_offset_is_a_global_phase() {
        let g = grid();
        let base = ParticleParams::new(1.0, 1.0, 0.01)
            .unwrap()
            .with_potential(Potential::Harmonic(1.0));
        let k0 = build_kernel(&base, &g).unwrap();
        let k1 = build_kernel(&base.clone().with_e0(3.0), &g).unwrap();
        let psi = WaveState::gaussian(g, 1.0, 0.7, 0.0, 1.0).unwrap();
        let a = propagate(&psi, &k0, 30, Boundary::Periodic, None).unwrap();
        let b = propagate(&psi, &k1, 30, Boundary::Periodic, None).unwrap();
        for (x, y) in a.state.values.iter().zip(&b.state.values) {
            assert!((x.norm_sqr() - y.norm_sqr()).abs() < 1e-12);
        }
        let ratio = b.state.values[g.n / 2] / a.state.values[g.n / 2];
        assert!((ratio - Complex64::from_polar(1.0, 30.0 * 0.01 * 3.0)).norm() < 1e-9);
    }

    #[test]
    fn plane_wave_modulus_is_unchanged() {
        let g = grid();
        let k = build_kernel(&ParticleParams::new(1.0, 1.0, 0.01).unwrap(), &g).unwrap();
        let wave = WaveState::plane_wave(g, 1.0);
        let out = propagate(&wave, &k, 50, Boundary::Periodic, Some(25)).unwrap();
        assert_eq!(out.snapshots.len(), 3);
        for (a, b) in out.state.values.iter().zip(&wave.values) {
            assert!((a.norm() - b.norm()).abs() < 1e-10);
        }
        assert!((out.norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn absorbing_pad_removes_mass() {
        let g = grid();
        let k = build_kernel(&ParticleParams::new(1.0, 1.0, 0.05).unwrap(), &g).unwrap();
        let psi = WaveState::gaussian(g, 3.5, 0.3, 4.0, 1.0).unwrap();
        let out = propagate(&psi, &k, 40, Boundary::AbsorbingPad { width: 1.0 }, None).unwrap();
        assert!(out.norm < 0.9);
        assert!((out.state.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
