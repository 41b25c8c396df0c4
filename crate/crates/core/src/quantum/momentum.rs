use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::{positive, QuantumError, WaveGrid, WaveState};

/// Momentum amplitudes on the reciprocal lattice `p_q = α·k_q`, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    pub grid: WaveGrid,
    pub alpha: f64,
    pub p: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Lattice spacing `2πα/(nΔx)`.
    pub dp: f64,
}

impl MomentumState {
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dp
    }

    /// Standard deviation of momentum under `|φ|²`.
    pub fn width(&self) -> f64 {
        let (mut w, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (p, v) in self.p.iter().zip(&self.values) {
            let d = v.norm_sqr();
            w += d;
            m1 += d * p;
            m2 += d * p * p;
        }
        let mean = m1 / w;
        (m2 / w - mean * mean).max(0.0).sqrt()
    }
}

/// FFT bins in ascending order of wavenumber.
fn ascending_bins(n: usize) -> Vec<usize> {
    (n / 2 + 1..n).chain(0..=n / 2).collect()
}

/// `φ(p_q) = Σ_k ψ_k e^{−i p_q x_k/α} Δx/√(2πα)`.
pub fn momentum_transform(psi: &WaveState, alpha: f64) -> Result<MomentumState, QuantumError> {
    positive("alpha", alpha)?;
    let grid = psi.grid;
    let n = grid.n;
    let mut buf = psi.values.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = grid.dx / (2.0 * PI * alpha).sqrt();
    let bins = ascending_bins(n);
    let p = bins.iter().map(|&q| alpha * grid.wavenumber(q)).collect();
    let values = bins
        .iter()
        .map(|&q| buf[q] * Complex64::from_polar(scale, -grid.wavenumber(q) * grid.x_min))
        .collect();
    Ok(MomentumState {
        grid,
        alpha,
        p,
        values,
        dp: 2.0 * PI * alpha / grid.length(),
    })
}

/// `ψ_k = Σ_q φ(p_q) e^{i p_q x_k/α} Δp/√(2πα)`.
pub fn inverse_momentum_transform(phi: &MomentumState) -> Result<WaveState, QuantumError> {
    let grid = phi.grid;
    let n = grid.n;
    if phi.values.len() != n {
        return Err(QuantumError::DimensionMismatch {
            what: "momentum values",
            expected: n,
            found: phi.values.len(),
        });
    }
    let scale = phi.dp / (2.0 * PI * phi.alpha).sqrt();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (&q, v) in ascending_bins(n).iter().zip(&phi.values) {
        buf[q] = v * Complex64::from_polar(scale, grid.wavenumber(q) * grid.x_min);
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    WaveState::new(grid, buf)
}

/// `Δx·Δp` from the position and momentum second moments.
pub fn uncertainty_product(psi: &WaveState, alpha: f64) -> Result<f64, QuantumError> {
    if !(psi.norm_sqr() > 0.0) {
        return Err(QuantumError::ZeroNorm);
    }
    Ok(psi.width() * momentum_transform(psi, alpha)?.width())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> WaveGrid {
        WaveGrid::symmetric(20.0, 0.05).unwrap()
    }

    #[test]
    fn gaussian_is_minimal() {
        for (alpha, sigma) in [(1.0, 1.0), (0.5, 0.7), (2.0, 1.5)] {
            let psi = WaveState::gaussian(grid(), 0.3, sigma, 1.2, alpha).unwrap();
            let phi = momentum_transform(&psi, alpha).unwrap();
            assert!((phi.norm_sqr() - 1.0).abs() < 1e-10);
            assert!((phi.width() - alpha / (2.0 * sigma)).abs() < 1e-8);
            let u = uncertainty_product(&psi, alpha).unwrap();
            assert!((u - alpha / 2.0).abs() < 1e-6, "{u}");
        }
    }

    #[test]
    fn round_trip() {
        let g = WaveGrid::new(-3.3, 0.07, 101).unwrap();
        let psi = WaveState::from_fn(g, |x| Complex64::new((-x * x).exp() * x.cos(), (0.5 * x).sin() * (-x * x).exp()));
        let back = inverse_momentum_transform(&momentum_transform(&psi, 0.8).unwrap()).unwrap();
        for (a, b) in back.values.iter().zip(&psi.values) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn shift_theorem() {
        let g = grid();
        let a = 20.0 * g.dx;
        let psi = WaveState::gaussian(g, 0.0, 0.9, 0.4, 1.0).unwrap();
        let shifted = WaveState::gaussian(g, a, 0.9, 0.4, 1.0).unwrap();
        let phi = momentum_transform(&psi, 1.0).unwrap();
        let phs = momentum_transform(&shifted, 1.0).unwrap();
        for ((p, u), v) in phi.p.iter().zip(&phi.values).zip(&phs.values) {
            assert!((u.norm() - v.norm()).abs() < 1e-10);
            // the carrier e^{ip0x} also shifts, contributing e^{ip0 a}
            let expect = u * Complex64::from_polar(1.0, -p * a + 0.4 * a);
            assert!((v - expect).norm() < 1e-10);
        }
    }
}
