use num_complex::Complex64;
use std::f64::consts::PI;

use super::{positive, QuantumError};

/// Periodic uniform grid `x_k = x_min + k·Δx`, `k < n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveGrid {
    pub x_min: f64,
    pub dx: f64,
    pub n: usize,
}

impl WaveGrid {
    pub fn new(x_min: f64, dx: f64, n: usize) -> Result<Self, QuantumError> {
        positive("dx", dx)?;
        if n < 2 {
            return Err(QuantumError::InvalidParameter {
                name: "grid points",
                value: n as f64,
                reason: "need at least two",
            });
        }
        Ok(Self { x_min, dx, n })
    }

    /// Nodes `−L, −L + Δx, …, L − Δx`.
    pub fn symmetric(half_width: f64, dx: f64) -> Result<Self, QuantumError> {
        positive("half width", half_width)?;
        positive("dx", dx)?;
        let n = (2.0 * half_width / dx).round() as usize;
        Self::new(-half_width, dx, n)
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.dx
    }

    /// Angular wavenumber of FFT bin `q`, taking the signed bin `q − n` for
    /// the upper half.
    pub fn wavenumber(&self, q: usize) -> f64 {
        let signed = if q <= self.n / 2 {
            q as f64
        } else {
            q as f64 - self.n as f64
        };
        2.0 * PI * signed / self.length()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub grid: WaveGrid,
    pub values: Vec<Complex64>,
}

impl WaveState {
    pub fn new(grid: WaveGrid, values: Vec<Complex64>) -> Result<Self, QuantumError> {
        if values.len() != grid.n {
            return Err(QuantumError::DimensionMismatch {
                what: "wave values",
                expected: grid.n,
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: WaveGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values }
    }

    /// Normalized `exp(−(x − x0)²/(4σ²) + i p0 x/α)`; `|ψ|²` has standard
    /// deviation `σ`.
    pub fn gaussian(grid: WaveGrid, x0: f64, sigma: f64, p0: f64, alpha: f64) -> Result<Self, QuantumError> {
        positive("sigma", sigma)?;
        positive("alpha", alpha)?;
        let mut s = Self::from_fn(grid, |x| {
            let u = x - x0;
            Complex64::from_polar((-u * u / (4.0 * sigma * sigma)).exp(), p0 * x / alpha)
        });
        s.normalize()?;
        Ok(s)
    }

    /// Normalized `e^{ikx}` with `k` rounded to the nearest periodic wavenumber.
    pub fn plane_wave(grid: WaveGrid, k: f64) -> Self {
        let k0 = 2.0 * PI / grid.length();
        let k = (k / k0).round() * k0;
        let amp = 1.0 / grid.length().sqrt();
        Self::from_fn(grid, |x| Complex64::from_polar(amp, k * x))
    }

    /// `Σ|ψ_k|² Δx`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    /// Rescale to unit norm; returns the norm before rescaling.
    pub fn normalize(&mut self) -> Result<f64, QuantumError> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(QuantumError::ZeroNorm);
        }
        for v in &mut self.values {
            *v /= norm;
        }
        Ok(norm)
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    fn moments(&self) -> (f64, f64, f64) {
        let (mut w, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (k, v) in self.values.iter().enumerate() {
            let x = self.grid.x(k);
            let p = v.norm_sqr();
            w += p;
            m1 += p * x;
            m2 += p * x * x;
        }
        (w, m1, m2)
    }

    /// `⟨x⟩` under `|ψ|²`.
    pub fn mean_position(&self) -> f64 {
        let (w, m1, _) = self.moments();
        m1 / w
    }

    /// Standard deviation of position under `|ψ|²`.
    pub fn width(&self) -> f64 {
        let (w, m1, m2) = self.moments();
        let mean = m1 / w;
        (m2 / w - mean * mean).max(0.0).sqrt()
    }

    /// `(Σ|ψ − χ|² Δx)^{1/2}`.
    pub fn l2_distance(&self, other: &Self) -> Result<f64, QuantumError> {
        if other.values.len() != self.values.len() {
            return Err(QuantumError::DimensionMismatch {
                what: "compared state",
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.dx).sqrt())
    }
}
