use super::MarkovError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Images outside the grid are an error.
    #[default]
    Strict,
    /// The grid is a circle of circumference `len·Δx`.
    Periodic,
}

/// Uniform nodes `x_k = start + k·Δx`, `k < len`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    start: f64,
    dx: f64,
    len: usize,
    boundary: Boundary,
    snap_tol: f64,
}

impl StateGrid {
    pub fn new(start: f64, dx: f64, len: usize) -> Result<Self, MarkovError> {
        if !(dx > 0.0 && dx.is_finite()) || !start.is_finite() {
            return Err(MarkovError::InvalidGrid(format!(
                "need finite start and positive spacing, got start {start}, dx {dx}"
            )));
        }
        if len == 0 {
            return Err(MarkovError::InvalidGrid("grid needs at least one node".into()));
        }
        Ok(Self {
            start,
            dx,
            len,
            boundary: Boundary::Strict,
            snap_tol: dx / 2.0,
        })
    }

    /// Nodes from `min` to `max` inclusive with spacing `dx`.
    pub fn spanning(min: f64, max: f64, dx: f64) -> Result<Self, MarkovError> {
        let steps = (max - min) / dx;
        if !(steps >= 0.0) || (steps - steps.round()).abs() > 1e-9 {
            return Err(MarkovError::InvalidGrid(format!(
                "[{min}, {max}] is not a whole number of steps of {dx}"
            )));
        }
        Self::new(min, dx, steps.round() as usize + 1)
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Largest distance from a node at which an image still snaps to it.
    /// Defaults to `Δx/2`.
    pub fn with_snap_tolerance(mut self, tol: f64) -> Self {
        self.snap_tol = tol.min(self.dx / 2.0);
        self
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn node(&self, k: usize) -> f64 {
        self.start + k as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.node(k)).collect()
    }

    /// Index of the node `x` snaps to, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let u = (x - self.start) / self.dx;
        if !u.is_finite() {
            return None;
        }
        let k = u.round();
        if (u - k).abs() * self.dx > self.snap_tol {
            return None;
        }
        match self.boundary {
            Boundary::Strict => (k >= 0.0 && k < self.len as f64).then_some(k as usize),
            Boundary::Periodic => Some(k.rem_euclid(self.len as f64) as usize),
        }
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let u = ((x - self.start) / self.dx).round();
        u.clamp(0.0, (self.len - 1) as f64) as usize
    }

    /// Unit mass at the node nearest `x`.
    pub fn delta(&self, x: f64) -> Vec<f64> {
        let mut e = vec![0.0; self.len];
        e[self.nearest(x)] = 1.0;
        e
    }
}
