use super::{
    build_kernel, propagate, reference_solver, step_count, Boundary, ParticleParams, QuantumError,
    ReferenceOptions, WaveState,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyPoint {
    pub eps: f64,
    pub steps: usize,
    pub l2_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub points: Vec<StudyPoint>,
    /// Least-squares slope of `ln error` against `ln ε`.
    pub order: f64,
}

impl StudyReport {
    pub fn is_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].l2_error < w[0].l2_error)
    }
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn fitted_order(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn report(points: Vec<StudyPoint>) -> StudyReport {
    let eps: Vec<f64> = points.iter().map(|p| p.eps).collect();
    let err: Vec<f64> = points.iter().map(|p| p.l2_error).collect();
    StudyReport {
        order: fitted_order(&eps, &err),
        points,
    }
}

/// L2 distance at `total_time` between the kernel propagation and the
/// reference solution, for each time step in `ladder`. The time step in
/// `params` is ignored.
pub fn convergence_study(
    params: &ParticleParams,
    psi0: &WaveState,
    total_time: f64,
    ladder: &[f64],
    reference: &ReferenceOptions,
    boundary: Boundary,
) -> Result<StudyReport, QuantumError> {
    let mut target = reference_solver(psi0, params, total_time, reference)?;
    target.normalize()?;
    let points = ladder
        .iter()
        .map(|&eps| {
            let p = params.clone().with_eps(eps);
            let steps = step_count(total_time, eps)?;
            let run = propagate(psi0, &build_kernel(&p, &psi0.grid)?, steps, boundary, None)?;
            Ok(StudyPoint {
                eps,
                steps,
                l2_error: run.state.l2_distance(&target)?,
            })
        })
        .collect::<Result<Vec<_>, QuantumError>>()?;
    Ok(report(points))
}

/// L2 distance at `total_time` between apodized and plain kernel
/// propagation (both renormalized), for each time step in `ladder`.
pub fn apodization_study(
    params: &ParticleParams,
    psi0: &WaveState,
    total_time: f64,
    ladder: &[f64],
    boundary: Boundary,
) -> Result<StudyReport, QuantumError> {
    let points = ladder
        .iter()
        .map(|&eps| {
            let apodized = params.clone().with_eps(eps);
            let plain = apodized.clone().with_apodization(super::Apodization::None);
            let steps = step_count(total_time, eps)?;
            let a = propagate(psi0, &build_kernel(&apodized, &psi0.grid)?, steps, boundary, None)?;
            let b = propagate(psi0, &build_kernel(&plain, &psi0.grid)?, steps, boundary, None)?;
            Ok(StudyPoint {
                eps,
                steps,
                l2_error: a.state.l2_distance(&b.state)?,
            })
        })
        .collect::<Result<Vec<_>, QuantumError>>()?;
    Ok(report(points))
}
