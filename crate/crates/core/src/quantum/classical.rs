use super::{step_count, ParticleParams, Potential, QuantumError};

/// Stationary path of the discrete phase-space action between fixed ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPathReport {
    /// `x_0 … x_N`.
    pub xs: Vec<f64>,
    /// `p_n = m(x_{n+1} − x_n)/ε`, `n < N`.
    pub ps: Vec<f64>,
    /// Largest `|x_{n+1} − x_n − εp_n/m|`.
    pub velocity_residual: f64,
    /// Largest `|(p_n − p_{n−1})/ε + V'(x_n)|` over interior nodes.
    pub force_residual: f64,
    /// Largest deviation from the continuum solution at the nodes.
    pub max_error: f64,
    pub action: f64,
}

impl ClassicalPathReport {
    pub fn residual(&self) -> f64 {
        self.velocity_residual.max(self.force_residual)
    }
}

/// `Σ_n ε [p_n (x_{n+1} − x_n)/ε − p_n²/2m − V(x_n)]`.
pub fn phase_space_action(params: &ParticleParams, xs: &[f64], ps: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ps)
        .map(|(w, &p)| p * (w[1] - w[0]) - params.eps * (p * p / (2.0 * params.mass) + params.potential_at(w[0])))
        .sum()
}

/// Phase-space action with the momenta eliminated:
/// `Σ_n ε [m/2 ((x_{n+1} − x_n)/ε)² − V(x_n)]`.
pub fn discrete_action(params: &ParticleParams, xs: &[f64]) -> f64 {
    xs.windows(2)
        .map(|w| {
            let v = (w[1] - w[0]) / params.eps;
            params.eps * (0.5 * params.mass * v * v - params.potential_at(w[0]))
        })
        .sum()
}

/// Solve the stationarity conditions of the discrete action for a free or
/// harmonic particle going from `x_start` to `x_end` in `total_time`, and
/// compare with the continuum path.
pub fn classical_path_check(
    params: &ParticleParams,
    x_start: f64,
    x_end: f64,
    total_time: f64,
) -> Result<ClassicalPathReport, QuantumError> {
    params.validate()?;
    let n = step_count(total_time, params.eps)?;
    if n < 2 {
        return Err(QuantumError::InvalidParameter {
            name: "steps",
            value: n as f64,
            reason: "need at least two steps",
        });
    }
    let omega = match params.potential {
        Potential::Free => 0.0,
        Potential::Harmonic(w) => w,
        Potential::Table(_) => {
            return Err(QuantumError::Unsupported(
                "classical path check needs a free or harmonic potential",
            ))
        }
    };
    let eps = params.eps;
    // x_{k−1} − (2 − ε²ω²) x_k + x_{k+1} = 0 for interior k, by Thomas
    let diag = -(2.0 - eps * eps * omega * omega);
    let interior = n - 1;
    let mut c_prime = vec![0.0; interior];
    let mut d_prime = vec![0.0; interior];
    for k in 0..interior {
        let mut rhs = 0.0;
        if k == 0 {
            rhs -= x_start;
        }
        if k == interior - 1 {
            rhs -= x_end;
        }
        let (prev_c, prev_d) = if k == 0 { (0.0, 0.0) } else { (c_prime[k - 1], d_prime[k - 1]) };
        let denom = diag - prev_c;
        c_prime[k] = 1.0 / denom;
        d_prime[k] = (rhs - prev_d) / denom;
    }
    let mut xs = vec![0.0; n + 1];
    xs[0] = x_start;
    xs[n] = x_end;
    for k in (0..interior).rev() {
        let next = if k + 1 == interior { 0.0 } else { xs[k + 2] };
        xs[k + 1] = d_prime[k] - c_prime[k] * next;
    }
    let ps: Vec<f64> = xs.windows(2).map(|w| params.mass * (w[1] - w[0]) / eps).collect();

    let velocity_residual = xs
        .windows(2)
        .zip(&ps)
        .map(|(w, p)| (w[1] - w[0] - eps * p / params.mass).abs())
        .fold(0.0, f64::max);
    let force_residual = (1..n)
        .map(|k| {
            let slope = params.potential.slope(params.mass, xs[k]).expect("closed form");
            ((ps[k] - ps[k - 1]) / eps + slope).abs()
        })
        .fold(0.0, f64::max);
    let exact = |t: f64| {
        if omega == 0.0 {
            x_start + (x_end - x_start) * t / total_time
        } else {
            (x_start * (omega * (total_time - t)).sin() + x_end * (omega * t).sin())
                / (omega * total_time).sin()
        }
    };
    let max_error = xs
        .iter()
        .enumerate()
        .map(|(k, x)| (x - exact(k as f64 * eps)).abs())
        .fold(0.0, f64::max);
    let action = phase_space_action(params, &xs, &ps);
    Ok(ClassicalPathReport {
        xs,
        ps,
        velocity_residual,
        force_residual,
        max_error,
        action,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_path_is_a_straight_line() {
        let params = ParticleParams::new(2.0, 1.0, 0.01).unwrap();
        let r = classical_path_check(&params, -1.0, 3.0, 1.0).unwrap();
        assert!(r.residual() <= 1e-8);
        assert!(r.max_error < 1e-12);
        for w in r.ps.windows(2) {
            assert!((w[1] - w[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_path_converges_at_second_order() {
        let base = ParticleParams::new(1.0, 1.0, 0.01)
            .unwrap()
            .with_potential(Potential::Harmonic(1.0));
        let errors: Vec<f64> = [0.01, 0.005, 0.0025]
            .iter()
            .map(|&e| {
                let r = classical_path_check(&base.clone().with_eps(e), 1.0, 0.2, 1.0).unwrap();
                assert!(r.residual() <= 1e-8, "{}", r.residual());
                r.max_error
            })
            .collect();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        }
    }

    #[test]
    fn action_is_stationary() {
        let params = ParticleParams::new(1.0, 1.0, 0.02)
            .unwrap()
            .with_potential(Potential::Harmonic(1.3));
        let r = classical_path_check(&params, 0.5, -0.4, 1.0).unwrap();
        let base = discrete_action(&params, &r.xs);
        assert!((base - r.action).abs() < 1e-12);
        let bump: Vec<f64> = (0..r.xs.len())
            .map(|k| {
                let s = k as f64 / (r.xs.len() - 1) as f64;
                (std::f64::consts::PI * s).sin()
            })
            .collect();
        let delta = |h: f64| {
            let xs: Vec<f64> = r.xs.iter().zip(&bump).map(|(x, b)| x + h * b).collect();
            discrete_action(&params, &xs) - base
        };
        let (d1, d2) = (delta(1e-3), delta(2e-3));
        assert!((d2 / d1 - 4.0).abs() < 1e-6, "{}", d2 / d1);
        assert!((delta(-1e-3) - d1).abs() < 1e-12);
    }

    #[test]
    fn table_potential_is_rejected() {
        let params = ParticleParams::new(1.0, 1.0, 0.1)
            .unwrap()
            .with_potential(Potential::table(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap());
        assert!(classical_path_check(&params, 0.0, 1.0, 1.0).is_err());
    }
}
