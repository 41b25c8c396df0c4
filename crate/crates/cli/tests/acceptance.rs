//! Acceptance suite: one line per criterion with its verdict and runtime.
//! Exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use qal_cli::run_with;
use qal_core::channel::{
    effective_distribution, symmetric_coupling, BareDistribution, QRuleParams, ReadingChannel,
};
use qal_core::markov::{builtin_games, effective_kernel, propagate_distribution, simulate_game};
use qal_core::paths::{build_constraints, census, identity_check, solve_phases, xi_sum, PathError, SolverOptions};
use qal_core::quantum::{
    apodization_study, build_kernel, convergence_study, propagate, uncertainty_product, Apodization, Boundary,
    ParticleParams, Potential, ReferenceOptions, WaveGrid, WaveState,
};
use qal_core::rng::{substream, StreamRng};
use qal_core::stats::{binomial_sigma, chi_square};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn probabilities(rng: &mut StreamRng, m: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Loss rates and misreads whose columns each use at most the budget 1.
fn channel(rng: &mut StreamRng, m: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let gamma: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..0.5)).collect();
    let mut rows = vec![vec![0.0; m]; m];
    for l in 0..m {
        let budget = (1.0 - gamma[l]) / m as f64;
        for (j, row) in rows.iter_mut().enumerate() {
            if j != l {
                row[l] = rng.random_range(0.0..budget);
            }
        }
    }
    (gamma, rows)
}

fn loss_defect(p: &[f64], gamma: &[f64]) -> f64 {
    p.iter().zip(gamma).map(|(p, g)| p * g).sum()
}

fn defect_identity() -> Check {
    let mut rng = substream(101, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(2..=6);
        let p = probabilities(&mut rng, m);
        let (gamma, rows) = channel(&mut rng, m);
        let expect = 1.0 - loss_defect(&p, &gamma);
        let bare = BareDistribution::indexed(p).map_err(|e| e.to_string())?;
        let q = QRuleParams::new(gamma, rows).map_err(|e| e.to_string())?;
        let eff = effective_distribution(&bare, &q).map_err(|e| e.to_string())?;
        let total: f64 = eff.probs().iter().sum();
        worst = worst.max((total - expect).abs());
    }
    ensure(worst <= 1e-12, format!("max |sum p - (1 - sum gamma P)| = {worst:e}"))?;
    Ok(format!("100 instances, max deviation {worst:.1e}"))
}

fn channel_equivalence() -> Check {
    let mut rng = substream(102, 0);
    let draws = 1_000_000;
    let mut min_p: f64 = 1.0;
    for i in 0..10 {
        let m = rng.random_range(2..=6);
        let bare = BareDistribution::indexed(probabilities(&mut rng, m)).map_err(|e| e.to_string())?;
        let (gamma, rows) = channel(&mut rng, m);
        let q = QRuleParams::new(gamma, rows).map_err(|e| e.to_string())?;
        let eff = effective_distribution(&bare, &q).map_err(|e| e.to_string())?;
        let tally = ReadingChannel::new(&bare, &q).map_err(|e| e.to_string())?.tally(draws, 500 + i);
        let mut probs = eff.probs().to_vec();
        probs.push(eff.defect());
        let test = chi_square(&tally.categories(), &probs);
        min_p = min_p.min(test.p_value);
    }
    ensure(min_p >= 0.01, format!("smallest chi-square p-value {min_p:.4} < 0.01"))?;
    Ok(format!("10 instances x 1e6 draws, smallest p-value {min_p:.3}"))
}

/// Coefficients of `(a + b·x)^n`.
fn binomial_poly(a: u128, b: u128, n: usize) -> Vec<u128> {
    let mut c = vec![1u128];
    for _ in 0..n {
        let mut next = vec![0u128; c.len() + 1];
        for (l, v) in c.iter().enumerate() {
            next[l] += v * a;
            next[l + 1] += v * b;
        }
        c = next;
    }
    c
}

fn census_exactness() -> Check {
    for m in 1..=6usize {
        for n in 1..=8usize {
            let r = census(m, n).map_err(|e| e.to_string())?;
            let mm = m as u128;
            let raw = binomial_poly(mm, mm * mm - mm, n);
            let reduced = binomial_poly(mm, (mm * mm - mm) / 2, n);
            let got_raw: Vec<String> = r.per_l_raw.iter().map(|v| v.to_string()).collect();
            let got_reduced: Vec<String> = r.per_l_reduced.iter().map(|v| v.to_string()).collect();
            let want_raw: Vec<String> = raw.iter().map(|v| v.to_string()).collect();
            let want_reduced: Vec<String> = reduced.iter().map(|v| v.to_string()).collect();
            ensure(got_raw == want_raw, format!("raw counts differ at M={m}, N={n}"))?;
            ensure(got_reduced == want_reduced, format!("reduced counts differ at M={m}, N={n}"))?;
            ensure(
                r.raw_total.to_string() == (mm * mm).pow(n as u32).to_string(),
                format!("raw total at M={m}, N={n}"),
            )?;
            ensure(
                r.reduced_total.to_string() == reduced.iter().sum::<u128>().to_string(),
                format!("reduced total at M={m}, N={n}"),
            )?;
        }
    }
    let spot = census(2, 2).map_err(|e| e.to_string())?.reduced_total.to_string();
    ensure(spot == "9", format!("M=2, N=2 reduced total {spot}"))?;
    Ok("M <= 6, N <= 8 exact; M=2, N=2 reduced total 9".into())
}

fn enumeration_oracle() -> Check {
    let mut rng = substream(104, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(2..=3);
        let n = rng.random_range(1..=5);
        let p = probabilities(&mut rng, m);
        let gamma: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..0.5)).collect();
        let expect = (1.0 - loss_defect(&p, &gamma)).powi(n as i32);
        let bare = BareDistribution::indexed(p).map_err(|e| e.to_string())?;
        let d = symmetric_coupling(&bare, &gamma).map_err(|e| e.to_string())?;
        let xi = xi_sum(&bare, &d, n).map_err(|e| e.to_string())?;
        worst = worst.max((xi - expect).abs());
    }
    ensure(worst <= 1e-10, format!("max deviation {worst:e}"))?;
    Ok(format!("100 instances, max deviation {worst:.1e}"))
}

fn exact_identity() -> Check {
    let mut rng = substream(105, 0);
    let opts = SolverOptions::default();
    let (mut feasible, mut infeasible) = (0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let p0 = rng.random_range(0.02..0.98);
        let gamma = vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let bare = BareDistribution::indexed(vec![p0, 1.0 - p0]).map_err(|e| e.to_string())?;
        let d = symmetric_coupling(&bare, &gamma).map_err(|e| e.to_string())?.get(0, 1);
        let r = identity_check(&bare, &gamma, 1, &opts).map_err(|e| e.to_string())?;
        if d.abs() <= 1.0 {
            feasible += 1;
            let gap = r.gap.ok_or("feasible system without a gap")?;
            worst = worst.max(gap);
            ensure(r.feasible && gap <= 1e-10, format!("d = {d}: gap {gap:e}"))?;
        } else {
            infeasible += 1;
            ensure(!r.feasible, format!("d = {d} not reported infeasible"))?;
            let set = build_constraints(&bare, &symmetric_coupling(&bare, &gamma).unwrap(), 1).unwrap();
            ensure(
                matches!(solve_phases(&set, &opts), Err(PathError::Infeasible { .. })),
                format!("solver accepted d = {d}"),
            )?;
        }
    }
    ensure(feasible > 0 && infeasible > 0, "sampled couplings did not cover both regimes")?;
    Ok(format!("{feasible} feasible (max gap {worst:.1e}), {infeasible} reported infeasible"))
}

fn solver_identity() -> Check {
    let mut rng = substream(106, 0);
    let opts = SolverOptions::default();
    let mut worst_res: f64 = 0.0;
    for _ in 0..20 {
        let p0 = rng.random_range(0.05..0.95);
        let g = rng.random_range(0.0..=0.05);
        let bare = BareDistribution::indexed(vec![p0, 1.0 - p0]).map_err(|e| e.to_string())?;
        let r = identity_check(&bare, &[g, g], 2, &opts).map_err(|e| e.to_string())?;
        let res = r.max_residual.ok_or("no residual reported")?;
        worst_res = worst_res.max(res);
        ensure(res <= 1e-6, format!("P0 = {p0}, gamma = {g}: residual {res:e}"))?;
        let (gap, bound) = (r.gap.unwrap(), r.bound().unwrap());
        ensure(gap <= bound, format!("P0 = {p0}, gamma = {g}: gap {gap:e} > bound {bound:e}"))?;
    }
    Ok(format!("20 instances, max residual {worst_res:.1e}, all gaps within bound"))
}

fn markov_agreement() -> Check {
    let game = builtin_games().into_iter().find(|g| g.name == "random-walk").ok_or("no random walk")?;
    let (n, trials) = (10, 100_000);
    let kernel = effective_kernel(&game.spec, &game.grid).map_err(|e| e.to_string())?;
    let mut e0 = vec![0.0; game.grid.len()];
    e0[game.grid.locate(game.x0).ok_or("start off grid")?] = 1.0;
    let expect = propagate_distribution(&e0, &kernel, n).map_err(|e| e.to_string())?;
    let run = simulate_game(&game.spec, game.x0, n, trials, 7).map_err(|e| e.to_string())?;
    let counts = run.grid_counts(&game.grid).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (k, (&c, &p)) in counts.iter().zip(&expect).enumerate() {
        let f = c as f64 / trials as f64;
        let sigma = binomial_sigma(p, trials as u64);
        let z = if sigma > 0.0 { (f - p).abs() / sigma } else if f == 0.0 { 0.0 } else { f64::INFINITY };
        worst = worst.max(z);
        ensure(z <= 3.0, format!("node {}: frequency {f} vs {p} ({z:.2} sigma)", game.grid.node(k)))?;
    }
    let defect = loss_defect(game.spec.bare.probs(), game.spec.q.loss_rates());
    let mean = n as f64 * defect;
    let sigma = (n as f64 * defect * (1.0 - defect) / trials as f64).sqrt();
    let z = (run.mean_frozen() - mean).abs() / sigma;
    ensure(z <= 3.0, format!("frozen rounds {} vs {mean} ({z:.2} sigma)", run.mean_frozen()))?;
    Ok(format!("worst node {worst:.2} sigma, frozen rounds {z:.2} sigma"))
}

fn harmonic(eps: f64) -> ParticleParams {
    ParticleParams::new(1.0, 1.0, eps).unwrap().with_potential(Potential::Harmonic(1.0))
}

fn quantum_convergence() -> Check {
    let grid = WaveGrid::symmetric(20.0, 0.05).map_err(|e| e.to_string())?;
    let params = ParticleParams::new(1.0, 1.0, 1e-3).map_err(|e| e.to_string())?;
    let psi0 = WaveState::gaussian(grid, 0.0, 1.0, 0.0, 1.0).map_err(|e| e.to_string())?;
    let kernel = build_kernel(&params, &grid).map_err(|e| e.to_string())?;
    let run = propagate(&psi0, &kernel, 1000, Boundary::AbsorbingPad { width: 2.0 }, None).map_err(|e| e.to_string())?;
    let width = run.state.width();
    // σ(t) = σ0·√(1 + (αt/(2mσ0²))²)
    let expect = (1.0f64 + 0.25).sqrt();
    ensure((width - expect).abs() <= 1e-3, format!("width {width} vs {expect}"))?;

    let grid = WaveGrid::symmetric(10.0, 0.05).map_err(|e| e.to_string())?;
    let psi0 = WaveState::gaussian(grid, 1.0, 0.5f64.sqrt(), 0.0, 1.0).map_err(|e| e.to_string())?;
    let study = convergence_study(
        &harmonic(1e-3),
        &psi0,
        1.0,
        &[4e-3, 2e-3, 1e-3],
        &ReferenceOptions::default(),
        Boundary::Periodic,
    )
    .map_err(|e| e.to_string())?;
    ensure(study.order >= 0.9, format!("fitted order {}", study.order))?;
    Ok(format!("width error {:.1e}, fitted order {:.3}", (width - expect).abs(), study.order))
}

fn random_state(rng: &mut StreamRng, grid: WaveGrid) -> WaveState {
    let parts: Vec<(f64, f64, f64, Complex64)> = (0..rng.random_range(1..=4))
        .map(|_| {
            (
                rng.random_range(-5.0..5.0),
                rng.random_range(0.3..2.0),
                rng.random_range(-3.0..3.0),
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        })
        .collect();
    WaveState::from_fn(grid, |x| {
        parts
            .iter()
            .map(|&(c, w, k, a)| a * Complex64::from_polar((-(x - c) * (x - c) / (4.0 * w * w)).exp(), k * x))
            .sum()
    })
}

fn uncertainty_floor() -> Check {
    let grid = WaveGrid::symmetric(20.0, 0.05).map_err(|e| e.to_string())?;
    let mut rng = substream(109, 0);
    let mut min_excess = f64::INFINITY;
    for _ in 0..100 {
        let alpha = rng.random_range(0.5..2.0);
        let psi = random_state(&mut rng, grid);
        let u = uncertainty_product(&psi, alpha).map_err(|e| e.to_string())?;
        min_excess = min_excess.min(u - alpha / 2.0);
        ensure(u >= alpha / 2.0 - 1e-6, format!("product {u} below {}", alpha / 2.0))?;
    }
    let mut worst_gauss: f64 = 0.0;
    for (x0, sigma, p0, alpha) in [(0.0, 1.0, 0.0, 1.0), (1.5, 0.7, 1.0, 1.0), (-2.0, 1.3, -0.5, 0.6), (0.5, 0.9, 2.0, 1.7)] {
        let psi = WaveState::gaussian(grid, x0, sigma, p0, alpha).map_err(|e| e.to_string())?;
        let u = uncertainty_product(&psi, alpha).map_err(|e| e.to_string())?;
        worst_gauss = worst_gauss.max((u - alpha / 2.0).abs());
    }
    ensure(worst_gauss <= 1e-6, format!("gaussian product off the floor by {worst_gauss:e}"))?;
    Ok(format!("100 random states above the floor, gaussians within {worst_gauss:.1e}"))
}

fn apodization_limit() -> Check {
    let grid = WaveGrid::symmetric(10.0, 0.05).map_err(|e| e.to_string())?;
    let psi0 = WaveState::gaussian(grid, 1.0, 0.7, 0.5, 1.0).map_err(|e| e.to_string())?;
    let params = harmonic(1e-3).with_apodization(Apodization::Gaussian(0.1));
    let study = apodization_study(&params, &psi0, 1.0, &[4e-3, 2e-3, 1e-3], Boundary::Periodic)
        .map_err(|e| e.to_string())?;
    let errs: Vec<String> = study.points.iter().map(|p| format!("{:.2e}", p.l2_error)).collect();
    ensure(study.is_decreasing(), format!("distances not decreasing: {}", errs.join(", ")))?;
    Ok(format!("distances {}", errs.join(" > ")))
}

fn cli_bytes(args: &[&str], workers: &str) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("qal").chain(args.iter().copied()).chain(["--workers", workers]);
    match run_with(argv, None, &mut out, &mut err) {
        // a report failure still writes a complete record
        0 | 2 => Ok(out),
        code => Err(format!("{} exited {code}: {}", args[0], String::from_utf8_lossy(&err))),
    }
}

fn reproducibility() -> Check {
    let runs: [&[&str]; 6] = [
        &["histogram", "--p", "0.2,0.3,0.5", "--gamma", "0.1,0,0.2", "--draws", "300000", "--seed", "3"],
        &["simulate-game", "--game", "skewed-walk", "--steps", "12", "--trials", "50000", "--seed", "3"],
        &["identity-check", "--p", "0.3,0.7", "--gamma", "0.05,0.05", "--n", "3", "--seed", "3"],
        &["phase-solve", "--p", "0.2,0.3,0.5", "--gamma", "0.1,0.1,0.1", "--n", "2", "--seed", "3"],
        &["uncertainty", "--state", "random", "--count", "20", "--seed", "3"],
        &["roughness", "--samples", "20000", "--seed", "3"],
    ];
    for args in runs {
        let reference = cli_bytes(args, "1")?;
        for workers in ["2", "4", "8"] {
            ensure(
                cli_bytes(args, workers)? == reference,
                format!("{} differs between 1 and {workers} workers", args[0]),
            )?;
        }
    }
    Ok("6 commands byte-identical at 1, 2, 4 and 8 workers".into())
}

struct Criterion {
    name: &'static str,
    limit: Duration,
    check: fn() -> Check,
}

fn main() {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { name: "defect identity", limit: secs(1), check: defect_identity },
        Criterion { name: "generative channel equivalence", limit: secs(30), check: channel_equivalence },
        Criterion { name: "census exactness", limit: secs(1), check: census_exactness },
        Criterion { name: "enumeration oracle", limit: secs(10), check: enumeration_oracle },
        Criterion { name: "central identity, exact case", limit: secs(1), check: exact_identity },
        Criterion { name: "central identity, solver regime", limit: secs(10), check: solver_identity },
        Criterion { name: "markov agreement", limit: secs(30), check: markov_agreement },
        Criterion { name: "quantum convergence", limit: secs(120), check: quantum_convergence },
        Criterion { name: "uncertainty floor", limit: secs(10), check: uncertainty_floor },
        Criterion { name: "apodization limit", limit: secs(120), check: apodization_limit },
        Criterion { name: "reproducibility", limit: secs(10), check: reproducibility },
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = (c.check)();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > c.limit => Err(format!("{detail}; over the {:?} limit", c.limit)),
            other => other,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if result.is_err() {
            failed += 1;
        }
        println!("[{tag}] {:>2}. {} ({:.2} s): {detail}", i + 1, c.name, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
