//! Subcommands: their configuration keys and the module operation each one
//! runs.

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use qal_core::channel::{
    effective_distribution, symmetrizing_misreads, BareDistribution, ChannelError, QRuleParams,
    ReadingChannel,
};
use qal_core::markov::{
    builtin_games, effective_kernel, propagate_distribution, simulate_game, Boundary as GridBoundary,
    GameSpec, MapSpec, MarkovError, StateGrid,
};
use qal_core::paths::{
    build_constraints, census, identity_check, PathError, SolverOptions,
};
use qal_core::quantum::{
    apodization_study, build_kernel, convergence_study, propagate, roughness_scan, step_count,
    uncertainty_product, Apodization, Boundary as WaveBoundary, FdOrder, ParticleParams, Potential,
    QuantumError, ReferenceOptions, RoughnessSource, WaveGrid, WaveState,
};
use qal_core::rng::substream;
use qal_core::stats::chi_square;

use crate::config::{ConfigError, ExperimentConfig, KeyKind, KeySpec};
use crate::output::{num, opt, Table};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

pub struct Command {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [KeySpec],
    pub run: fn(&ExperimentConfig) -> Result<Table, CommandError>,
}

const fn key(name: &'static str, kind: KeyKind, default: Option<&'static str>, help: &'static str) -> KeySpec {
    KeySpec {
        name,
        kind,
        default,
        help,
    }
}

use KeyKind::{Choice, Real, RealList, Text, UInt};

const YES_NO: &[&str] = &["no", "yes"];
const GAMES: &[&str] = &["random-walk", "skewed-walk", "doubling", "custom"];

const P: KeySpec = key("p", RealList, None, "bare probabilities P_j");
const LABELS: KeySpec = key("labels", RealList, None, "outcome labels y_j (default 0..M-1)");
const GAMMA: KeySpec = key("gamma", RealList, None, "loss rates gamma_j (default all 0)");
const MISREADS: KeySpec = key(
    "misreads",
    RealList,
    None,
    "misread matrix, M*M entries row by row, entry (j,l) = chance a realization of l is read as j",
);
const SYMMETRIZE: KeySpec = key(
    "symmetrize",
    Choice(YES_NO),
    Some("no"),
    "use the misreads that make the coupling symmetric",
);
const M_KEY: KeySpec = key("m", UInt, None, "number of outcomes (checked against p)");
const N_KEY: KeySpec = key("n", UInt, Some("1"), "number of rounds");
const MAX_ITER: KeySpec = key("max-iter", UInt, Some("200"), "solver iterations per restart");
const TOL: KeySpec = key("tol", Real, Some("1e-12"), "solver tolerance on the residual cost");
const RESTARTS: KeySpec = key("restarts", UInt, Some("8"), "solver restarts");

const GAME: KeySpec = key("game", Choice(GAMES), Some("random-walk"), "built-in game or custom");
const DRIFT: KeySpec = key("drift", Text, None, "custom drift map F (default identity)");
const GAIN: KeySpec = key("gain", Text, None, "custom gain map g (default constant(1))");
const X0: KeySpec = key("x0", Real, None, "start state (default: the game's)");
const STEPS: KeySpec = key("steps", UInt, Some("10"), "number of rounds");

const MASS: KeySpec = key("mass", Real, Some("1"), "particle mass m");
const ALPHA: KeySpec = key("alpha", Real, Some("1"), "action scale alpha");
const E0: KeySpec = key("e0", Real, Some("0"), "energy offset E0");
const HALF_WIDTH: KeySpec = key("half-width", Real, Some("20"), "grid covers [-L, L)");
const DX: KeySpec = key("dx", Real, Some("0.05"), "grid spacing");
const SIGMA: KeySpec = key("sigma", Real, Some("1"), "initial position spread");
const P0: KeySpec = key("p0", Real, Some("0"), "initial mean momentum");
const TIME: KeySpec = key("time", Real, Some("1"), "total time");

const CHANNEL_KEYS: [KeySpec; 5] = [P, LABELS, GAMMA, MISREADS, SYMMETRIZE];

pub const COMMANDS: &[Command] = &[
    Command {
        name: "histogram",
        about: "Effective histogram read through the Q-rule channel",
        keys: &[
            P,
            LABELS,
            GAMMA,
            MISREADS,
            SYMMETRIZE,
            key("draws", UInt, Some("0"), "sampled readings to compare (0 = none)"),
        ],
        run: histogram,
    },
    Command {
        name: "census",
        about: "Exact term counts of the path expansion",
        keys: &[
            key("m", UInt, None, "number of outcomes"),
            key("n", UInt, None, "number of rounds"),
        ],
        run: census_cmd,
    },
    Command {
        name: "identity-check",
        about: "Compare the expanded sum with the squared phased amplitude sum",
        keys: &[M_KEY, N_KEY, P, GAMMA, MAX_ITER, TOL, RESTARTS],
        run: identity_cmd,
    },
    Command {
        name: "phase-solve",
        about: "Solve the segment phases of the pairwise path system",
        keys: &[M_KEY, N_KEY, P, GAMMA, MAX_ITER, TOL, RESTARTS],
        run: phase_solve,
    },
    Command {
        name: "simulate-game",
        about: "Monte Carlo of a stochastic game read through the channel",
        keys: &[
            GAME,
            DRIFT,
            GAIN,
            P,
            LABELS,
            GAMMA,
            MISREADS,
            SYMMETRIZE,
            X0,
            STEPS,
            key("trials", UInt, Some("100000"), "independent games"),
        ],
        run: simulate_cmd,
    },
    Command {
        name: "propagate-game",
        about: "Distribution of a game's state by kernel propagation",
        keys: &[
            GAME,
            DRIFT,
            GAIN,
            P,
            LABELS,
            GAMMA,
            MISREADS,
            SYMMETRIZE,
            X0,
            STEPS,
            key("x-min", Real, None, "first grid node (default: the game's grid)"),
            key("x-max", Real, None, "last grid node"),
            key("grid-dx", Real, None, "grid spacing"),
            key("boundary", Choice(&["strict", "periodic"]), None, "grid boundary (default periodic)"),
        ],
        run: propagate_game,
    },
    Command {
        name: "quantum-propagate",
        about: "Propagate a Gaussian wave packet with the lattice transfer kernel",
        keys: &[
            MASS,
            ALPHA,
            key("eps", Real, Some("0.001"), "time step"),
            E0,
            key("potential", Text, Some("free"), "free, harmonic(w) or table(x:v;...)"),
            key("apodization", Text, Some("none"), "none, gaussian(s) or window(w)"),
            HALF_WIDTH,
            DX,
            key("x0", Real, Some("0"), "initial mean position"),
            SIGMA,
            P0,
            TIME,
            key("boundary", Choice(&["periodic", "absorbing"]), Some("absorbing"), "grid edge treatment"),
            key("pad", Real, Some("2"), "absorbing pad width"),
            key("snapshot-every", UInt, Some("0"), "steps between snapshots (0 = final state only)"),
        ],
        run: quantum_propagate,
    },
    Command {
        name: "quantum-compare",
        about: "Kernel propagation error against a reference, over a ladder of time steps",
        keys: &[
            key(
                "mode",
                Choice(&["reference", "apodization"]),
                Some("reference"),
                "compare with the Crank-Nicolson solution or with unapodized propagation",
            ),
            MASS,
            ALPHA,
            E0,
            key("potential", Text, Some("harmonic(1)"), "free, harmonic(w) or table(x:v;...)"),
            key("apodization", Text, Some("gaussian(0.1)"), "apodization used in apodization mode"),
            key("half-width", Real, Some("10"), "grid covers [-L, L)"),
            DX,
            key("x0", Real, Some("1"), "initial mean position"),
            key("sigma", Real, Some("0.7071067811865476"), "initial position spread"),
            P0,
            TIME,
            key("eps-list", RealList, Some("0.004,0.002,0.001"), "time steps"),
            key("ref-dt", Real, Some("0.0001"), "reference solver time step"),
            key("fd-order", Choice(&["2", "4"]), Some("4"), "reference finite-difference order"),
        ],
        run: quantum_compare,
    },
    Command {
        name: "uncertainty",
        about: "Position-momentum uncertainty product of sampled states",
        keys: &[
            ALPHA,
            HALF_WIDTH,
            DX,
            key("state", Choice(&["gaussian", "random"]), Some("gaussian"), "state family"),
            key("x0", Real, Some("0"), "gaussian mean position"),
            SIGMA,
            P0,
            key("components", UInt, Some("3"), "gaussian components per random state"),
            key("count", UInt, Some("100"), "random states"),
        ],
        run: uncertainty,
    },
    Command {
        name: "roughness",
        about: "Mean squared path increments against the time step",
        keys: &[
            MASS,
            ALPHA,
            key("eps-list", RealList, Some("0.002,0.001"), "time steps"),
            key("samples", UInt, Some("100000"), "increments per time step"),
            key("lattice", Real, None, "path lattice spacing (default: a twentieth of the narrowest kernel)"),
            key("offset", Real, Some("0"), "start point as a fraction of the lattice spacing"),
            key("source", Choice(&["kernel", "classical"]), Some("kernel"), "sampled paths"),
            key("potential", Text, Some("free"), "potential for classical paths"),
            key("x0", Real, Some("1"), "classical start position"),
            key("v0", Real, Some("0"), "classical start velocity"),
        ],
        run: roughness,
    },
];

pub fn find(name: &str) -> Option<&'static Command> {
    COMMANDS.iter().find(|c| c.name == name)
}

fn reals(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(",")
}

fn bare(cfg: &ExperimentConfig) -> Result<BareDistribution, CommandError> {
    let p = cfg.list("p")?;
    Ok(if cfg.has("labels") {
        BareDistribution::new(cfg.list("labels")?, p)?
    } else {
        BareDistribution::indexed(p)?
    })
}

fn gamma(cfg: &ExperimentConfig, m: usize) -> Result<Vec<f64>, CommandError> {
    Ok(if cfg.has("gamma") {
        cfg.list("gamma")?
    } else {
        vec![0.0; m]
    })
}

fn q_rules(cfg: &ExperimentConfig, bare: &BareDistribution) -> Result<QRuleParams, CommandError> {
    let m = bare.len();
    let gamma = gamma(cfg, m)?;
    let symmetrize = cfg.text("symmetrize")? == "yes";
    if symmetrize && cfg.has("misreads") {
        return Err(ConfigError::invalid("misreads", "cannot be combined with symmetrize = yes").into());
    }
    if symmetrize {
        return Ok(symmetrizing_misreads(bare, &gamma)?);
    }
    if !cfg.has("misreads") {
        return Ok(QRuleParams::losses_only(gamma)?);
    }
    let flat = cfg.list("misreads")?;
    if flat.len() != m * m {
        return Err(ConfigError::invalid(
            "misreads",
            format!("expected {} entries (M*M), got {}", m * m, flat.len()),
        )
        .into());
    }
    Ok(QRuleParams::new(gamma, flat.chunks(m).map(<[f64]>::to_vec).collect())?)
}

fn check_m(cfg: &ExperimentConfig, m: usize) -> Result<(), CommandError> {
    if cfg.has("m") && cfg.usize("m")? != m {
        return Err(ConfigError::invalid("m", format!("p has {m} entries")).into());
    }
    Ok(())
}

fn histogram(cfg: &ExperimentConfig) -> Result<Table, CommandError> {
    let bare = bare(cfg)?;
    let q = q_rules(cfg, &bare)?;
    let eff = effective_distribution(&bare, &q)?;
    let draws = cfg.uint("draws")?;
    let tally = (draws > 0)
        .then(|| ReadingChannel::new(&bare, &q).map(|c| c.tally(draws, cfg.seed)))
        .transpose()?;

    let mut t = Table::new(&["outcome", "label", "bare", "effective", "empirical"]);
    for j in 0..bare.len() {
        let empirical = tally.as_ref().map(|t| t.reads[j] as f64 / draws as f64);
        t.row(vec![
            j.to_string(),
            num(bare.label(j)),
            num(bare.prob(j)),
            num(eff.probs()[j]),
            opt(empirical),
        ]);
    }
    t.result("total", num(eff.total()));
    t.result("defect", num(eff.defect()));
    if let Some(tally) = tally {
        let mut probs = eff.probs().to_vec();
        probs.push(eff.defect());
        let test = chi_square(&tally.categories(), &probs);
        t.result("lost_fraction", num(tally.lost as f64 / draws as f64));
        t.result("chi_square", num(test.statistic));
        t.result("chi_square_dof", test.dof);
        t.result("chi_square_p", num(test.p_value));
    }
    Ok(t)
}

fn census_cmd(cfg: &ExperimentConfig) -> Result<Table, CommandError> {
    let report = census(cfg.usize("m")?, cfg.usize("n")?)?;
    let mut t = Table::new(&["l", "raw", "reduced"]);
    for (l, (raw, reduced)) in report.per_l_raw.iter().zip(&report.per_l_reduced).enumerate() {
        t.row(vec![l.to_string(), raw.to_string(), reduced.to_string()]);
    }
    t.result("raw_total", &report.raw_total);
    t.result("reduced_total", &report.reduced_total);
    t.result("independent_nonclassical", &report.independent_nonclassical);
    Ok(t)
}

fn solver_options(cfg: &ExperimentConfig) -> Result<SolverOptions, CommandError> {
    Ok(SolverOptions {
        max_iter: cfg.usize("max-iter")?,
        tol: cfg.real("tol")?,
        restarts: cfg.usize("restarts")?,
        seed: cfg.seed,
    })
}

fn identity_cmd(cfg: &ExperimentConfig) -> Result<Table, CommandError> {
    let bare = BareDistribution::indexed(cfg.list("p")?)?;
    check_m(cfg, bare.len())?;
    let gamma = gamma(cfg, bare.len())?;
    let n = cfg.usize("n")?;
    let r = identity_check(&bare, &gamma, n, &solver_options(cfg)?)?;

    let mut t = Table::new(&["m", "n", "xi", "amp_sq", "gap", "bound", "residual", "feasible", "converged"]);
    t.row(vec![
        r.m.to_string(),
        r.n.to_string(),
        num(r.xi),
        opt(r.amp_sq),
        opt(r.gap),
        opt(r.bound()),
        opt(r.max_residual),
        r.feasible.to_string(),
        r.converged.to_string(),
    ]);
    t.result("analytic_bound", opt(r.analytic_bound));
    t.result("rounding_allowance", num(r.rounding_allowance));
    t.result("coupling_max_abs", num(r.coupling_max_abs));
    t.failure = if !r.feasible {
        Some(format!(
            "phase system infeasible: |coupling| up to {} exceeds 1",
            num(r.coupling_max_abs)
        ))
    } else if !r.converged {
        Some("phase solver did not converge".into())
    } else if !r.gap_within_bound() {
        Some("identity gap exceeds the bound".into())
    } else {
        None
    };
    Ok(t)
}

fn phase_solve(cfg: &ExperimentConfig) -> Result<Table, CommandError> {
    let bare = BareDistribution::indexed(cfg.list("p")?)?;
    check_m(cfg, bare.len())?;
    let gamma = gamma(cfg, bare.len())?;
    let n = cfg.usize("n")?;
    let d = qal_core::channel::symmetric_coupling(&bare, &gamma)?;
    let set = build_constraints(&bare, &d, n)?;
    let mut t = Table::new(&["rank", "path", "phase"]);
    let (phases, report) = match qal_core::paths::solve_phases(&set, &solver_options(cfg)?) {
        Ok(solved) => solved,
        Err(PathError::Infeasible { i, j, target }) => {
            t.result("feasible", false);
            t.failure = Some(format!(
                "phase system infeasible: paths {i} and {j} need association {}",
                num(target)
            ));
            return Ok(t);
        }
        Err(e) => return Err(e.into()),
    };
    for (rank, path) in set.paths.iter().enumerate() {
        let name: Vec<String> = path.indices().iter().map(usize::to_string).collect();
        t.row(vec![rank.to_string(), name.join("-"), num(phases.phase(path))]);
    }
    t.result("feasible", true);
    t.result("converged", report.converged);
    t.result("max_residual", num(report.max_residual));
    t.result("cost", num(report.cost));
    t.result("iterations", report.iterations);
    t.result("restart", report.restart);
    if let Some(seg) = phases.segments() {
        t.result("segments", reals(seg));
    }
    if !report.converged {
        t.failure = Some("phase solver did not converge".into());
    }
    Ok(t)
}

struct Game {
    spec: GameSpec,
    grid: Option<StateGrid>,
    x0: f64,
}

fn game(cfg: &ExperimentConfig, t: &mut Table) -> Result<Game, CommandError> {
    let name = cfg.text("game")?;
    let g = if name == "custom" {
        let drift: MapSpec = if cfg.has("drift") { cfg.text("drift")?.parse()? } else { MapSpec::Identity };
        let gain: MapSpec = if cfg.has("gain") {
            cfg.text("gain")?.parse()?
        } else {
            MapSpec::Constant(1.0)
        };
        let bare = bare(cfg)?;
        let q = q_rules(cfg, &bare)?;
        Game {
            spec: GameSpec::new(drift, gain, bare, q)?,
            grid: None,
            x0: 0.0,
        }
    } else {
        for k in CHANNEL_KEYS.iter().map(|k| k.name).chain(["drift", "gain"]) {
            if k != "symmetrize" && cfg.has(k) {
                return Err(ConfigError::invalid(k, "only used with game = custom").into());
            }
        }
        let b = builtin_games()
            .into_iter()
            .find(|b| b.name == name)
            .expect("choice keys list the built-in games");
        Game {
            spec: b.spec,
            grid: Some(b.grid),
            x0: b.x0,
        }
    };
    let s = &g.spec;
    t.result("game_drift", &s.drift);
    t.result("game_gain", &s.gain);
    t.result("game_labels", reals(s.bare.labels()));
    t.result("game_p", reals(s.bare.probs()));
    t.result("game_gamma", reals(s.q.loss_rates()));
    let x0 = if cfg.has("x0") { cfg.real("x0")? } else { g.x0 };
    Ok(Game { x0, ..g })
}

fn simulate_cmd(cfg: &ExperimentConfig) -> Result<Table, CommandError> {
    let mut t = Table::new(&["x", "count", "frequency"]);
    let g = game(cfg, &mut t)?;
    let steps = cfg.usize("steps")?;
    let trials = cfg.usize("trials")?;
    let run = simulate_game(&g.spec, g.x0, steps, trials, cfg.seed)?;
    for (x, c) in run.histogram() {
        t.row(vec![num(x), c.to_string(), num(c as f64 / trials as f64)]);
    }
    let defect = g.spec.effective()?.defect();
    t.result("x0", num(g.x0));
    t.result("mean_frozen", num(run.mean_frozen()));
    t.result("expected_frozen", num(steps as f64 * defect));
    Ok(t)
}

fn propagate_game(cfg: &ExperimentConfig) -> Result<Table, CommandError> {
    let mut t = Table::new(&["x", "probability"]);
    let g = game(cfg, &mut t)?;
    let explicit = ["x-min", "x-max", "grid-dx"].map(|k| cfg.has(k));
    let grid = match (explicit, g.grid) {
        ([true, true, true], _) => StateGrid::spanning(cfg.real("x-min")?, cfg.real("x-max")?, cfg.real("grid-dx")?)?
            .with_boundary(GridBoundary::Periodic),
        ([false, false, false], Some(grid)) => grid,
        _ => {
            return Err(ConfigError::invalid(
                "x-min",
                "x-min, x-max and grid-dx must be given together (required for custom games)",
            )
            .into())
        }
    };
    let grid = match cfg.has("boundary").then(|| cfg.text("boundary")).transpose()? {
        Some("strict") => grid.with_boundary(GridBoundary::Strict),
        Some(_) => grid.with_boundary(GridBoundary::Periodic),
        None => grid,
    };
    let start = grid
        .locate(g.x0)
        .ok_or_else(|| ConfigError::invalid("x0", format!("{} is not a grid node", num(g.x0))))?;
    let kernel = effective_kernel(&g.spec, &grid)?;
    let mut e0 = vec![0.0; grid.len()];
    e0[start] = 1.0;
    let e = propagate_distribution(&e0, &kernel, cfg.usize("steps")?)?;
    for (k, p) in e.iter().enumerate() {
        t.row(vec![num(grid.node(k)), num(*p)]);
    }
    t.result("x0", num(g.x0));
    t.result("total", num(e.iter().sum()));
    Ok(t)
}

fn particle(cfg: &ExperimentConfig, eps: f64) -> Result<ParticleParams, CommandError> {
    let potential: Potential = cfg.text("potential")?.parse()?;
    let mut p = ParticleParams::new(cfg.real("mass")?, cfg.real("alpha")?, eps)?.with_potential(potential);
    if cfg.has("e0") {
        p = p.with_e0(cfg.real("e0")?);
    }
    if cfg.has("apodization") {
        let a: Apodization = cfg.text("apodization")?.parse()?;
        p = p.with_apodization(a);
    }
    Ok(p)
}

fn packet(cfg: &ExperimentConfig) -> Result<WaveState, CommandError> {
    let grid = WaveGrid::symmetric(cfg.real("half-width")?, cfg.real("dx")?)?;
    Ok(WaveState::gaussian(
        grid,
        cfg.real("x0")?,
        cfg.real("sigma")?,
        cfg.real("p0")?,
        cfg.real("alpha")?,
    )?)
}

fn quantum_propagate(cfg: &ExperimentConfig) -> Result<Table, CommandError> {
    let eps = cfg.real("eps")?;
    let params = particle(cfg, eps)?;
    let psi0 = packet(cfg)?;
    let time = cfg.real("time")?;
    let steps = step_count(time, eps)?;
    let boundary = match cfg.text("boundary")? {
        "absorbing" => WaveBoundary::AbsorbingPad { width: cfg.real("pad")? },
        _ => WaveBoundary::Periodic,
    };
    let every = cfg.usize("snapshot-every")?;
    let kernel = build_kernel(&params, &psi0.grid)?;
    let run = propagate(&psi0, &kernel, steps, boundary, Some(every))?;

    let mut t = Table::new(&["step", "t", "x", "re", "im", "abs2"]);
    let final_only = [(steps, run.state.clone())];
    let snaps: &[(usize, WaveState)] = if every == 0 { &final_only } else { &run.snapshots };
    for (step, s) in snaps {
        let time = *step as f64 * eps;
        for (k, v) in s.values.iter().enumerate() {
            t.row(vec![
                step.to_string(),
                num(time),
                num(s.grid.x(k)),
                num(v.re),
                num(v.im),
                num(v.norm_sqr()),
            ]);
        }
    }
    t.result("steps", steps);
    t.result("norm_before_renormalization", num(run.norm));
    t.result("mean_x", num(run.state.mean_position()));
    t.result("width", num(run.state.width()));
    t.result("tau", num(params.tau()));
    t.result("energy_scale", num(params.energy_scale()));
    if params.potential == Potential::Free {
        let (m, a, s) = (params.mass, params.alpha, cfg.real("sigma")?);
        let spread = a * time / (2.0 * m * s * s);
        t.result("free_width", num(s * (1.0 + spread * spread).sqrt()));
    }
    Ok(t)
}

fn quantum_compare(cfg: &ExperimentConfig) -> Result<Table, CommandError> {
    let ladder = cfg.list("eps-list")?;
    let first = *ladder
        .first()
        .ok_or_else(|| ConfigError::invalid("eps-list", "needs at least one time step"))?;
    let psi0 = packet(cfg)?;
    let time = cfg.real("time")?;
    let boundary = WaveBoundary::Periodic;
    let apodized = cfg.text("mode")? == "apodization";
    let mut params = particle(cfg, first)?;
    let report = if apodized {
        apodization_study(&params, &psi0, time, &ladder, boundary)?
    } else {
        params = params.with_apodization(Apodization::None);
        let opts = ReferenceOptions {
            dt: cfg.real("ref-dt")?,
            order: match cfg.text("fd-order")? {
                "2" => FdOrder::Second,
                _ => FdOrder::Fourth,
            },
        };
        convergence_study(&params, &psi0, time, &ladder, &opts, boundary)?
    };
    let mut t = Table::new(&["eps", "steps", "l2_error"]);
    for p in &report.points {
        t.row(vec![num(p.eps), p.steps.to_string(), num(p.l2_error)]);
    }
    t.result("order", num(report.order));
    t.result("decreasing", report.is_decreasing());
    Ok(t)
}

/// Normalized superposition of `components` Gaussians with random centers,
/// widths, momenta and complex weights, drawn from stream `index`.
fn random_state(grid: WaveGrid, components: usize, seed: u64, index: u64) -> Result<WaveState, QuantumError> {
    let mut rng = substream(seed, index);
    let half = grid.length() / 8.0;
    let parts: Vec<(f64, f64, f64, Complex64)> = (0..components)
        .map(|_| {
            (
                rng.random_range(-half..half),
                rng.random_range(0.3..2.0),
                rng.random_range(-3.0..3.0),
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        })
        .collect();
    let mut s = WaveState::from_fn(grid, |x| {
        parts
            .iter()
            .map(|&(c, w, k, a)| a * Complex64::from_polar((-(x - c) * (x - c) / (4.0 * w * w)).exp(), k * x))
            .sum()
    });
    s.normalize()?;
    Ok(s)
}

fn uncertainty(cfg: &ExperimentConfig) -> Result<Table, CommandError> {
    let alpha = cfg.real("alpha")?;
    let grid = WaveGrid::symmetric(cfg.real("half-width")?, cfg.real("dx")?)?;
    let states: Vec<WaveState> = if cfg.text("state")? == "gaussian" {
        vec![WaveState::gaussian(grid, cfg.real("x0")?, cfg.real("sigma")?, cfg.real("p0")?, alpha)?]
    } else {
        let components = cfg.usize("components")?.max(1);
        (0..cfg.uint("count")?)
            .map(|i| random_state(grid, components, cfg.seed, i))
            .collect::<Result<_, _>>()?
    };
    let mut t = Table::new(&["index", "dx", "dp", "product"]);
    let mut min = f64::INFINITY;
    for (i, s) in states.iter().enumerate() {
        let dx = s.width();
        let dp = qal_core::quantum::momentum_transform(s, alpha)?.width();
        let product = uncertainty_product(s, alpha)?;
        min = min.min(product);
        t.row(vec![i.to_string(), num(dx), num(dp), num(product)]);
    }
    t.result("bound", num(alpha / 2.0));
    t.result("min_product", num(min));
    Ok(t)
}

fn roughness(cfg: &ExperimentConfig) -> Result<Table, CommandError> {
    let eps = cfg.list("eps-list")?;
    let params = particle(cfg, *eps.first().unwrap_or(&1e-3))?;
    let source = match cfg.text("source")? {
        "classical" => RoughnessSource::Classical {
            x0: cfg.real("x0")?,
            v0: cfg.real("v0")?,
        },
        _ => RoughnessSource::Kernel,
    };
    let lattice = cfg.has("lattice").then(|| cfg.real("lattice")).transpose()?;
    let points = roughness_scan(
        &params,
        &eps,
        cfg.usize("samples")?,
        lattice,
        cfg.real("offset")?,
        cfg.seed,
        source,
    )?;
    let mut t = Table::new(&["eps", "mean_sq", "std_err", "statistic", "samples"]);
    for p in &points {
        t.row(vec![
            num(p.eps),
            num(p.mean_sq),
            num(p.std_err),
            num(p.statistic),
            p.samples.to_string(),
        ]);
    }
    for w in points.windows(2) {
        t.result(
            &format!("ratio_{}_{}", num(w[0].eps), num(w[1].eps)),
            num(w[0].mean_sq / w[1].mean_sq),
        );
    }
    Ok(t)
}
