use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

use crate::channel::{
    effective_distribution, BareDistribution, ChannelError, EffectiveDistribution, QRuleParams,
    ReadingChannel, ReadingOutcome,
};
use crate::rng::substream;

use super::{Boundary, MarkovError, StateGrid};

/// Named real maps used for the drift `F` and gain `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Identity,
    Constant(f64),
    /// `a·x`
    Linear(f64),
    /// `a·x² + b·x`
    Quadratic(f64, f64),
    /// Piecewise-linear through `(x, y)` knots, constant beyond the ends.
    Table(Vec<(f64, f64)>),
}

impl MapSpec {
    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self, MarkovError> {
        if knots.len() < 2 {
            return Err(MarkovError::InvalidMap("a table needs at least two knots".into()));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(MarkovError::InvalidMap("table knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(MarkovError::InvalidMap(
                "table abscissae must be strictly increasing".into(),
            ));
        }
        Ok(Self::Table(knots))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::Constant(c) => *c,
            Self::Linear(a) => a * x,
            Self::Quadratic(a, b) => a * x * x + b * x,
            Self::Table(knots) => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                let k = knots.partition_point(|(kx, _)| *kx <= x);
                let (x0, y0) = knots[k - 1];
                let (x1, y1) = knots[k];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Constant(c) | Self::Linear(c) => *c == 0.0,
            Self::Quadratic(a, b) => *a == 0.0 && *b == 0.0,
            Self::Table(knots) => knots.iter().all(|(_, y)| *y == 0.0),
            Self::Identity => false,
        }
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::Constant(c) => write!(f, "constant({c})"),
            Self::Linear(a) => write!(f, "linear({a})"),
            Self::Quadratic(a, b) => write!(f, "quadratic({a};{b})"),
            Self::Table(knots) => {
                write!(f, "table(")?;
                for (k, (x, y)) in knots.iter().enumerate() {
                    if k > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{x}:{y}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parses `identity`, `constant(c)`, `linear(a)`, `quadratic(a;b)` and
/// `table(x0:y0;x1:y1;...)`. Arguments are separated by `;` so the value
/// can sit inside comma-separated lists.
impl FromStr for MapSpec {
    type Err = MarkovError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = |msg: &str| MarkovError::InvalidMap(format!("{msg}: `{s}`"));
        let (name, args) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| bad("missing closing parenthesis"))?;
                (s[..open].trim(), Some(inner))
            }
            None => (s, None),
        };
        let numbers = |inner: &str| -> Result<Vec<f64>, MarkovError> {
            inner
                .split(';')
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad("bad number")))
                .collect()
        };
        match (name.to_ascii_lowercase().as_str(), args) {
            ("identity", None) => Ok(Self::Identity),
            ("zero", None) => Ok(Self::Constant(0.0)),
            ("constant", Some(a)) => match numbers(a)?.as_slice() {
                [c] => Ok(Self::Constant(*c)),
                _ => Err(bad("constant takes one argument")),
            },
            ("linear", Some(a)) => match numbers(a)?.as_slice() {
                [k] => Ok(Self::Linear(*k)),
                _ => Err(bad("linear takes one argument")),
            },
            ("quadratic", Some(a)) => match numbers(a)?.as_slice() {
                [a, b] => Ok(Self::Quadratic(*a, *b)),
                _ => Err(bad("quadratic takes two arguments")),
            },
            ("table", Some(a)) => {
                let knots = a
                    .split(';')
                    .map(|pair| {
                        let (x, y) = pair.split_once(':').ok_or_else(|| bad("knot needs x:y"))?;
                        let x = x.trim().parse().map_err(|_| bad("bad number"))?;
                        let y = y.trim().parse().map_err(|_| bad("bad number"))?;
                        Ok((x, y))
                    })
                    .collect::<Result<Vec<_>, MarkovError>>()?;
                Self::table(knots)
            }
            _ => Err(bad("unknown map")),
        }
    }
}

/// `x' = F(x) + g(x)·y_j` on a read of outcome `j`; frozen on a lost read.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub drift: MapSpec,
    pub gain: MapSpec,
    pub bare: BareDistribution,
    pub q: QRuleParams,
}

impl GameSpec {
    pub fn new(
        drift: MapSpec,
        gain: MapSpec,
        bare: BareDistribution,
        q: QRuleParams,
    ) -> Result<Self, MarkovError> {
        if q.len() != bare.len() {
            return Err(ChannelError::DimensionMismatch {
                what: "Q-rule parameters",
                expected: bare.len(),
                found: q.len(),
            }
            .into());
        }
        Ok(Self {
            drift,
            gain,
            bare,
            q,
        })
    }

    /// State after reading outcome `j` from `x`.
    pub fn image(&self, x: f64, j: usize) -> f64 {
        self.drift.eval(x) + self.gain.eval(x) * self.bare.label(j)
    }

    pub fn step(&self, x: f64, outcome: ReadingOutcome) -> f64 {
        match outcome {
            ReadingOutcome::Read(j) => self.image(x, j),
            ReadingOutcome::Lost => x,
        }
    }

    pub fn effective(&self) -> Result<EffectiveDistribution, MarkovError> {
        Ok(effective_distribution(&self.bare, &self.q)?)
    }
}

/// Final states and frozen-round counts, one per trial in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct GameRun {
    pub finals: Vec<f64>,
    pub frozen: Vec<u32>,
}

impl GameRun {
    pub fn trials(&self) -> usize {
        self.finals.len()
    }

    /// Distinct final states with their counts, ascending.
    pub fn histogram(&self) -> Vec<(f64, u64)> {
        let mut sorted = self.finals.clone();
        sorted.sort_by(f64::total_cmp);
        let mut out: Vec<(f64, u64)> = Vec::new();
        for x in sorted {
            match out.last_mut() {
                Some((v, c)) if *v == x => *c += 1,
                _ => out.push((x, 1)),
            }
        }
        out
    }

    /// Counts per grid node, with each final state snapped onto `grid`.
    pub fn grid_counts(&self, grid: &StateGrid) -> Result<Vec<u64>, MarkovError> {
        let mut counts = vec![0; grid.len()];
        for (t, &x) in self.finals.iter().enumerate() {
            let k = grid.locate(x).ok_or(MarkovError::OffGridImage {
                node: t,
                outcome: usize::MAX,
                image: x,
            })?;
            counts[k] += 1;
        }
        Ok(counts)
    }

    pub fn mean_frozen(&self) -> f64 {
        self.frozen.iter().map(|&f| f as f64).sum::<f64>() / self.trials() as f64
    }
}

const TRIAL_BLOCK: usize = 4096;

/// Monte Carlo over `trials` independent games of `n` rounds from `x0`.
/// Trials run in fixed blocks with one generator substream per block.
pub fn simulate_game(
    spec: &GameSpec,
    x0: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<GameRun, MarkovError> {
    if trials == 0 {
        return Err(MarkovError::NoTrials);
    }
    let channel = ReadingChannel::new(&spec.bare, &spec.q)?;
    let blocks: Vec<(Vec<f64>, Vec<u32>)> = (0..trials.div_ceil(TRIAL_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b as u64);
            let count = TRIAL_BLOCK.min(trials - b * TRIAL_BLOCK);
            let mut finals = Vec::with_capacity(count);
            let mut frozen = Vec::with_capacity(count);
            for _ in 0..count {
                let mut x = x0;
                let mut lost = 0;
                for _ in 0..n {
                    let outcome = channel.sample(&mut rng);
                    if outcome == ReadingOutcome::Lost {
                        lost += 1;
                    }
                    x = spec.step(x, outcome);
                }
                finals.push(x);
                frozen.push(lost);
            }
            (finals, frozen)
        })
        .collect();
    let mut run = GameRun {
        finals: Vec::with_capacity(trials),
        frozen: Vec::with_capacity(trials),
    };
    for (f, z) in blocks {
        run.finals.extend(f);
        run.frozen.extend(z);
    }
    Ok(run)
}

/// A ready-made game with a periodic grid wide enough that short runs from
/// `x0` never wrap.
#[derive(Debug, Clone)]
pub struct BuiltinGame {
    pub name: &'static str,
    pub spec: GameSpec,
    pub grid: StateGrid,
    pub x0: f64,
}

pub fn builtin_games() -> Vec<BuiltinGame> {
    let walk = GameSpec::new(
        MapSpec::Identity,
        MapSpec::Constant(1.0),
        BareDistribution::new(vec![-1.0, 1.0], vec![0.5, 0.5]).expect("valid"),
        QRuleParams::losses_only(vec![0.2, 0.2]).expect("valid"),
    )
    .expect("valid");
    let skewed = GameSpec::new(
        MapSpec::Identity,
        MapSpec::Constant(1.0),
        BareDistribution::new(vec![-1.0, 0.0, 2.0], vec![0.3, 0.5, 0.2]).expect("valid"),
        QRuleParams::new(
            vec![0.1, 0.2, 0.05],
            vec![vec![0.0, 0.1, 0.0], vec![0.05, 0.0, 0.1], vec![0.0, 0.05, 0.0]],
        )
        .expect("valid"),
    )
    .expect("valid");
    let doubling = GameSpec::new(
        MapSpec::Linear(2.0),
        MapSpec::Constant(1.0),
        BareDistribution::new(vec![0.0, 1.0], vec![0.6, 0.4]).expect("valid"),
        QRuleParams::losses_only(vec![0.1, 0.3]).expect("valid"),
    )
    .expect("valid");
    vec![
        BuiltinGame {
            name: "random-walk",
            spec: walk,
            grid: StateGrid::new(-12.0, 1.0, 25)
                .expect("valid")
                .with_boundary(Boundary::Periodic),
            x0: 0.0,
        },
        BuiltinGame {
            name: "skewed-walk",
            spec: skewed,
            grid: StateGrid::new(-12.0, 1.0, 37)
                .expect("valid")
                .with_boundary(Boundary::Periodic),
            x0: 0.0,
        },
        BuiltinGame {
            name: "doubling",
            spec: doubling,
            grid: StateGrid::new(0.0, 1.0, 16)
                .expect("valid")
                .with_boundary(Boundary::Periodic),
            x0: 3.0,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::binomial_sigma;

    fn walk(gamma: f64) -> GameSpec {
        GameSpec::new(
            MapSpec::Identity,
            MapSpec::Constant(1.0),
            BareDistribution::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap(),
            QRuleParams::losses_only(vec![gamma, gamma]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn map_evaluation() {
        assert_eq!(MapSpec::Identity.eval(3.0), 3.0);
        assert_eq!(MapSpec::Linear(2.0).eval(3.0), 6.0);
        assert_eq!(MapSpec::Quadratic(1.0, -1.0).eval(3.0), 6.0);
        let t = MapSpec::table(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 0.0)]).unwrap();
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(2.0), 1.0);
        assert_eq!(t.eval(9.0), 0.0);
        assert!(MapSpec::table(vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn map_parsing_round_trips() {
        for s in [
            "identity",
            "constant(0.5)",
            "linear(2)",
            "quadratic(1;-0.5)",
            "table(0:0;1:2;3:0)",
        ] {
            let m: MapSpec = s.parse().unwrap();
            assert_eq!(m.to_string().parse::<MapSpec>().unwrap(), m);
        }
        assert_eq!("zero".parse::<MapSpec>().unwrap(), MapSpec::Constant(0.0));
        assert!("linear(1;2)".parse::<MapSpec>().is_err());
        assert!("cubic(1)".parse::<MapSpec>().is_err());
        assert!("linear(1".parse::<MapSpec>().is_err());
    }

    #[test]
    fn zero_gain_is_deterministic() {
        let mut spec = walk(0.3);
        spec.gain = MapSpec::Constant(0.0);
        let run = simulate_game(&spec, 1.5, 10, 1000, 3).unwrap();
        assert!(run.finals.iter().all(|&x| x == 1.5));
    }

    #[test]
    fn single_step_law() {
        let trials = 1_000_000;
        let run = simulate_game(&walk(0.2), 0.0, 1, trials, 11).unwrap();
        let hist = run.histogram();
        let expect = [(-1.0, 0.4), (0.0, 0.2), (1.0, 0.4)];
        assert_eq!(hist.len(), 3);
        for ((x, c), (ex, p)) in hist.iter().zip(expect) {
            assert_eq!(*x, ex);
            let f = *c as f64 / trials as f64;
            assert!((f - p).abs() <= 3.0 * binomial_sigma(p, trials as u64), "{x}: {f}");
        }
    }

    #[test]
    fn two_steps_match_convolution() {
        let trials = 400_000;
        let run = simulate_game(&walk(0.2), 0.0, 2, trials, 5).unwrap();
        let step = [0.4, 0.2, 0.4];
        let mut two = [0.0; 5];
        for (a, pa) in step.iter().enumerate() {
            for (b, pb) in step.iter().enumerate() {
                two[a + b] += pa * pb;
            }
        }
        let hist = run.histogram();
        assert_eq!(hist.len(), 5);
        for (k, (x, c)) in hist.iter().enumerate() {
            assert_eq!(*x, k as f64 - 2.0);
            let f = *c as f64 / trials as f64;
            assert!((f - two[k]).abs() <= 3.0 * binomial_sigma(two[k], trials as u64));
        }
    }

    #[test]
    fn frozen_rounds_average() {
        let spec = &builtin_games()[1].spec;
        let n = 8;
        let trials = 200_000;
        let run = simulate_game(spec, 0.0, n, trials, 1).unwrap();
        let defect = spec.effective().unwrap().defect();
        let expect = n as f64 * defect;
        // each trial's frozen count is binomial(n, defect)
        let sigma = (n as f64 * defect * (1.0 - defect) / trials as f64).sqrt();
        assert!((run.mean_frozen() - expect).abs() <= 3.0 * sigma);
    }

    #[test]
    fn deterministic_across_pools() {
        let spec = walk(0.2);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate_game(&spec, 0.0, 5, 20_000, 9)).unwrap();
        let b = four.install(|| simulate_game(&spec, 0.0, 5, 20_000, 9)).unwrap();
        assert_eq!(a, b);
        assert!(simulate_game(&spec, 0.0, 5, 0, 9).is_err());
    }
}
