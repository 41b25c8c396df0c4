use std::fmt;
use std::str::FromStr;

use super::{positive, QuantumError};

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Free,
    /// `½ m ω² x²`
    Harmonic(f64),
    /// Piecewise-linear through `(x, V)` knots, constant beyond the ends.
    Table(Vec<(f64, f64)>),
}

impl Potential {
    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self, QuantumError> {
        if knots.len() < 2 {
            return Err(QuantumError::InvalidTable("needs at least two knots"));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(QuantumError::InvalidTable("abscissae must increase"));
        }
        Ok(Self::Table(knots))
    }

    pub fn value(&self, mass: f64, x: f64) -> f64 {
        match self {
            Self::Free => 0.0,
            Self::Harmonic(w) => 0.5 * mass * w * w * x * x,
            Self::Table(knots) => {
                let (first, last) = (knots[0], knots[knots.len() - 1]);
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                let k = knots.partition_point(|(kx, _)| *kx <= x);
                let (x0, v0) = knots[k - 1];
                let (x1, v1) = knots[k];
                v0 + (v1 - v0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// `V'(x)` for the potentials with a closed form.
    pub fn slope(&self, mass: f64, x: f64) -> Option<f64> {
        match self {
            Self::Free => Some(0.0),
            Self::Harmonic(w) => Some(mass * w * w * x),
            Self::Table(_) => None,
        }
    }
}

/// Square-root weight `√P(y)` on `y = ε(H − E0)/α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Apodization {
    None,
    /// `√P(y) = exp(−y²/(4σ²))`, i.e. `P` Gaussian with variance `σ²`.
    Gaussian(f64),
    /// `√P(y) = 1` for `|y| ≤ w`, else 0.
    Window(f64),
}

impl Apodization {
    pub fn factor(&self, y: f64) -> f64 {
        match *self {
            Self::None => 1.0,
            Self::Gaussian(s) => (-y * y / (4.0 * s * s)).exp(),
            Self::Window(w) => {
                if y.abs() <= w {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `⟨y²⟩` under `P`; infinite without apodization.
    pub fn second_moment(&self) -> f64 {
        match *self {
            Self::None => f64::INFINITY,
            Self::Gaussian(s) => s * s,
            Self::Window(w) => w * w / 3.0,
        }
    }
}

fn parse_call(s: &str) -> Option<(String, Vec<f64>)> {
    let s = s.trim();
    match s.find('(') {
        Some(open) => {
            let inner = s[open + 1..].strip_suffix(')')?;
            let args = inner
                .split(';')
                .map(|t| t.trim().parse::<f64>().ok())
                .collect::<Option<Vec<_>>>()?;
            Some((s[..open].trim().to_ascii_lowercase(), args))
        }
        None => Some((s.to_ascii_lowercase(), Vec::new())),
    }
}

/// `free`, `harmonic(ω)` or `table(x0:v0;x1:v1;...)`.
impl FromStr for Potential {
    type Err = QuantumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix("table(").and_then(|r| r.strip_suffix(')')) {
            let knots = inner
                .split(';')
                .map(|pair| {
                    let (x, v) = pair.split_once(':')?;
                    Some((x.trim().parse().ok()?, v.trim().parse().ok()?))
                })
                .collect::<Option<Vec<(f64, f64)>>>()
                .ok_or(QuantumError::InvalidTable("knots are written x:v separated by ';'"))?;
            return Self::table(knots);
        }
        match parse_call(t) {
            Some((name, args)) if name == "free" && args.is_empty() => Ok(Self::Free),
            Some((name, args)) if name == "harmonic" && args.len() == 1 => {
                positive("omega", args[0])?;
                Ok(Self::Harmonic(args[0]))
            }
            _ => Err(QuantumError::Unsupported(
                "potential must be free, harmonic(w) or table(x:v;...)",
            )),
        }
    }
}

/// `none`, `gaussian(σ)` or `window(w)`.
impl FromStr for Apodization {
    type Err = QuantumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match parse_call(s) {
            Some((name, args)) if name == "none" && args.is_empty() => Ok(Self::None),
            Some((name, args)) if name == "gaussian" && args.len() == 1 => {
                positive("sigma_y", args[0])?;
                Ok(Self::Gaussian(args[0]))
            }
            Some((name, args)) if name == "window" && args.len() == 1 => {
                positive("window", args[0])?;
                Ok(Self::Window(args[0]))
            }
            _ => Err(QuantumError::Unsupported(
                "apodization must be none, gaussian(s) or window(w)",
            )),
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Free => write!(f, "free"),
            Self::Harmonic(w) => write!(f, "harmonic({w})"),
            Self::Table(knots) => {
                let parts: Vec<String> = knots.iter().map(|(x, v)| format!("{x}:{v}")).collect();
                write!(f, "table({})", parts.join(";"))
            }
        }
    }
}

impl fmt::Display for Apodization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => write!(f, "none"),
            Self::Gaussian(s) => write!(f, "gaussian({s})"),
            Self::Window(w) => write!(f, "window({w})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleParams {
    pub mass: f64,
    /// Action scale, in the role of ħ.
    pub alpha: f64,
    /// Time step ε.
    pub eps: f64,
    /// Energy reference E0.
    pub e0: f64,
    pub potential: Potential,
    pub apodization: Apodization,
}

impl ParticleParams {
    pub fn new(mass: f64, alpha: f64, eps: f64) -> Result<Self, QuantumError> {
        positive("mass", mass)?;
        positive("alpha", alpha)?;
        positive("eps", eps)?;
        Ok(Self {
            mass,
            alpha,
            eps,
            e0: 0.0,
            potential: Potential::Free,
            apodization: Apodization::None,
        })
    }

    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_apodization(mut self, apodization: Apodization) -> Self {
        self.apodization = apodization;
        self
    }

    pub fn with_e0(mut self, e0: f64) -> Self {
        self.e0 = e0;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        positive("mass", self.mass)?;
        positive("alpha", self.alpha)?;
        positive("eps", self.eps)?;
        if !self.e0.is_finite() {
            return Err(QuantumError::InvalidParameter {
                name: "e0",
                value: self.e0,
                reason: "must be finite",
            });
        }
        Ok(())
    }

    pub fn potential_at(&self, x: f64) -> f64 {
        self.potential.value(self.mass, x)
    }

    /// `H(p, x) = p²/2m + V(x)`.
    pub fn hamiltonian(&self, p: f64, x: f64) -> f64 {
        p * p / (2.0 * self.mass) + self.potential_at(x)
    }

    /// Energy scale `𝓔 = α/ε`.
    pub fn energy_scale(&self) -> f64 {
        self.alpha / self.eps
    }

    /// `τ = ε/√⟨y²⟩`; zero when there is no apodization.
    pub fn tau(&self) -> f64 {
        self.eps / self.apodization.second_moment().sqrt()
    }
}
