//! Free-step policies shared by the simulator and the ODE integrator.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

/// One of the three pure free-step rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PureKind {
    /// Pick a random 2-clause if any exist, otherwise a random 3-clause, and
    /// set a random variable in it true.
    ShortClause,
    /// Set a uniformly random unset variable true.
    RandomVariable,
    /// Pick a random 3-clause (falling back to the short-clause rule when none
    /// is left) and set a random variable in it true.
    Random3Clause,
}

pub const PURE_KINDS: [PureKind; 3] = [
    PureKind::ShortClause,
    PureKind::RandomVariable,
    PureKind::Random3Clause,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Policy {
    Pure(PureKind),
    /// Each round draws a pure kind independently with these probabilities,
    /// ordered as [`PURE_KINDS`].
    Mix(MixWeights),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixWeights([f64; 3]);

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("mix weights must be non-negative and sum to 1, got {0:?}")]
    BadWeights([f64; 3]),
    #[error("unknown policy `{0}` (expected sc, rv, r3 or mix:w_sc,w_rv,w_r3)")]
    Unknown(String),
}

impl MixWeights {
    pub fn new(weights: [f64; 3]) -> Result<Self, PolicyError> {
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(PolicyError::BadWeights(weights));
        }
        Ok(MixWeights(weights))
    }

    pub fn weights(&self) -> [f64; 3] {
        self.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PureKind {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (kind, w) in PURE_KINDS.iter().zip(self.0) {
            acc += w;
            if u < acc {
                return *kind;
            }
        }
        // u landed in the rounding gap at the top; take the last kind with mass.
        PURE_KINDS
            .iter()
            .zip(self.0)
            .rev()
            .find(|(_, w)| *w > 0.0)
            .map(|(k, _)| *k)
            .unwrap_or(PureKind::ShortClause)
    }
}

impl Policy {
    pub const SHORT_CLAUSE: Policy = Policy::Pure(PureKind::ShortClause);
    pub const RANDOM_VARIABLE: Policy = Policy::Pure(PureKind::RandomVariable);
    pub const RANDOM_3_CLAUSE: Policy = Policy::Pure(PureKind::Random3Clause);

    pub fn mix(weights: [f64; 3]) -> Result<Self, PolicyError> {
        MixWeights::new(weights).map(Policy::Mix)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Pure(PureKind::ShortClause) => f.write_str("sc"),
            Policy::Pure(PureKind::RandomVariable) => f.write_str("rv"),
            Policy::Pure(PureKind::Random3Clause) => f.write_str("r3"),
            Policy::Mix(w) => {
                let [a, b, c] = w.0;
                write!(f, "mix:{a},{b},{c}")
            }
        }
    }
}

impl FromStr for Policy {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sc" | "short-clause" => Ok(Policy::SHORT_CLAUSE),
            "rv" | "random-variable" => Ok(Policy::RANDOM_VARIABLE),
            "r3" | "random-3-clause" => Ok(Policy::RANDOM_3_CLAUSE),
            _ => {
                let Some(rest) = s.strip_prefix("mix:") else {
                    return Err(PolicyError::Unknown(s.to_string()));
                };
                let parts: Vec<f64> = rest
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| PolicyError::Unknown(s.to_string()))?;
                let weights: [f64; 3] = parts
                    .try_into()
                    .map_err(|_| PolicyError::Unknown(s.to_string()))?;
                Policy::mix(weights)
            }
        }
    }
}
