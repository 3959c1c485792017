//! Fluid-limit trajectories of the greedy algorithms and the critical density
//! at which their forced-step branching process turns supercritical.
//!
//! With `x` the fraction of variables set as the independent variable, a round
//! of a pure free-step rule changes the counters on average by
//!
//! ```text
//! dX  = t                        t = m_T + m_F
//! dS3 = -t 3 s3 / (1 - x) - c3
//! dS2 = m_F 3 s3 / (1 - x) - t 2 s2 / (1 - x) - c2
//! ```
//!
//! so `ds/dx = dS/dX`. Every set variable removes the clauses it sits in, and
//! every false one turns its 3-clauses into XORs. The constants depend on the
//! rule: the short-clause rule removes the chosen XOR (`c2 = 1`), the
//! 3-clause rule removes the chosen 3-clause (`c3 = 1`), the random-variable
//! rule removes nothing extra. Each rule also seeds the round's branching
//! process with its own unit population. A probabilistic mix averages the
//! per-round changes with its weights before dividing.
//!
//! Integration is classical RK4 with a fixed step in `x`, starting from
//! `s3 = r`, `s2 = 0`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::branching::{
    expected_sets_with, BranchError, BranchPoint, BranchStats, Convention, SeedPopulation,
};
use crate::numfmt::sig12;
use crate::policy::{Policy, PureKind, PURE_KINDS};

/// Seed population for a random-variable free step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RandomVariableSeed {
    /// A single positive unit: the free variable set true, with no partner.
    /// This is what the simulated random-variable rule does.
    #[default]
    Positive,
    /// A single negative unit, as if the free variable were set false. Its
    /// critical density is about 0.5098, against about 0.534 for `Positive`.
    Negative,
}

impl RandomVariableSeed {
    fn population(self) -> SeedPopulation {
        match self {
            RandomVariableSeed::Negative => SeedPopulation {
                positive: 0.0,
                negative: 1.0,
            },
            RandomVariableSeed::Positive => SeedPopulation {
                positive: 1.0,
                negative: 0.0,
            },
        }
    }
}

/// Knobs that change the drift itself, kept apart from step control.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DriftOptions {
    pub convention: Convention,
    pub random_variable_seed: RandomVariableSeed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeConfig {
    pub r: f64,
    pub policy: Policy,
    pub step: f64,
    pub x_max: f64,
    pub drift: DriftOptions,
}

impl OdeConfig {
    pub const DEFAULT_STEP: f64 = 1e-5;
    pub const DEFAULT_X_MAX: f64 = 0.999;

    pub fn new(r: f64, policy: Policy) -> Self {
        OdeConfig {
            r,
            policy,
            step: Self::DEFAULT_STEP,
            x_max: Self::DEFAULT_X_MAX,
            drift: DriftOptions::default(),
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    fn validate(&self) -> Result<(), OdeError> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(OdeError::InvalidConfig(format!(
                "r must be positive, got {}",
                self.r
            )));
        }
        if !(self.step > 0.0 && self.step <= 1e-2) {
            return Err(OdeError::InvalidConfig(format!(
                "step must lie in (0, 0.01], got {}",
                self.step
            )));
        }
        if !(self.x_max > 0.0 && self.x_max < 1.0) {
            return Err(OdeError::InvalidConfig(format!(
                "x_max must lie in (0, 1), got {}",
                self.x_max
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum OdeError {
    #[error("invalid ODE configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate bracket: r = {lo} and r = {hi} are both {}", if *.feasible { "feasible" } else { "infeasible" })]
    DegenerateBracket { lo: f64, hi: f64, feasible: bool },
    #[error("tolerance must be at least 1e-5, got {0}")]
    BadTolerance(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticSample {
    pub x: f64,
    pub s2: f64,
    pub s3: f64,
    pub lambda1: f64,
    pub m_t: f64,
    pub m_f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Terminal {
    /// `s2` crossed zero at `x0`, where the 3-clause density was `s3`.
    S2Extinct {
        x0: f64,
        s3: f64,
    },
    /// `lambda1` reached one at `x`.
    Supercritical {
        x: f64,
        lambda1: f64,
    },
    ReachedXMax {
        x: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticTrajectory {
    pub samples: Vec<AnalyticSample>,
    pub terminal: Terminal,
}

impl AnalyticTrajectory {
    /// `s3 / (1 - x)` at the terminal point; `None` when supercritical.
    pub fn residual_density(&self) -> Option<f64> {
        match self.terminal {
            Terminal::S2Extinct { x0, s3 } => Some(s3 / (1.0 - x0)),
            Terminal::ReachedXMax { .. } => {
                let last = self.samples.last()?;
                Some(last.s3 / (1.0 - last.x))
            }
            Terminal::Supercritical { .. } => None,
        }
    }

    pub fn extinction_x(&self) -> Option<f64> {
        match self.terminal {
            Terminal::S2Extinct { x0, .. } => Some(x0),
            _ => None,
        }
    }

    pub fn is_supercritical(&self) -> bool {
        matches!(self.terminal, Terminal::Supercritical { .. })
    }

    /// Linear interpolation of `(s2, s3)` at `x`, within the sampled range.
    pub fn interpolate(&self, x: f64) -> Option<(f64, f64)> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        if x < first.x || x > last.x {
            return None;
        }
        let i = self.samples.partition_point(|s| s.x <= x);
        if i == self.samples.len() {
            return Some((last.s2, last.s3));
        }
        let (lo, hi) = (&self.samples[i - 1], &self.samples[i]);
        let w = (x - lo.x) / (hi.x - lo.x);
        Some((lo.s2 + w * (hi.s2 - lo.s2), lo.s3 + w * (hi.s3 - lo.s3)))
    }

    /// CSV with header `x,s2,s3,lambda1,mT,mF`, every `every`-th sample plus
    /// the last one.
    pub fn to_csv(&self, every: usize) -> String {
        let every = every.max(1);
        let mut out = String::from("x,s2,s3,lambda1,mT,mF\n");
        let last = self.samples.len().saturating_sub(1);
        for (i, s) in self.samples.iter().enumerate() {
            if i % every == 0 || i == last {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    sig12(s.x),
                    sig12(s.s2),
                    sig12(s.s3),
                    sig12(s.lambda1),
                    sig12(s.m_t),
                    sig12(s.m_f)
                );
            }
        }
        out
    }
}

/// Derivatives with respect to `x` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drift {
    pub ds2: f64,
    pub ds3: f64,
    pub stats: BranchStats,
}

/// Expected per-round changes `(dX, dS2, dS3)` of a pure rule.
fn round_change(
    kind: PureKind,
    p: &BranchPoint,
    opts: &DriftOptions,
) -> Result<(f64, f64, f64, BranchStats), BranchError> {
    // The 3-clause rule falls back to the short-clause rule once 3-clauses run out.
    let kind = match kind {
        PureKind::Random3Clause if p.s3 <= 0.0 => PureKind::ShortClause,
        k => k,
    };
    let (seed, c2, c3) = match kind {
        PureKind::ShortClause => (SeedPopulation::XOR_PAIR, 1.0, 0.0),
        PureKind::RandomVariable => (opts.random_variable_seed.population(), 0.0, 0.0),
        PureKind::Random3Clause => (
            SeedPopulation {
                positive: 1.0,
                negative: 2.0,
            },
            0.0,
            1.0,
        ),
    };
    let stats = expected_sets_with(p, seed, opts.convention)?;
    let t = stats.total();
    let free = 1.0 - p.x;
    let d_s3 = -t * 3.0 * p.s3 / free - c3;
    let d_s2 = stats.m_f * 3.0 * p.s3 / free - t * 2.0 * p.s2 / free - c2;
    Ok((t, d_s2, d_s3, stats))
}

/// Drift of `(s2, s3)` in `x` for `policy` at `p`.
pub fn policy_drift(
    policy: &Policy,
    p: &BranchPoint,
    opts: &DriftOptions,
) -> Result<Drift, BranchError> {
    match policy {
        Policy::Pure(kind) => {
            let (t, d2, d3, stats) = round_change(*kind, p, opts)?;
            Ok(Drift {
                ds2: d2 / t,
                ds3: d3 / t,
                stats,
            })
        }
        Policy::Mix(w) => {
            let (mut dx, mut d2, mut d3) = (0.0, 0.0, 0.0);
            let mut m_t = 0.0;
            let mut m_f = 0.0;
            let mut lambda1 = 0.0;
            for (kind, weight) in PURE_KINDS.iter().zip(w.weights()) {
                let (t, a, b, stats) = round_change(*kind, p, opts)?;
                dx += weight * t;
                d2 += weight * a;
                d3 += weight * b;
                m_t += weight * stats.m_t;
                m_f += weight * stats.m_f;
                lambda1 = stats.lambda1;
            }
            Ok(Drift {
                ds2: d2 / dx,
                ds3: d3 / dx,
                stats: BranchStats { m_t, m_f, lambda1 },
            })
        }
    }
}

/// Drift with the densities clamped at zero, as used inside RK4 stages.
fn stage(cfg: &OdeConfig, x: f64, s2: f64, s3: f64) -> Result<Drift, BranchError> {
    let p = BranchPoint {
        x,
        s2: s2.max(0.0),
        s3: s3.max(0.0),
    };
    policy_drift(&cfg.policy, &p, &cfg.drift)
}

fn supercritical_at(x: f64, e: BranchError) -> Terminal {
    let lambda1 = match e {
        BranchError::Supercritical { lambda1 } => lambda1,
        _ => f64::NAN,
    };
    Terminal::Supercritical { x, lambda1 }
}

/// Integrates from `(s2, s3) = (0, r)` until `s2` crosses zero, the process
/// turns supercritical, or `x` reaches `x_max`.
pub fn integrate(cfg: &OdeConfig) -> Result<AnalyticTrajectory, OdeError> {
    cfg.validate()?;
    let h = cfg.step;
    let steps = (cfg.x_max / h).floor() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    let (mut s2, mut s3) = (0.0f64, cfg.r);

    for i in 0..=steps {
        let x = i as f64 * h;
        let here = match stage(cfg, x, s2, s3) {
            Ok(d) => d,
            Err(e) => {
                return Ok(AnalyticTrajectory {
                    samples,
                    terminal: supercritical_at(x, e),
                })
            }
        };
        samples.push(AnalyticSample {
            x,
            s2,
            s3,
            lambda1: here.stats.lambda1,
            m_t: here.stats.m_t,
            m_f: here.stats.m_f,
        });
        if i == steps {
            break;
        }
        let k1 = here;
        let k2 = stage(
            cfg,
            x + h / 2.0,
            s2 + h / 2.0 * k1.ds2,
            s3 + h / 2.0 * k1.ds3,
        );
        let k3 = k2.and_then(|k2| {
            stage(
                cfg,
                x + h / 2.0,
                s2 + h / 2.0 * k2.ds2,
                s3 + h / 2.0 * k2.ds3,
            )
        });
        let k4 = k3.and_then(|k3| stage(cfg, x + h, s2 + h * k3.ds2, s3 + h * k3.ds3));
        let (k2, k3, k4) = match (k2, k3, k4) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                return Ok(AnalyticTrajectory {
                    samples,
                    terminal: supercritical_at(x, e),
                })
            }
        };
        let next_s2 = s2 + h / 6.0 * (k1.ds2 + 2.0 * k2.ds2 + 2.0 * k3.ds2 + k4.ds2);
        let next_s3 = s3 + h / 6.0 * (k1.ds3 + 2.0 * k2.ds3 + 2.0 * k3.ds3 + k4.ds3);
        if next_s2 < 0.0 {
            let w = s2 / (s2 - next_s2);
            let x0 = x + w * h;
            let s3_at = s3 + w * (next_s3 - s3);
            return Ok(AnalyticTrajectory {
                samples,
                terminal: Terminal::S2Extinct {
                    x0,
                    s3: s3_at.max(0.0),
                },
            });
        }
        s2 = next_s2;
        s3 = next_s3.max(0.0);
    }
    let x = samples.last().map_or(0.0, |s| s.x);
    Ok(AnalyticTrajectory {
        samples,
        terminal: Terminal::ReachedXMax { x },
    })
}

/// Densities below this leave the clause-interaction graph of a random EC3
/// formula without a giant component: a clause reaches `3 * 2 * r` others
/// per step of exploration on average.
pub const FOREST_DENSITY: f64 = 1.0 / 6.0;

/// Feasibility of `r`: the trajectory stays subcritical until it ends and the
/// leftover 3-clauses are sparser than [`FOREST_DENSITY`].
pub fn is_feasible(traj: &AnalyticTrajectory) -> bool {
    !traj.is_supercritical() && traj.residual_density().is_some_and(|d| d < FOREST_DENSITY)
}

pub const CRITICAL_BRACKET: (f64, f64) = (0.1, 1.0);

/// Bisects the feasibility boundary over [`CRITICAL_BRACKET`].
pub fn critical_r(policy: &Policy, tol: f64) -> Result<f64, OdeError> {
    critical_r_with(
        policy,
        tol,
        OdeConfig::DEFAULT_STEP,
        DriftOptions::default(),
    )
}

pub fn critical_r_with(
    policy: &Policy,
    tol: f64,
    step: f64,
    drift: DriftOptions,
) -> Result<f64, OdeError> {
    if tol.is_nan() || tol < 1e-5 {
        return Err(OdeError::BadTolerance(tol));
    }
    let feasible = |r: f64| -> Result<bool, OdeError> {
        let cfg = OdeConfig {
            drift,
            ..OdeConfig::new(r, *policy).with_step(step)
        };
        integrate(&cfg).map(|t| is_feasible(&t))
    };
    let (mut lo, mut hi) = CRITICAL_BRACKET;
    let (flo, fhi) = (feasible(lo)?, feasible(hi)?);
    if flo == fhi {
        return Err(OdeError::DegenerateBracket {
            lo,
            hi,
            feasible: flo,
        });
    }
    let lo_is_feasible = flo;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? == lo_is_feasible {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Location and value of the largest `lambda1` along the trajectory, refined
/// by a parabola through the three samples around the discrete maximum.
pub fn max_lambda1(traj: &AnalyticTrajectory) -> Option<(f64, f64)> {
    let (i, best) = traj
        .samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.lambda1.total_cmp(&b.1.lambda1))?;
    if i == 0 || i + 1 == traj.samples.len() {
        return Some((best.x, best.lambda1));
    }
    let (a, b, c) = (&traj.samples[i - 1], best, &traj.samples[i + 1]);
    let denom = a.lambda1 - 2.0 * b.lambda1 + c.lambda1;
    if denom >= 0.0 {
        return Some((b.x, b.lambda1));
    }
    let h = c.x - b.x;
    let offset = 0.5 * (a.lambda1 - c.lambda1) / denom;
    let x = b.x + offset * h;
    let value = b.lambda1 - 0.25 * (a.lambda1 - c.lambda1) * offset;
    Some((x, value))
}

/// Convenience wrapper: integrate at the default step and locate the maximum.
pub fn max_lambda1_at(r: f64, policy: &Policy) -> Result<(f64, f64), OdeError> {
    let traj = integrate(&OdeConfig::new(r, *policy))?;
    Ok(max_lambda1(&traj).unwrap_or((0.0, 0.0)))
}
