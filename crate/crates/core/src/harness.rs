//! Satisfiability sweeps over `(n, r)` grids, threshold-crossing estimation
//! and the small amount of file I/O around them.
//!
//! A sweep draws `trials` formulas per grid point, each from its own derived
//! seed, and solves them on a bounded rayon pool. Aggregation only adds
//! counts, so the resulting table does not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::generate_random;
use crate::numfmt::{sig12, sig6};
use crate::ode::AnalyticTrajectory;
use crate::sc::EmpiricalTrajectory;
use crate::seed::trial_seed;
use crate::solver::{self, SolveError, Verdict, BRUTE_FORCE_MAX_N};

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "EC3LAB_WORKERS";

/// Densities are keyed by `round(r * 1e9) / 1e9` in lowest terms.
const DENSITY_SCALE: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed sweep table: {0}")]
    Table(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    #[default]
    Native,
    BruteForce,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
struct DensityRange {
    from: f64,
    to: f64,
    step: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_list: Vec<usize>,
    r_list: Option<Vec<f64>>,
    r_range: Option<DensityRange>,
    trials: u64,
    base_seed: u64,
    #[serde(default)]
    solver: SolverKind,
    node_budget: Option<u64>,
    workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    /// Strictly increasing.
    pub r_list: Vec<f64>,
    pub trials: u64,
    pub base_seed: u64,
    pub solver: SolverKind,
    pub node_budget: Option<u64>,
    pub workers: Option<usize>,
}

/// Grid `from, from + step, ..., to` with each point snapped to nine decimals.
pub fn density_range(from: f64, to: f64, step: f64) -> Result<Vec<f64>, HarnessError> {
    if !(step > 0.0 && from.is_finite() && to.is_finite() && to >= from) {
        return Err(HarnessError::InvalidConfig(format!(
            "bad r_range from={from} to={to} step={step}"
        )));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| snap(from + i as f64 * step)).collect())
}

fn snap(r: f64) -> f64 {
    (r * DENSITY_SCALE as f64).round() / DENSITY_SCALE as f64
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `r` as a reduced fraction `(num, den)` after snapping to nine decimals.
pub fn density_fraction(r: f64) -> (u64, u64) {
    let num = (r * DENSITY_SCALE as f64).round() as u64;
    let g = gcd(num, DENSITY_SCALE).max(1);
    (num / g, DENSITY_SCALE / g)
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let r_list = match (raw.r_list, raw.r_range) {
            (Some(list), None) => list,
            (None, Some(rg)) => density_range(rg.from, rg.to, rg.step)?,
            (Some(_), Some(_)) => {
                return Err(HarnessError::InvalidConfig(
                    "give either r_list or r_range, not both".into(),
                ))
            }
            (None, None) => return Err(HarnessError::InvalidConfig("missing r_list".into())),
        };
        let cfg = SweepConfig {
            n_list: raw.n_list,
            r_list,
            trials: raw.trials,
            base_seed: raw.base_seed,
            solver: raw.solver,
            node_budget: raw.node_budget,
            workers: raw.workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("n_list must be non-empty and positive".into());
        }
        if self.r_list.is_empty() {
            return bad("r_list is empty".into());
        }
        if self.r_list.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
            return bad("densities must be positive".into());
        }
        if self.r_list.windows(2).any(|w| w[1] <= w[0]) {
            return bad("r_list must be strictly increasing".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        if self.solver == SolverKind::BruteForce {
            if let Some(&n) = self.n_list.iter().find(|&&n| n > BRUTE_FORCE_MAX_N) {
                return bad(format!(
                    "brute-force solver is limited to n <= {BRUTE_FORCE_MAX_N}, got {n}"
                ));
            }
        }
        Ok(())
    }

    /// Worker count: `EC3LAB_WORKERS` if set, else the config, else one per core.
    pub fn resolved_workers(&self) -> Result<usize, HarnessError> {
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            return match v.trim().parse::<usize>() {
                Ok(w) if w > 0 => Ok(w),
                _ => Err(HarnessError::InvalidConfig(format!("{WORKERS_ENV}={v:?}"))),
            };
        }
        Ok(self
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get())))
    }

    pub fn seed_for(&self, n: usize, r: f64, trial: u64) -> u64 {
        let (num, den) = density_fraction(r);
        trial_seed(self.base_seed, n as u64, num, den, trial)
    }

    fn grid(&self) -> Vec<(usize, f64)> {
        let mut g: Vec<(usize, f64)> = self
            .n_list
            .iter()
            .flat_map(|&n| self.r_list.iter().map(move |&r| (n, r)))
            .collect();
        g.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        g.dedup();
        g
    }
}

/// Number of trial seeds that coincide with an earlier one anywhere on the grid.
pub fn seed_collisions(cfg: &SweepConfig) -> usize {
    let mut seeds: Vec<u64> = cfg
        .grid()
        .into_iter()
        .flat_map(|(n, r)| (0..cfg.trials).map(move |t| cfg.seed_for(n, r, t)))
        .collect();
    let total = seeds.len();
    seeds.sort_unstable();
    seeds.dedup();
    total - seeds.len()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub r: f64,
    pub trials: u64,
    pub sat: u64,
    pub budget_exceeded: u64,
    /// Mean search nodes over trials that finished; not stored in CSV.
    pub mean_solve_nodes: Option<f64>,
}

impl SweepRow {
    pub fn decided(&self) -> u64 {
        self.trials - self.budget_exceeded
    }

    pub fn unsat(&self) -> u64 {
        self.decided() - self.sat
    }

    /// `sat / (trials - budget_exceeded)`; `None` if no trial finished.
    pub fn sat_fraction(&self) -> Option<f64> {
        match self.decided() {
            0 => None,
            d => Some(self.sat as f64 / d as f64),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepTable {
    /// Sorted by `(n, r)`.
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: [&str; 6] = ["n", "r", "trials", "sat", "budget_exceeded", "sat_fraction"];

#[derive(Clone, Copy, Debug)]
enum TrialOutcome {
    Decided { sat: bool, nodes: u64 },
    BudgetExceeded,
}

fn run_trial(cfg: &SweepConfig, n: usize, r: f64, trial: u64) -> TrialOutcome {
    let f = generate_random(n, r, cfg.seed_for(n, r, trial)).expect("validated config");
    let res = match cfg.solver {
        SolverKind::Native => solver::solve(&f, cfg.node_budget),
        SolverKind::BruteForce => solver::brute_force(&f),
    };
    match res {
        Ok(res) => TrialOutcome::Decided {
            sat: res.verdict == Verdict::Sat,
            nodes: res.stats.nodes,
        },
        Err(SolveError::BudgetExceeded { .. }) => TrialOutcome::BudgetExceeded,
        Err(e @ SolveError::TooLarge { .. }) => panic!("validated config: {e}"),
    }
}

/// Runs every trial of the grid and tabulates the verdicts.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepTable, HarnessError> {
    cfg.validate()?;
    let workers = cfg.resolved_workers()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::InvalidConfig(format!("thread pool: {e}")))?;
    let grid = cfg.grid();
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|g| (0..cfg.trials).map(move |t| (g, t)))
        .collect();
    let outcomes: Vec<(usize, TrialOutcome)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, t)| (g, run_trial(cfg, grid[g].0, grid[g].1, t)))
            .collect()
    });

    let mut acc = vec![(0u64, 0u64, 0u64); grid.len()];
    for (g, o) in outcomes {
        match o {
            TrialOutcome::Decided { sat, nodes } => {
                acc[g].0 += u64::from(sat);
                acc[g].2 += nodes;
            }
            TrialOutcome::BudgetExceeded => acc[g].1 += 1,
        }
    }
    let rows = grid
        .into_iter()
        .zip(acc)
        .map(|((n, r), (sat, budget, nodes))| {
            let decided = cfg.trials - budget;
            SweepRow {
                n,
                r,
                trials: cfg.trials,
                sat,
                budget_exceeded: budget,
                mean_solve_nodes: (decided > 0).then(|| nodes as f64 / decided as f64),
            }
        })
        .collect();
    Ok(SweepTable { rows })
}

impl SweepTable {
    pub fn n_values(&self) -> Vec<usize> {
        let mut ns: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        ns.dedup();
        ns
    }

    pub fn curve(&self, n: usize) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.n == n).collect()
    }

    pub fn row(&self, n: usize, r: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|row| row.n == n && (row.r - r).abs() < 1e-9)
    }

    pub fn total_budget_exceeded(&self) -> u64 {
        self.rows.iter().map(|r| r.budget_exceeded).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for row in &self.rows {
            w.write_record([
                row.n.to_string(),
                sig12(row.r),
                row.trials.to_string(),
                row.sat.to_string(),
                row.budget_exceeded.to_string(),
                row.sat_fraction().map_or_else(|| "nan".into(), sig6),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
    }

    /// Parses the CSV written by [`SweepTable::to_csv`]. The `sat_fraction`
    /// column is checked against the counts.
    pub fn from_csv(text: &str) -> Result<Self, HarnessError> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(HarnessError::Table(format!("unexpected header {header:?}")));
        }
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| rec.get(k).unwrap_or("");
            let bad =
                |k: usize| HarnessError::Table(format!("row {}: bad {}", i + 1, CSV_HEADER[k]));
            let int = |k: usize| field(k).parse::<u64>().map_err(|_| bad(k));
            let row = SweepRow {
                n: int(0)? as usize,
                r: field(1).parse().map_err(|_| bad(1))?,
                trials: int(2)?,
                sat: int(3)?,
                budget_exceeded: int(4)?,
                mean_solve_nodes: None,
            };
            if row.sat + row.budget_exceeded > row.trials {
                return Err(HarnessError::Table(format!(
                    "row {}: counts exceed trials",
                    i + 1
                )));
            }
            let frac: f64 = field(5).parse().map_err(|_| bad(5))?;
            let consistent = match row.sat_fraction() {
                Some(p) => (p - frac).abs() <= 1e-5 * p.max(1e-300) + 1e-12,
                None => frac.is_nan(),
            };
            if !consistent {
                return Err(bad(5));
            }
            rows.push(row);
        }
        if rows.windows(2).any(|w| {
            (w[0].n, w[0].r).partial_cmp(&(w[1].n, w[1].r)) != Some(std::cmp::Ordering::Less)
        }) {
            return Err(HarnessError::Table("rows not sorted by (n, r)".into()));
        }
        Ok(SweepTable { rows })
    }

    /// Gnuplot script drawing `sat_fraction` against `r`, one line per `n`,
    /// from the CSV at `csv_path`.
    pub fn plot_script(&self, csv_path: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set key top right");
        let _ = writeln!(s, "set xlabel 'r'");
        let _ = writeln!(s, "set ylabel 'fraction satisfiable'");
        let _ = writeln!(s, "set yrange [0:1]");
        let lines: Vec<String> = self
            .n_values()
            .into_iter()
            .map(|n| {
                format!(
                    "'{csv_path}' every ::1 using 2:($1=={n} ? $6 : 1/0) with linespoints title 'n={n}'"
                )
            })
            .collect();
        let _ = writeln!(s, "plot {}", lines.join(", \\\n     "));
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityWarning {
    pub n: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    pub increase: f64,
    pub threshold: f64,
}

/// Adjacent-density increases in `sat_fraction` larger than four binomial
/// standard errors. A sanity monitor only.
pub fn monotonicity_warnings(t: &SweepTable) -> Vec<MonotonicityWarning> {
    let mut out = Vec::new();
    for n in t.n_values() {
        let curve = t.curve(n);
        for w in curve.windows(2) {
            let (Some(p0), Some(p1)) = (w[0].sat_fraction(), w[1].sat_fraction()) else {
                continue;
            };
            let p = 0.5 * (p0 + p1);
            let trials = w[0].decided().min(w[1].decided()) as f64;
            let threshold = 4.0 * (p * (1.0 - p) / trials).sqrt();
            if p1 - p0 > threshold {
                out.push(MonotonicityWarning {
                    n,
                    r_lo: w[0].r,
                    r_hi: w[1].r,
                    increase: p1 - p0,
                    threshold,
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossingEstimate {
    pub r_star: f64,
    pub pairwise_crossings: Vec<((usize, usize), f64)>,
    /// Max minus min of the pairwise crossings.
    pub spread: f64,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum CrossingError {
    #[error("need at least two sizes, got {0}")]
    TooFewCurves(usize),
    #[error("curve for n={n} does not straddle 0.5")]
    NotSpanning { n: usize },
    #[error("curves for n={0} and n={1} do not cross with sat_fraction in [0.2, 0.8]")]
    NoCrossing(usize, usize),
}

const CROSSING_BAND: (f64, f64) = (0.2, 0.8);

type Curve = Vec<(f64, f64)>;

fn eval_curve(c: &Curve, r: f64) -> Option<f64> {
    let i = c.partition_point(|p| p.0 < r);
    if i < c.len() && c[i].0 == r {
        return Some(c[i].1);
    }
    if i == 0 || i == c.len() {
        return None;
    }
    let (lo, hi) = (c[i - 1], c[i]);
    Some(lo.1 + (r - lo.0) / (hi.0 - lo.0) * (hi.1 - lo.1))
}

/// Points where the piecewise-linear curves `a` and `b` swap order. A run of
/// exact ties between opposite signs counts once, at its midpoint; ties that
/// do not separate a sign change are not crossings.
fn curve_crossings(a: &Curve, b: &Curve) -> Vec<f64> {
    let lo = a[0].0.max(b[0].0);
    let hi = a[a.len() - 1].0.min(b[b.len() - 1].0);
    let mut xs: Vec<f64> = a
        .iter()
        .chain(b)
        .map(|p| p.0)
        .filter(|&r| r >= lo && r <= hi)
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let diffs: Vec<(f64, f64)> = xs
        .iter()
        .map(|&r| (r, eval_curve(a, r).unwrap() - eval_curve(b, r).unwrap()))
        .collect();

    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    let mut tie_start: Option<f64> = None;
    let mut tie_end = 0.0;
    for &(r, d) in &diffs {
        if d == 0.0 {
            tie_start.get_or_insert(r);
            tie_end = r;
            continue;
        }
        if let Some((r0, d0)) = prev {
            if d0.signum() != d.signum() {
                out.push(match tie_start {
                    Some(t) => 0.5 * (t + tie_end),
                    None => r0 + d0 / (d0 - d) * (r - r0),
                });
            }
        }
        prev = Some((r, d));
        tie_start = None;
    }
    out
}

/// Median of the pairwise crossings of the `sat_fraction` curves. For each
/// pair of sizes the crossing inside the band whose fraction is closest to
/// one half is used.
pub fn crossing_estimate(t: &SweepTable) -> Result<CrossingEstimate, CrossingError> {
    let mut curves: BTreeMap<usize, Curve> = BTreeMap::new();
    for row in &t.rows {
        if let Some(p) = row.sat_fraction() {
            curves.entry(row.n).or_default().push((row.r, p));
        }
    }
    if curves.len() < 2 {
        return Err(CrossingError::TooFewCurves(curves.len()));
    }
    for (&n, c) in &curves {
        let above = c.iter().any(|p| p.1 >= 0.5);
        let below = c.iter().any(|p| p.1 <= 0.5);
        if !(above && below) {
            return Err(CrossingError::NotSpanning { n });
        }
    }

    let ns: Vec<usize> = curves.keys().copied().collect();
    let mut pairwise = Vec::new();
    for (i, &ni) in ns.iter().enumerate() {
        for &nj in &ns[i + 1..] {
            let (a, b) = (&curves[&ni], &curves[&nj]);
            let best = curve_crossings(a, b)
                .into_iter()
                .filter_map(|r| {
                    let p = eval_curve(a, r)?;
                    (p >= CROSSING_BAND.0 && p <= CROSSING_BAND.1).then_some((r, (p - 0.5).abs()))
                })
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .ok_or(CrossingError::NoCrossing(ni, nj))?;
            pairwise.push(((ni, nj), best.0));
        }
    }

    let mut rs: Vec<f64> = pairwise.iter().map(|p| p.1).collect();
    rs.sort_by(f64::total_cmp);
    let k = rs.len();
    let r_star = if k % 2 == 1 {
        rs[k / 2]
    } else {
        0.5 * (rs[k / 2 - 1] + rs[k / 2])
    };
    Ok(CrossingEstimate {
        r_star,
        spread: rs[k - 1] - rs[0],
        pairwise_crossings: pairwise,
    })
}

/// `p(r) = 1 / (1 + exp(k (r - r0)))`, fitted by weighted least squares on
/// the logit of the observed fractions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticFit {
    pub r0: f64,
    pub k: f64,
}

impl LogisticFit {
    /// Largest `|dp/dr|`, reached at `r0`.
    pub fn max_slope(&self) -> f64 {
        self.k.abs() / 4.0
    }

    pub fn eval(&self, r: f64) -> f64 {
        1.0 / (1.0 + (self.k * (r - self.r0)).exp())
    }
}

/// Fit for one size. Points with a fraction of exactly 0 or 1 carry no logit
/// and are skipped; needs two usable densities.
pub fn logistic_fit(t: &SweepTable, n: usize) -> Option<LogisticFit> {
    let pts: Vec<(f64, f64, f64)> = t
        .curve(n)
        .into_iter()
        .filter_map(|row| {
            let p = row.sat_fraction()?;
            (p > 0.0 && p < 1.0).then(|| {
                let w = row.decided() as f64 * p * (1.0 - p);
                (row.r, ((1.0 - p) / p).ln(), w)
            })
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let k = sxy / sxx;
    if k == 0.0 {
        return None;
    }
    Some(LogisticFit { r0: mx - my / k, k })
}

/// Sup-norm distance between a simulated trajectory and the solution of the
/// differential equations, over the simulated samples whose `x` lies inside
/// the integrated range. `None` when no sample does.
pub fn trajectory_deviation(emp: &EmpiricalTrajectory, ode: &AnalyticTrajectory) -> Option<f64> {
    emp.samples
        .iter()
        .filter_map(|s| {
            let (s2, s3) = ode.interpolate(s.x)?;
            Some((s.s2 - s2).abs().max((s.s3 - s3).abs()))
        })
        .reduce(f64::max)
}
