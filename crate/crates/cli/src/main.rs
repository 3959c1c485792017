use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ec3lab::branching::Convention;
use ec3lab::harness::{self, SweepConfig, SweepTable};
use ec3lab::numfmt::sig12;
use ec3lab::ode::{self, DriftOptions, OdeConfig, RandomVariableSeed, Terminal};
use ec3lab::residual::{build_graph, is_forest, leaf_peel_satisfy, ResidualError};
use ec3lab::sc::{self, Outcome};
use ec3lab::solver::{self, SolveError, Verdict};
use ec3lab::{generate_random, Formula, Policy};

const EXIT_SAT: u8 = 10;
const EXIT_UNSAT: u8 = 20;
const EXIT_BUDGET: u8 = 30;

#[derive(Parser)]
#[command(
    name = "ec3lab",
    version,
    about = "Random positive 1-in-3 SAT experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum RvSeed {
    Negative,
    Positive,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random formula.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the CNF encoding in DIMACS format instead.
        #[arg(long)]
        cnf: bool,
    },
    /// Decide a formula with the backtracking solver.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        /// Maximum number of search nodes.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Run the greedy unit-propagation algorithm once.
    Sc {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "sc")]
        policy: Policy,
        #[arg(long)]
        seed: u64,
        /// Write the sampled (x, s2, s3) path as CSV.
        #[arg(long)]
        traj: Option<PathBuf>,
        /// Rounds between trajectory samples.
        #[arg(long, default_value_t = 100)]
        stride: u64,
    },
    /// Integrate the density equations for one policy.
    Ode {
        #[arg(long)]
        r: f64,
        #[arg(long, default_value = "sc")]
        policy: Policy,
        #[arg(long, default_value_t = OdeConfig::DEFAULT_STEP)]
        step: f64,
        #[arg(long)]
        traj: Option<PathBuf>,
        /// Keep every k-th integration point in the trajectory CSV.
        #[arg(long, default_value_t = 100)]
        every: usize,
        /// Exchange the offspring means of the two unit types.
        #[arg(long)]
        swap_convention: bool,
        /// Unit population seeded by a random-variable free step.
        #[arg(long, value_enum, default_value = "positive")]
        rv_seed: RvSeed,
    },
    /// Largest density at which the integrated trajectory stays feasible.
    Critical {
        #[arg(long, default_value = "sc")]
        policy: Policy,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Satisfiability sweep over a grid of sizes and densities.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a gnuplot script for the table.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Forest test and leaf peeling on a formula.
    Residual {
        #[arg(long = "in")]
        input: PathBuf,
        /// First run the greedy algorithm with this policy and analyse what
        /// is left when its 2-clauses run out.
        #[arg(long)]
        policy: Option<Policy>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read_formula(path: &Path) -> Result<Formula> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Formula::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing stdout"),
    }
}

fn cmd_solve(input: &Path, budget: Option<u64>) -> Result<ExitCode> {
    let f = read_formula(input)?;
    match solver::solve(&f, budget) {
        Ok(res) => {
            let code = match res.verdict {
                Verdict::Sat => {
                    println!("verdict: SAT");
                    let w = res.witness.as_ref().expect("sat carries a witness");
                    let vars: Vec<String> = w.true_vars().map(|v| v.index().to_string()).collect();
                    println!("witness: {}", vars.join(" "));
                    EXIT_SAT
                }
                Verdict::Unsat => {
                    println!("verdict: UNSAT");
                    EXIT_UNSAT
                }
            };
            println!("nodes: {}", res.stats.nodes);
            println!("propagations: {}", res.stats.propagations);
            println!("time_s: {:.6}", res.stats.wall_time.as_secs_f64());
            Ok(ExitCode::from(code))
        }
        Err(SolveError::BudgetExceeded { budget, .. }) => {
            println!("verdict: BUDGET_EXCEEDED");
            println!("budget: {budget}");
            Ok(ExitCode::from(EXIT_BUDGET))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_sc(
    input: &Path,
    policy: &Policy,
    seed: u64,
    traj: Option<&Path>,
    stride: u64,
) -> Result<()> {
    let f = read_formula(input)?;
    let res = sc::run(&f, policy, seed, stride);
    match &res.outcome {
        Outcome::Satisfied(_) => println!("outcome: satisfied"),
        Outcome::Contradiction(c) => println!("outcome: contradiction ({c})"),
    }
    println!("rounds: {}", res.rounds);
    println!("max_round_size: {}", res.max_round_size);
    if let Some(last) = res.trajectory.samples.last() {
        println!("final_x: {}", sig12(last.x));
    }
    if let Some(p) = traj {
        write_out(Some(p), &res.trajectory.to_csv())?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_ode(
    r: f64,
    policy: Policy,
    step: f64,
    traj: Option<&Path>,
    every: usize,
    swap: bool,
    rv_seed: RvSeed,
) -> Result<()> {
    let drift = DriftOptions {
        convention: if swap {
            Convention::Swapped
        } else {
            Convention::Production
        },
        random_variable_seed: match rv_seed {
            RvSeed::Negative => RandomVariableSeed::Negative,
            RvSeed::Positive => RandomVariableSeed::Positive,
        },
    };
    let cfg = OdeConfig {
        drift,
        ..OdeConfig::new(r, policy).with_step(step)
    };
    let t = ode::integrate(&cfg)?;
    if let Some((x, l)) = ode::max_lambda1(&t) {
        println!("lambda1_max: {}", sig12(l));
        println!("x_at_max: {}", sig12(x));
    }
    let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), sig12);
    println!("x0: {}", opt(t.extinction_x()));
    println!("residual_density: {}", opt(t.residual_density()));
    let terminal = match t.terminal {
        Terminal::S2Extinct { .. } => "s2-extinct".to_string(),
        Terminal::Supercritical { x, .. } => format!("supercritical at x={}", sig12(x)),
        Terminal::ReachedXMax { .. } => "reached-x-max".to_string(),
    };
    println!("terminal: {terminal}");
    println!("feasible: {}", ode::is_feasible(&t));
    if let Some(p) = traj {
        write_out(Some(p), &t.to_csv(every))?;
    }
    Ok(())
}

fn cmd_sweep(config: &Path, out: Option<&Path>, plot: Option<&Path>) -> Result<()> {
    let text =
        fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = SweepConfig::from_json(&text)?;
    let collisions = harness::seed_collisions(&cfg);
    let table = harness::sweep(&cfg)?;
    write_out(out, &table.to_csv())?;
    if let Some(p) = plot {
        let csv = out.map_or_else(|| "table.csv".to_string(), |o| o.display().to_string());
        write_out(Some(p), &table.plot_script(&csv))?;
    }
    report_sweep(&table, collisions);
    Ok(())
}

fn report_sweep(table: &SweepTable, collisions: usize) {
    eprintln!("budget_exceeded: {}", table.total_budget_exceeded());
    eprintln!("seed_collisions: {collisions}");
    for w in harness::monotonicity_warnings(table) {
        eprintln!(
            "warning: n={} sat_fraction rises by {} between r={} and r={} (threshold {})",
            w.n,
            sig12(w.increase),
            sig12(w.r_lo),
            sig12(w.r_hi),
            sig12(w.threshold)
        );
    }
    for n in table.n_values() {
        if let Some(fit) = harness::logistic_fit(table, n) {
            eprintln!(
                "fit n={n}: r0={} max_slope={}",
                sig12(fit.r0),
                sig12(fit.max_slope())
            );
        }
    }
    match harness::crossing_estimate(table) {
        Ok(est) => {
            for ((a, b), r) in &est.pairwise_crossings {
                eprintln!("crossing n={a}/n={b}: {}", sig12(*r));
            }
            eprintln!(
                "r_star: {} (spread {})",
                sig12(est.r_star),
                sig12(est.spread)
            );
        }
        Err(e) => eprintln!("r_star: unavailable ({e})"),
    }
}

fn cmd_residual(input: &Path, policy: Option<Policy>, seed: u64) -> Result<()> {
    let mut f = read_formula(input)?;
    if let Some(p) = policy {
        match sc::run_to_residual(&f, &p, seed) {
            Some(res) => {
                println!("residual_n: {}", res.formula.n());
                println!("residual_m: {}", res.formula.m());
                println!("residual_density: {}", sig12(res.density()));
                f = res.formula;
            }
            None => bail!("run did not reach a residual formula"),
        }
    }
    let g = build_graph(&f);
    let check = is_forest(&g);
    println!("clauses: {}", g.node_count());
    println!("edges: {}", g.edge_count());
    println!("forest: {}", check.is_forest);
    println!("max_component: {}", check.max_component);
    println!("components (size count trees):");
    for (size, (count, trees)) in g.size_histogram() {
        println!("  {size} {count} {trees}");
    }
    match leaf_peel_satisfy(&f) {
        Ok(a) => println!("leaf_peel: satisfied ({} true)", a.true_vars().count()),
        Err(ResidualError::NotForest { .. }) => println!("leaf_peel: not a forest"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Gen {
            n,
            r,
            seed,
            out,
            cnf,
        } => {
            let f = generate_random(n, r, seed)?;
            let text = if cnf { f.to_dimacs() } else { f.serialize() };
            write_out(out.as_deref(), &text)?;
        }
        Cmd::Solve { input, budget } => return cmd_solve(&input, budget),
        Cmd::Sc {
            input,
            policy,
            seed,
            traj,
            stride,
        } => cmd_sc(&input, &policy, seed, traj.as_deref(), stride)?,
        Cmd::Ode {
            r,
            policy,
            step,
            traj,
            every,
            swap_convention,
            rv_seed,
        } => cmd_ode(
            r,
            policy,
            step,
            traj.as_deref(),
            every,
            swap_convention,
            rv_seed,
        )?,
        Cmd::Critical { policy, tol } => {
            println!("critical_r: {}", sig12(ode::critical_r(&policy, tol)?));
        }
        Cmd::Sweep { config, out, plot } => cmd_sweep(&config, out.as_deref(), plot.as_deref())?,
        Cmd::Residual {
            input,
            policy,
            seed,
        } => cmd_residual(&input, policy, seed)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
