//! A laboratory for the satisfiability threshold of random EC3
//! (Positive 1-in-3 SAT).
//!
//! - [`formula`]: instances, random generation, evaluation, text and DIMACS formats.
//! - [`solver`]: complete backtracking solver and a brute-force oracle.
//! - [`sc`]: step-by-step simulation of greedy unit-clause algorithms.
//! - [`branching`]: two-type branching process of the forced steps.
//! - [`ode`]: fluid-limit trajectories and critical densities.
//! - [`residual`]: clause-interaction graphs and leaf-peeling.
//! - [`harness`]: satisfiability sweeps and threshold-crossing estimates.

pub mod branching;
pub mod formula;
pub mod harness;
pub mod numfmt;
pub mod ode;
pub mod policy;
pub mod residual;
pub mod sc;
pub mod seed;
pub mod solver;

pub use formula::{generate_random, Assignment, Clause, Formula, Variable};
pub use policy::Policy;
