//! Complete EC3 decision procedure and the brute-force oracle.
//!
//! The search is plain chronological backtracking over exactly-one
//! propagation:
//! - a clause with one true variable forces its other unset variables false;
//! - a clause with two false variables and no true one forces the last true;
//! - two trues, or three falses, in one clause is a conflict.
//!
//! Branching takes the lowest-id clause of smallest unset width that is not yet
//! satisfied, and tries its lowest-index unset variable true before false.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::formula::{Assignment, Formula};

/// Largest `n` the brute-force oracle accepts.
pub const BRUTE_FORCE_MAX_N: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Sat,
    Unsat,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Branches entered (each true and each false alternative counts once).
    pub nodes: u64,
    /// Variables assigned by propagation.
    pub propagations: u64,
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub verdict: Verdict,
    pub witness: Option<Assignment>,
    pub stats: SolveStats,
    /// Number of satisfying assignments; only the brute-force oracle fills it.
    pub solution_count: Option<u64>,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        self.verdict == Verdict::Sat
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("node budget of {budget} exceeded")]
    BudgetExceeded { budget: u64, stats_nodes: u64 },
    #[error("brute force refuses n = {n} (limit {BRUTE_FORCE_MAX_N})")]
    TooLarge { n: usize },
}

enum Enqueue {
    Assigned,
    Redundant,
    Conflict,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Value {
    Unset,
    True,
    False,
}

struct Search<'f> {
    formula: &'f Formula,
    occ: Vec<Vec<u32>>,
    value: Vec<Value>,
    trues: Vec<u8>,
    falses: Vec<u8>,
    trail: Vec<usize>,
    queue_head: usize,
    propagations: u64,
}

impl<'f> Search<'f> {
    fn new(formula: &'f Formula) -> Self {
        let m = formula.m();
        Search {
            formula,
            occ: formula.occurrence_lists(),
            value: vec![Value::Unset; formula.n()],
            trues: vec![0; m],
            falses: vec![0; m],
            trail: Vec::with_capacity(formula.n()),
            queue_head: 0,
            propagations: 0,
        }
    }

    /// Assigns and records on the trail. Clause counters are updated when the
    /// trail entry is processed by `propagate`.
    fn enqueue(&mut self, var: usize, value: bool) -> Enqueue {
        match (self.value[var], value) {
            (Value::Unset, _) => {
                self.value[var] = if value { Value::True } else { Value::False };
                self.trail.push(var);
                Enqueue::Assigned
            }
            (Value::True, true) | (Value::False, false) => Enqueue::Redundant,
            _ => Enqueue::Conflict,
        }
    }

    fn force(&mut self, var: usize, value: bool) -> bool {
        match self.enqueue(var, value) {
            Enqueue::Assigned => {
                self.propagations += 1;
                true
            }
            Enqueue::Redundant => true,
            Enqueue::Conflict => false,
        }
    }

    /// Processes the trail from `queue_head`; false on conflict.
    fn propagate(&mut self) -> bool {
        while self.queue_head < self.trail.len() {
            let var = self.trail[self.queue_head];
            self.queue_head += 1;
            let is_true = self.value[var] == Value::True;
            // Counters first, so that a conflict leaves them consistent with
            // the processed prefix of the trail.
            for &cid in &self.occ[var] {
                if is_true {
                    self.trues[cid as usize] += 1;
                } else {
                    self.falses[cid as usize] += 1;
                }
            }
            for i in 0..self.occ[var].len() {
                let cid = self.occ[var][i] as usize;
                let slots = self.formula.clauses()[cid].slots();
                if self.trues[cid] > 1 || self.falses[cid] == 3 {
                    return false;
                }
                if is_true {
                    for s in slots {
                        if s != var && !self.force(s, false) {
                            return false;
                        }
                    }
                } else if self.falses[cid] == 2 && self.trues[cid] == 0 {
                    // The third may already be false on the unprocessed trail.
                    let Some(last) = slots.into_iter().find(|&s| self.value[s] != Value::False)
                    else {
                        return false;
                    };
                    if !self.force(last, true) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Undoes trail entries back to `mark`.
    fn backtrack(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let var = self.trail.pop().unwrap();
            let was_processed = self.trail.len() < self.queue_head;
            if was_processed {
                let is_true = self.value[var] == Value::True;
                for &cid in &self.occ[var] {
                    if is_true {
                        self.trues[cid as usize] -= 1;
                    } else {
                        self.falses[cid as usize] -= 1;
                    }
                }
            }
            self.value[var] = Value::Unset;
        }
        self.queue_head = self.queue_head.min(mark);
    }

    /// Variable to branch on: first unset variable of a shortest unsatisfied
    /// clause. `None` means every clause is satisfied.
    fn pick_branch(&self) -> Option<usize> {
        let mut best: Option<(u8, usize)> = None;
        for cid in 0..self.formula.m() {
            if self.trues[cid] > 0 {
                continue;
            }
            let width = 3 - self.falses[cid];
            if best.is_none_or(|(w, _)| width < w) {
                best = Some((width, cid));
                if width == 2 {
                    break;
                }
            }
        }
        let (_, cid) = best?;
        self.formula.clauses()[cid]
            .slots()
            .into_iter()
            .find(|&s| self.value[s] == Value::Unset)
    }

    fn witness(&self) -> Assignment {
        Assignment::from_values(self.value.iter().map(|&v| v == Value::True).collect())
    }
}

struct Decision {
    mark: usize,
    var: usize,
    flipped: bool,
}

/// Decides satisfiability. `node_budget` bounds the number of branches entered.
pub fn solve(f: &Formula, node_budget: Option<u64>) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let mut s = Search::new(f);
    let mut nodes = 0u64;
    let mut stack: Vec<Decision> = Vec::new();
    let mut ok = s.propagate();

    let verdict = loop {
        if !ok {
            // Resume the deepest decision that still has its false branch.
            loop {
                match stack.last_mut() {
                    None => break,
                    Some(d) if d.flipped => {
                        stack.pop();
                    }
                    Some(d) => {
                        d.flipped = true;
                        let (mark, var) = (d.mark, d.var);
                        s.backtrack(mark);
                        nodes += 1;
                        if node_budget.is_some_and(|b| nodes > b) {
                            return Err(SolveError::BudgetExceeded {
                                budget: node_budget.unwrap(),
                                stats_nodes: nodes,
                            });
                        }
                        s.enqueue(var, false);
                        break;
                    }
                }
            }
            if stack.is_empty() {
                break Verdict::Unsat;
            }
            ok = s.propagate();
            continue;
        }
        let Some(var) = s.pick_branch() else {
            break Verdict::Sat;
        };
        nodes += 1;
        if node_budget.is_some_and(|b| nodes > b) {
            return Err(SolveError::BudgetExceeded {
                budget: node_budget.unwrap(),
                stats_nodes: nodes,
            });
        }
        stack.push(Decision {
            mark: s.trail.len(),
            var,
            flipped: false,
        });
        s.enqueue(var, true);
        ok = s.propagate();
    };

    let witness = (verdict == Verdict::Sat).then(|| s.witness());
    if let Some(w) = &witness {
        assert!(f.evaluate(w), "solver produced an invalid witness");
    }
    Ok(SolveResult {
        verdict,
        witness,
        stats: SolveStats {
            nodes,
            propagations: s.propagations,
            wall_time: start.elapsed(),
        },
        solution_count: None,
    })
}

/// Enumerates all `2^n` assignments. The witness is the satisfying assignment
/// with the smallest bit pattern (variable 1 is bit 0).
pub fn brute_force(f: &Formula) -> Result<SolveResult, SolveError> {
    let n = f.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(SolveError::TooLarge { n });
    }
    let start = Instant::now();
    let masks: Vec<u32> = f
        .clauses()
        .iter()
        .map(|c| c.slots().iter().fold(0u32, |m, &s| m | 1 << s))
        .collect();
    let mut count = 0u64;
    let mut first = None;
    for bits in 0u32..(1u32 << n) {
        if masks.iter().all(|&m| (bits & m).count_ones() == 1) {
            count += 1;
            first.get_or_insert(bits);
        }
    }
    let witness = first.map(|b| Assignment::from_bits(n, u64::from(b)));
    Ok(SolveResult {
        verdict: if count > 0 {
            Verdict::Sat
        } else {
            Verdict::Unsat
        },
        witness,
        stats: SolveStats {
            nodes: 1u64 << n,
            propagations: 0,
            wall_time: start.elapsed(),
        },
        solution_count: Some(count),
    })
}
