//! Simulation of greedy unit-clause algorithms on EC3 formulas.
//!
//! Each round makes one free step (a variable chosen by the [`Policy`] is set
//! true) and then drains the unit queues. A live clause with no true variable
//! has a residual width equal to its unset count: width 3 is an untouched
//! clause, width 2 is an XOR of its two unset variables, and width 1 is a
//! positive unit on its last variable. Setting a variable true retires every
//! live clause it belongs to and queues negative units for their other unset
//! variables.
//!
//! Negative units are drained before positive ones, each queue FIFO. A unit on
//! a variable already holding the same value is dropped; the opposite value is
//! a contradiction, which ends the run.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;

use crate::formula::{Assignment, Clause, Formula, Variable};
use crate::numfmt::sig12;
use crate::policy::{Policy, PureKind};
use crate::residual::ResidualFormula;
use crate::seed::{rng_from_seed, Rng as SeededRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Contradiction {
    /// A clause ended up with two true variables.
    TwoTrue { var: Variable },
    /// A clause lost its last unset variable without any being true.
    AllFalse { var: Variable },
    /// A unit asked for the opposite of the variable's current value.
    OppositeUnit { var: Variable },
}

impl std::fmt::Display for Contradiction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Contradiction::TwoTrue { var } => write!(f, "two true variables after setting {var}"),
            Contradiction::AllFalse { var } => write!(f, "all-false clause after setting {var}"),
            Contradiction::OppositeUnit { var } => write!(f, "opposite units on {var}"),
        }
    }
}

impl std::error::Error for Contradiction {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cell {
    Unset,
    True,
    False,
}

/// Index set over `0..capacity` with O(1) insert, remove and uniform pick.
#[derive(Clone, Debug)]
struct Registry {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl Registry {
    const ABSENT: u32 = u32::MAX;

    fn new(capacity: usize) -> Self {
        Registry {
            items: Vec::new(),
            pos: vec![Self::ABSENT; capacity],
        }
    }

    fn full(capacity: usize) -> Self {
        Registry {
            items: (0..capacity as u32).collect(),
            pos: (0..capacity as u32).collect(),
        }
    }

    fn insert(&mut self, id: u32) {
        debug_assert_eq!(self.pos[id as usize], Self::ABSENT);
        self.pos[id as usize] = self.items.len() as u32;
        self.items.push(id);
    }

    fn remove(&mut self, id: u32) {
        let p = self.pos[id as usize];
        debug_assert_ne!(p, Self::ABSENT);
        let last = *self.items.last().unwrap();
        self.items.swap_remove(p as usize);
        if last != id {
            self.pos[last as usize] = p;
        }
        self.pos[id as usize] = Self::ABSENT;
    }

    fn contains(&self, id: u32) -> bool {
        self.pos[id as usize] != Self::ABSENT
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u32> {
        (!self.items.is_empty()).then(|| self.items[rng.gen_range(0..self.items.len())])
    }
}

/// Mutable propagation state of one run.
#[derive(Clone, Debug)]
pub struct AlgState {
    clauses: Vec<[u32; 3]>,
    occ: Vec<Vec<u32>>,
    value: Vec<Cell>,
    trues: Vec<u8>,
    width: Vec<u8>,
    retired: Vec<bool>,
    twos: Registry,
    threes: Registry,
    unset: Registry,
    pos_units: VecDeque<u32>,
    neg_units: VecDeque<u32>,
    rounds: u64,
}

impl AlgState {
    pub fn new(f: &Formula) -> Self {
        let m = f.m();
        let mut threes = Registry::new(m);
        for id in 0..m as u32 {
            threes.insert(id);
        }
        AlgState {
            clauses: f
                .clauses()
                .iter()
                .map(|c| c.slots().map(|s| s as u32))
                .collect(),
            occ: f.occurrence_lists(),
            value: vec![Cell::Unset; f.n()],
            trues: vec![0; m],
            width: vec![3; m],
            retired: vec![false; m],
            twos: Registry::new(m),
            threes,
            unset: Registry::full(f.n()),
            pos_units: VecDeque::new(),
            neg_units: VecDeque::new(),
            rounds: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.value.len()
    }

    /// Live XOR clauses.
    pub fn s2(&self) -> usize {
        self.twos.len()
    }

    /// Live untouched 3-clauses.
    pub fn s3(&self) -> usize {
        self.threes.len()
    }

    /// Variables set so far.
    pub fn x(&self) -> usize {
        self.n() - self.unset.len()
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn value(&self, v: Variable) -> Option<bool> {
        match self.value[v.slot()] {
            Cell::Unset => None,
            Cell::True => Some(true),
            Cell::False => Some(false),
        }
    }

    /// Residual width of a live clause, `None` once retired.
    pub fn clause_width(&self, id: usize) -> Option<u8> {
        (!self.retired[id]).then_some(self.width[id])
    }

    pub fn pos_units(&self) -> impl Iterator<Item = Variable> + '_ {
        self.pos_units
            .iter()
            .map(|&s| Variable::from_slot(s as usize))
    }

    pub fn neg_units(&self) -> impl Iterator<Item = Variable> + '_ {
        self.neg_units
            .iter()
            .map(|&s| Variable::from_slot(s as usize))
    }

    pub fn queues_empty(&self) -> bool {
        self.pos_units.is_empty() && self.neg_units.is_empty()
    }

    /// Queues a unit clause on `v`.
    pub fn push_unit(&mut self, v: Variable, value: bool) {
        let s = v.slot() as u32;
        if value {
            self.pos_units.push_back(s);
        } else {
            self.neg_units.push_back(s);
        }
    }

    fn unset_vars_of(&self, id: usize) -> impl Iterator<Item = u32> + '_ {
        self.clauses[id]
            .into_iter()
            .filter(|&s| self.value[s as usize] == Cell::Unset)
    }

    fn drop_from_registry(&mut self, id: usize) {
        match self.width[id] {
            3 => self.threes.remove(id as u32),
            2 => self.twos.remove(id as u32),
            _ => {}
        }
    }

    /// Sets an unset variable and rewrites every live clause that contains it.
    pub fn set_variable(&mut self, v: Variable, value: bool) -> Result<(), Contradiction> {
        let slot = v.slot();
        match (self.value[slot], value) {
            (Cell::Unset, _) => {}
            (Cell::True, true) | (Cell::False, false) => return Ok(()),
            _ => return Err(Contradiction::OppositeUnit { var: v }),
        }
        self.value[slot] = if value { Cell::True } else { Cell::False };
        self.unset.remove(slot as u32);

        for i in 0..self.occ[slot].len() {
            let id = self.occ[slot][i] as usize;
            if value {
                self.trues[id] += 1;
                if self.trues[id] > 1 {
                    return Err(Contradiction::TwoTrue { var: v });
                }
            }
            if self.retired[id] {
                continue;
            }
            if value {
                // Exactly-one is now guaranteed once the queued negatives land.
                self.drop_from_registry(id);
                self.retired[id] = true;
                self.width[id] -= 1;
                for s in self.clauses[id] {
                    if self.value[s as usize] == Cell::Unset {
                        self.neg_units.push_back(s);
                    }
                }
            } else {
                match self.width[id] {
                    3 => {
                        self.threes.remove(id as u32);
                        self.width[id] = 2;
                        self.twos.insert(id as u32);
                    }
                    2 => {
                        self.twos.remove(id as u32);
                        self.width[id] = 1;
                        let last = self.unset_vars_of(id).next().expect("width-1 clause");
                        self.pos_units.push_back(last);
                    }
                    _ => {
                        self.width[id] = 0;
                        return Err(Contradiction::AllFalse { var: v });
                    }
                }
            }
        }
        Ok(())
    }

    /// Drains the unit queues, negatives first.
    pub fn propagate(&mut self) -> Result<(), Contradiction> {
        loop {
            let (slot, value) = if let Some(s) = self.neg_units.pop_front() {
                (s, false)
            } else if let Some(s) = self.pos_units.pop_front() {
                (s, true)
            } else {
                return Ok(());
            };
            self.set_variable(Variable::from_slot(slot as usize), value)?;
        }
    }

    /// Makes one free step under `policy`. With no live 2- or 3-clause left,
    /// a clause-based rule has nothing to choose from and falls back to a
    /// random unset variable. Returns the variable set true, if any.
    pub fn free_step<R: Rng + ?Sized>(
        &mut self,
        policy: &Policy,
        rng: &mut R,
    ) -> Result<Option<Variable>, Contradiction> {
        let kind = match policy {
            Policy::Pure(k) => *k,
            Policy::Mix(w) => w.sample(rng),
        };
        let clause = match kind {
            PureKind::ShortClause => self.twos.pick(rng).or_else(|| self.threes.pick(rng)),
            PureKind::Random3Clause => self.threes.pick(rng).or_else(|| self.twos.pick(rng)),
            PureKind::RandomVariable => None,
        };
        let slot = match clause {
            Some(id) => {
                let vars: Vec<u32> = self.unset_vars_of(id as usize).collect();
                vars[rng.gen_range(0..vars.len())]
            }
            None => match self.unset.pick(rng) {
                Some(s) => s,
                None => return Ok(None),
            },
        };
        let v = Variable::from_slot(slot as usize);
        self.set_variable(v, true)?;
        Ok(Some(v))
    }

    /// Sets every remaining variable false. Only valid when no live clause is
    /// left and the queues are empty.
    fn complete_false(&mut self) {
        debug_assert!(self.twos.len() == 0 && self.threes.len() == 0 && self.queues_empty());
        while let Some(&s) = self.unset.items.last() {
            self.set_variable(Variable::from_slot(s as usize), false)
                .expect("no live clause can be hurt");
        }
    }

    fn witness(&self) -> Assignment {
        Assignment::from_values(self.value.iter().map(|&c| c == Cell::True).collect())
    }

    /// Checks the bookkeeping against a recount. Used by tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        let set = self.value.iter().filter(|&&c| c != Cell::Unset).count();
        if set != self.x() {
            return Err(format!("X = {} but {} variables are set", self.x(), set));
        }
        let mut live2 = 0;
        let mut live3 = 0;
        for id in 0..self.clauses.len() {
            if self.retired[id] {
                if self.threes.contains(id as u32) || self.twos.contains(id as u32) {
                    return Err(format!("retired clause {id} still registered"));
                }
                continue;
            }
            let unset = self.unset_vars_of(id).count();
            if unset != self.width[id] as usize {
                return Err(format!(
                    "clause {id}: width {} but {} unset variables",
                    self.width[id], unset
                ));
            }
            if self.trues[id] != 0 {
                return Err(format!("live clause {id} has a true variable"));
            }
            match self.width[id] {
                3 => live3 += usize::from(self.threes.contains(id as u32)),
                2 => live2 += usize::from(self.twos.contains(id as u32)),
                _ => {}
            }
        }
        if live2 != self.s2() || live3 != self.s3() {
            return Err(format!(
                "registries hold S2={} S3={}, recount {live2}/{live3}",
                self.s2(),
                self.s3()
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub round: u64,
    pub x: f64,
    pub s2: f64,
    pub s3: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmpiricalTrajectory {
    pub samples: Vec<TrajectorySample>,
}

impl EmpiricalTrajectory {
    /// CSV with header `x,s2,s3`, twelve significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,s2,s3\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{}", sig12(s.x), sig12(s.s2), sig12(s.s3));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Satisfied(Assignment),
    Contradiction(Contradiction),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub outcome: Outcome,
    pub trajectory: EmpiricalTrajectory,
    pub rounds: u64,
    pub max_round_size: usize,
}

impl RunResult {
    pub fn is_satisfied(&self) -> bool {
        matches!(self.outcome, Outcome::Satisfied(_))
    }

    pub fn witness(&self) -> Option<&Assignment> {
        match &self.outcome {
            Outcome::Satisfied(a) => Some(a),
            Outcome::Contradiction(_) => None,
        }
    }
}

fn sample(st: &AlgState) -> TrajectorySample {
    let n = st.n() as f64;
    TrajectorySample {
        round: st.rounds,
        x: st.x() as f64 / n,
        s2: st.s2() as f64 / n,
        s3: st.s3() as f64 / n,
    }
}

/// Runs the algorithm to completion or contradiction, sampling the scaled
/// counters every `sample_stride` rounds and at the end.
pub fn run(f: &Formula, policy: &Policy, seed: u64, sample_stride: u64) -> RunResult {
    let stride = sample_stride.max(1);
    let mut rng: SeededRng = rng_from_seed(seed);
    let mut st = AlgState::new(f);
    let mut trajectory = EmpiricalTrajectory::default();
    trajectory.samples.push(sample(&st));
    let mut max_round_size = 0;

    let outcome = loop {
        if st.unset.len() == 0 {
            break Outcome::Satisfied(st.witness());
        }
        if st.s2() == 0 && st.s3() == 0 {
            st.complete_false();
            break Outcome::Satisfied(st.witness());
        }
        let before = st.x();
        let step = st.free_step(policy, &mut rng).and_then(|_| st.propagate());
        st.rounds += 1;
        max_round_size = max_round_size.max(st.x() - before);
        if let Err(c) = step {
            break Outcome::Contradiction(c);
        }
        if st.rounds.is_multiple_of(stride) {
            trajectory.samples.push(sample(&st));
        }
    };

    let last = sample(&st);
    if trajectory.samples.last() != Some(&last) {
        trajectory.samples.push(last);
    }
    if let Outcome::Satisfied(w) = &outcome {
        assert!(f.evaluate(w), "greedy run produced an invalid witness");
    }
    RunResult {
        outcome,
        trajectory,
        rounds: st.rounds,
        max_round_size,
    }
}

/// Runs until the 2-clause phase ends and returns the live 3-clauses over
/// the unset variables. The phase counts as started once `S2` exceeds
/// `sqrt(n)`, and ends the first time `S2` is back to zero after a round.
/// `None` if the run hits a contradiction or finishes before that.
pub fn run_to_residual(f: &Formula, policy: &Policy, seed: u64) -> Option<ResidualFormula> {
    let mut rng: SeededRng = rng_from_seed(seed);
    let mut st = AlgState::new(f);
    let threshold = (f.n() as f64).sqrt().max(1.0) as usize;
    let mut started = false;
    while st.unset.len() > 0 && (st.s2() > 0 || st.s3() > 0) {
        st.free_step(policy, &mut rng)
            .and_then(|_| st.propagate())
            .ok()?;
        st.rounds += 1;
        started |= st.s2() > threshold;
        if started && st.s2() == 0 {
            let mut original: Vec<Variable> = st
                .unset
                .items
                .iter()
                .map(|&s| Variable::from_slot(s as usize))
                .collect();
            original.sort_unstable();
            let mut renumber = vec![0u32; st.n()];
            for (i, v) in original.iter().enumerate() {
                renumber[v.slot()] = i as u32 + 1;
            }
            let clauses = st
                .threes
                .items
                .iter()
                .copied()
                .collect::<std::collections::BTreeSet<u32>>()
                .into_iter()
                .map(|id| {
                    let [a, b, c] = st.clauses[id as usize].map(|s| renumber[s as usize]);
                    Clause::new(a, b, c).expect("distinct unset variables")
                })
                .collect();
            let formula = Formula::new(original.len(), clauses).expect("indices in range");
            return Some(ResidualFormula { formula, original });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Clause;

    fn f(n: usize, cs: &[[u32; 3]]) -> Formula {
        Formula::new(
            n,
            cs.iter()
                .map(|c| Clause::new(c[0], c[1], c[2]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn v(i: u32) -> Variable {
        Variable::new(i).unwrap()
    }

    #[test]
    fn false_turns_three_clause_into_xor() {
        let mut st = AlgState::new(&f(3, &[[1, 2, 3]]));
        assert_eq!((st.s3(), st.s2()), (1, 0));
        st.set_variable(v(1), false).unwrap();
        assert_eq!((st.s3(), st.s2()), (0, 1));
        assert_eq!(st.clause_width(0), Some(2));
        assert!(st.queues_empty());
        st.check_invariants().unwrap();
    }

    #[test]
    fn true_in_three_clause_queues_two_negatives() {
        let mut st = AlgState::new(&f(3, &[[1, 2, 3]]));
        st.set_variable(v(1), true).unwrap();
        assert_eq!(st.neg_units().collect::<Vec<_>>(), vec![v(2), v(3)]);
        assert_eq!(st.clause_width(0), None);
        st.propagate().unwrap();
        assert_eq!(st.value(v(2)), Some(false));
        assert_eq!(st.value(v(3)), Some(false));
        st.check_invariants().unwrap();
    }

    #[test]
    fn true_in_xor_queues_negative_partner() {
        let mut st = AlgState::new(&f(3, &[[1, 2, 3]]));
        st.set_variable(v(1), false).unwrap();
        st.set_variable(v(2), true).unwrap();
        assert_eq!(st.neg_units().collect::<Vec<_>>(), vec![v(3)]);
        assert_eq!(st.s2(), 0);
    }

    #[test]
    fn false_in_xor_queues_positive_partner() {
        let mut st = AlgState::new(&f(3, &[[1, 2, 3]]));
        st.set_variable(v(1), false).unwrap();
        st.set_variable(v(2), false).unwrap();
        assert_eq!(st.pos_units().collect::<Vec<_>>(), vec![v(3)]);
        assert_eq!(st.clause_width(0), Some(1));
        st.propagate().unwrap();
        assert_eq!(st.value(v(3)), Some(true));
        assert_eq!(st.clause_width(0), None);
    }

    #[test]
    fn propagate_through_xor() {
        let mut st = AlgState::new(&f(3, &[[1, 2, 3]]));
        st.set_variable(v(1), false).unwrap();
        st.push_unit(v(2), true);
        st.propagate().unwrap();
        assert_eq!(st.value(v(2)), Some(true));
        assert_eq!(st.value(v(3)), Some(false));
        assert!(st.queues_empty());
        st.check_invariants().unwrap();
    }

    #[test]
    fn opposite_units_contradict() {
        let mut st = AlgState::new(&f(4, &[]));
        st.push_unit(v(2), true);
        st.push_unit(v(2), false);
        assert_eq!(
            st.propagate(),
            Err(Contradiction::OppositeUnit { var: v(2) })
        );
        // The negative went first, the positive clashed.
        assert_eq!(st.value(v(2)), Some(false));
    }

    #[test]
    fn three_negatives_on_one_clause_contradict() {
        let mut st = AlgState::new(&f(3, &[[1, 2, 3]]));
        for i in 1..=3 {
            st.push_unit(v(i), false);
        }
        assert_eq!(st.propagate(), Err(Contradiction::AllFalse { var: v(3) }));
    }

    #[test]
    fn two_trues_contradict() {
        let mut st = AlgState::new(&f(3, &[[1, 2, 3]]));
        st.set_variable(v(1), true).unwrap();
        assert_eq!(
            st.set_variable(v(2), true),
            Err(Contradiction::TwoTrue { var: v(2) })
        );
    }

    #[test]
    fn short_clause_picks_within_the_xor() {
        let g = f(8, &[[1, 4, 7]]);
        let mut hits = [0usize; 2];
        for seed in 0..2000 {
            let mut st = AlgState::new(&g);
            st.set_variable(v(1), false).unwrap();
            let mut rng = rng_from_seed(seed);
            let chosen = st
                .free_step(&Policy::SHORT_CLAUSE, &mut rng)
                .unwrap()
                .unwrap();
            match chosen.index() {
                4 => hits[0] += 1,
                7 => hits[1] += 1,
                other => panic!("picked {other}"),
            }
        }
        // Binomial(2000, 1/2): sd ≈ 22.4.
        assert!((hits[0] as f64 - 1000.0).abs() < 5.0 * 22.4);
    }

    #[test]
    fn short_clause_without_xor_uses_the_three_clause() {
        let g = f(8, &[[2, 5, 6]]);
        for seed in 0..50 {
            let mut st = AlgState::new(&g);
            let mut rng = rng_from_seed(seed);
            let chosen = st
                .free_step(&Policy::SHORT_CLAUSE, &mut rng)
                .unwrap()
                .unwrap();
            assert!([2, 5, 6].contains(&chosen.index()));
        }
    }

    #[test]
    fn random_variable_is_uniform_over_unset() {
        let g = f(5, &[]);
        let mut counts = [0usize; 5];
        for seed in 0..3000 {
            let mut st = AlgState::new(&g);
            st.set_variable(v(1), false).unwrap();
            st.set_variable(v(4), false).unwrap();
            let mut rng = rng_from_seed(seed);
            let c = st
                .free_step(&Policy::RANDOM_VARIABLE, &mut rng)
                .unwrap()
                .unwrap();
            counts[c.slot()] += 1;
        }
        assert_eq!(counts[0] + counts[3], 0);
        // Binomial(3000, 1/3): sd ≈ 25.8.
        for c in [counts[1], counts[2], counts[4]] {
            assert!((c as f64 - 1000.0).abs() < 5.0 * 25.8, "{counts:?}");
        }
    }

    #[test]
    fn single_clause_run() {
        let g = f(3, &[[1, 2, 3]]);
        for p in [
            Policy::SHORT_CLAUSE,
            Policy::RANDOM_VARIABLE,
            Policy::RANDOM_3_CLAUSE,
        ] {
            let r = run(&g, &p, 3, 1);
            assert!(r.is_satisfied());
            if p != Policy::RANDOM_VARIABLE {
                assert_eq!(r.rounds, 1);
                assert_eq!(r.max_round_size, 3);
            }
        }
    }

    #[test]
    fn leftover_variables_are_set_false() {
        let g = f(6, &[[1, 2, 3]]);
        let r = run(&g, &Policy::SHORT_CLAUSE, 0, 1);
        let w = r.witness().unwrap();
        assert_eq!(w.true_vars().count(), 1);
        assert!(!w.get(v(5)) && !w.get(v(6)));
    }

    #[test]
    fn runs_are_reproducible() {
        let g = crate::generate_random(2000, 0.5, 11).unwrap();
        let a = run(&g, &Policy::SHORT_CLAUSE, 4, 10);
        let b = run(&g, &Policy::SHORT_CLAUSE, 4, 10);
        assert_eq!(a, b);
    }

    #[test]
    fn invariants_hold_through_a_run() {
        let g = crate::generate_random(300, 0.55, 2).unwrap();
        let mut st = AlgState::new(&g);
        let mut rng = rng_from_seed(9);
        let policy = Policy::mix([0.4, 0.3, 0.3]).unwrap();
        while st.x() < st.n() && (st.s2() > 0 || st.s3() > 0) {
            if st
                .free_step(&policy, &mut rng)
                .and_then(|_| st.propagate())
                .is_err()
            {
                break;
            }
            st.check_invariants().unwrap();
        }
    }

    #[test]
    fn trajectory_csv_header() {
        let g = f(3, &[[1, 2, 3]]);
        let csv = run(&g, &Policy::SHORT_CLAUSE, 0, 1).trajectory.to_csv();
        assert!(csv.starts_with("x,s2,s3\n0,0,0.333333333333\n"));
    }
}
