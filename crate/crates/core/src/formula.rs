//! EC3 formulas: positive clauses of three distinct variables, each satisfied
//! when exactly one of its variables is true.
//!
//! Variables are 1-based everywhere in the public surface, matching DIMACS.
//! Random formulas draw `m = round(r * n)` clauses (ties to even) independently
//! and uniformly from the `C(n, 3)` distinct-variable triples, keeping duplicates.
//! The generator is ChaCha8 seeded through `SeedableRng::seed_from_u64`, so a
//! given `(n, r, seed)` yields the same formula on every platform.

use std::fmt;
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::seed::rng_from_seed;

/// A 1-based variable index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable(u32);

impl Variable {
    pub fn new(index: u32) -> Option<Self> {
        (index >= 1).then_some(Variable(index))
    }

    pub fn index(self) -> u32 {
        self.0
    }

    /// Position in 0-based storage.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    pub(crate) fn from_slot(slot: usize) -> Self {
        Variable(slot as u32 + 1)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Three pairwise distinct variables in strictly increasing order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause([u32; 3]);

impl Clause {
    /// Builds a clause from any ordering of three indices.
    pub fn new(a: u32, b: u32, c: u32) -> Result<Self, FormulaError> {
        let mut vars = [a, b, c];
        vars.sort_unstable();
        if vars[0] == 0 {
            return Err(FormulaError::ZeroIndex);
        }
        if vars[0] == vars[1] || vars[1] == vars[2] {
            return Err(FormulaError::RepeatedVariable(vars));
        }
        Ok(Clause(vars))
    }

    pub fn indices(&self) -> [u32; 3] {
        self.0
    }

    pub fn vars(&self) -> [Variable; 3] {
        self.0.map(Variable)
    }

    pub fn slots(&self) -> [usize; 3] {
        self.0.map(|v| (v - 1) as usize)
    }

    pub fn contains(&self, v: Variable) -> bool {
        self.0.contains(&v.0)
    }
}

/// Where a generated formula came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Formula {
    n: usize,
    clauses: Vec<Clause>,
    provenance: Option<Provenance>,
}

#[derive(Debug, Error, PartialEq)]
pub enum FormulaError {
    #[error("need at least 3 variables, got {0}")]
    TooFewVariables(usize),
    #[error("density must be finite and non-negative, got {0}")]
    InvalidDensity(f64),
    #[error("variable indices are 1-based; found 0")]
    ZeroIndex,
    #[error("repeated variable in clause {0:?}")]
    RepeatedVariable([u32; 3]),
    #[error("clause {clause:?} references a variable outside 1..={n}")]
    OutOfRange { clause: [u32; 3], n: usize },
}

impl Formula {
    pub fn new(n: usize, clauses: Vec<Clause>) -> Result<Self, FormulaError> {
        if let Some(c) = clauses.iter().find(|c| c.0[2] as usize > n) {
            return Err(FormulaError::OutOfRange { clause: c.0, n });
        }
        Ok(Formula {
            n,
            clauses,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn density(&self) -> f64 {
        self.clauses.len() as f64 / self.n as f64
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }

    /// Per-variable occurrence counts, indexed by slot.
    pub fn occurrence_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for c in &self.clauses {
            for s in c.slots() {
                counts[s] += 1;
            }
        }
        counts
    }

    /// Clause ids containing each variable, indexed by slot.
    pub fn occurrence_lists(&self) -> Vec<Vec<u32>> {
        let mut occ = vec![Vec::new(); self.n];
        for (id, c) in self.clauses.iter().enumerate() {
            for s in c.slots() {
                occ[s].push(id as u32);
            }
        }
        occ
    }

    /// True iff every clause has exactly one true variable under `a`.
    pub fn evaluate(&self, a: &Assignment) -> bool {
        debug_assert_eq!(a.len(), self.n);
        self.clauses
            .iter()
            .all(|c| c.slots().iter().filter(|&&s| a.values[s]).count() == 1)
    }

    /// CNF encoding: one positive 3-clause plus three pairwise exclusions per clause.
    pub fn to_cnf(&self) -> Vec<Vec<i32>> {
        let mut cnf = Vec::with_capacity(4 * self.clauses.len());
        for c in &self.clauses {
            let [a, b, d] = c.0.map(|v| v as i32);
            cnf.push(vec![a, b, d]);
            cnf.push(vec![-a, -b]);
            cnf.push(vec![-a, -d]);
            cnf.push(vec![-b, -d]);
        }
        cnf
    }

    pub fn to_dimacs(&self) -> String {
        let cnf = self.to_cnf();
        let mut out = String::new();
        let _ = writeln!(out, "p cnf {} {}", self.n, cnf.len());
        for clause in &cnf {
            for lit in clause {
                let _ = write!(out, "{lit} ");
            }
            out.push_str("0\n");
        }
        out
    }

    /// Native text format: optional `c ` comments, `p ec3 <n> <m>`, then one
    /// clause per line.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(16 + 12 * self.clauses.len());
        if let Some(p) = self.provenance {
            let _ = writeln!(out, "c ec3lab seed={} r={}", p.seed, p.r);
        }
        let _ = writeln!(out, "p ec3 {} {}", self.n, self.clauses.len());
        for c in &self.clauses {
            let [a, b, d] = c.0;
            let _ = writeln!(out, "{a} {b} {d}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = text.lines().enumerate();
        let mut provenance = None;
        let (n, declared) = loop {
            let Some((no, line)) = lines.next() else {
                return Err(ParseError::MissingHeader);
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "c" || line.starts_with("c ") {
                if let Some(p) = parse_provenance(line) {
                    provenance = Some(p);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["p", "ec3", n, m] => match (n.parse::<usize>(), m.parse::<usize>()) {
                    (Ok(n), Ok(m)) => break (n, m),
                    _ => return Err(ParseError::MalformedHeader { line: no + 1 }),
                },
                _ => return Err(ParseError::MalformedHeader { line: no + 1 }),
            }
        };

        let mut clauses = Vec::with_capacity(declared);
        for (no, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let line_no = no + 1;
            let mut idx = [0u32; 3];
            let mut count = 0;
            for tok in line.split_whitespace() {
                let v: u32 = tok
                    .parse()
                    .map_err(|_| ParseError::BadToken { line: line_no })?;
                if count < 3 {
                    idx[count] = v;
                }
                count += 1;
            }
            if count != 3 {
                return Err(ParseError::WrongArity {
                    line: line_no,
                    found: count,
                });
            }
            if let Some(&v) = idx.iter().find(|&&v| v == 0 || v as usize > n) {
                return Err(ParseError::IndexOutOfRange {
                    line: line_no,
                    index: v,
                    n,
                });
            }
            let clause = Clause::new(idx[0], idx[1], idx[2])
                .map_err(|_| ParseError::RepeatedVariable { line: line_no })?;
            clauses.push(clause);
        }
        if clauses.len() != declared {
            return Err(ParseError::ClauseCountMismatch {
                declared,
                found: clauses.len(),
            });
        }
        Ok(Formula {
            n,
            clauses,
            provenance,
        })
    }
}

fn parse_provenance(line: &str) -> Option<Provenance> {
    let rest = line.strip_prefix("c ec3lab ")?;
    let mut seed = None;
    let mut r = None;
    for kv in rest.split_whitespace() {
        match kv.split_once('=') {
            Some(("seed", v)) => seed = v.parse().ok(),
            Some(("r", v)) => r = v.parse().ok(),
            _ => {}
        }
    }
    Some(Provenance { seed: seed?, r: r? })
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("missing header line `p ec3 <n> <m>`")]
    MissingHeader,
    #[error("line {line}: malformed header, expected `p ec3 <n> <m>`")]
    MalformedHeader { line: usize },
    #[error("line {line}: not a non-negative integer")]
    BadToken { line: usize },
    #[error("line {line}: expected 3 variables per clause, found {found}")]
    WrongArity { line: usize, found: usize },
    #[error("line {line}: variable {index} out of range 1..={n}")]
    IndexOutOfRange { line: usize, index: u32, n: usize },
    #[error("line {line}: repeated variable in clause")]
    RepeatedVariable { line: usize },
    #[error("clause count mismatch: header declares {declared}, found {found}")]
    ClauseCountMismatch { declared: usize, found: usize },
}

/// Number of clauses for density `r` over `n` variables.
pub fn clause_count(n: usize, r: f64) -> usize {
    (r * n as f64).round_ties_even() as usize
}

/// Draws a random EC3 formula with `round(r * n)` clauses.
pub fn generate_random(n: usize, r: f64, seed: u64) -> Result<Formula, FormulaError> {
    if n < 3 {
        return Err(FormulaError::TooFewVariables(n));
    }
    if !r.is_finite() || r < 0.0 {
        return Err(FormulaError::InvalidDensity(r));
    }
    let m = clause_count(n, r);
    let mut rng = rng_from_seed(seed);
    let n32 = n as u32;
    let clauses = (0..m)
        .map(|_| loop {
            let a = rng.gen_range(1..=n32);
            let b = rng.gen_range(1..=n32);
            let c = rng.gen_range(1..=n32);
            if a != b && b != c && a != c {
                let mut t = [a, b, c];
                t.sort_unstable();
                break Clause(t);
            }
        })
        .collect();
    Ok(Formula {
        n,
        clauses,
        provenance: Some(Provenance { seed, r }),
    })
}

/// A total truth assignment over `n` variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn all_false(n: usize) -> Self {
        Assignment {
            values: vec![false; n],
        }
    }

    pub fn from_values(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    /// Bit `i` of `bits` is the value of variable `i + 1`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Assignment {
            values: (0..n).map(|i| bits >> i & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, v: Variable) -> bool {
        self.values[v.slot()]
    }

    pub fn set(&mut self, v: Variable, value: bool) {
        self.values[v.slot()] = value;
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn true_vars(&self) -> impl Iterator<Item = Variable> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| Variable::from_slot(i))
    }
}
