use std::collections::HashMap;

use ec3lab::formula::clause_count;
use ec3lab::{generate_random, Assignment, Formula};
use proptest::prelude::*;

fn cnf_satisfied(cnf: &[Vec<i32>], a: &Assignment) -> bool {
    cnf.iter().all(|c| {
        c.iter().any(|&lit| {
            let v = a.values()[lit.unsigned_abs() as usize - 1];
            if lit > 0 {
                v
            } else {
                !v
            }
        })
    })
}

fn naive_evaluate(f: &Formula, a: &Assignment) -> bool {
    for c in f.clauses() {
        let mut trues = 0;
        for v in c.indices() {
            if a.values()[v as usize - 1] {
                trues += 1;
            }
        }
        if trues != 1 {
            return false;
        }
    }
    true
}

#[test]
fn serialize_round_trip_on_random_formulas() {
    for seed in 0..1000u64 {
        let n = 3 + (seed % 60) as usize;
        let r = 0.2 + (seed % 9) as f64 * 0.1;
        let f = generate_random(n, r, seed).unwrap();
        let back = Formula::parse(&f.serialize()).unwrap();
        assert_eq!(back, f, "seed {seed}");
    }
}

#[test]
fn triples_are_uniform() {
    let draws = 100_000usize;
    // 20 clauses per formula at n = 5, r = 4.
    let mut counts: HashMap<[u32; 3], usize> = HashMap::new();
    let mut seen = 0;
    let mut seed = 0;
    while seen < draws {
        let f = generate_random(5, 4.0, seed).unwrap();
        for c in f.clauses().iter().take(draws - seen) {
            *counts.entry(c.indices()).or_default() += 1;
            seen += 1;
        }
        seed += 1;
    }
    assert_eq!(counts.len(), 10);
    let p = 0.1;
    let mean = draws as f64 * p;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    for (t, &c) in &counts {
        assert!((c as f64 - mean).abs() <= 5.0 * sd, "{t:?}: {c}");
    }
}

#[test]
fn occurrence_mean_matches_density() {
    let f = generate_random(1000, 0.62, 5).unwrap();
    assert_eq!(f.m(), 620);
    let occ = f.occurrence_counts();
    let mean = occ.iter().sum::<usize>() as f64 / 1000.0;
    assert!((mean - 3.0 * 620.0 / 1000.0).abs() < 1e-12);
}

#[test]
fn cnf_encoding_is_sound_and_complete() {
    for seed in 0..200u64 {
        let n = 3 + (seed % 10) as usize;
        let r = 0.3 + (seed % 7) as f64 * 0.15;
        let f = generate_random(n, r, 1000 + seed).unwrap();
        let cnf = f.to_cnf();
        assert_eq!(cnf.len(), 4 * f.m());
        for bits in 0..1u64 << n {
            let a = Assignment::from_bits(n, bits);
            assert_eq!(
                cnf_satisfied(&cnf, &a),
                f.evaluate(&a),
                "seed {seed} bits {bits:b}"
            );
        }
    }
}

#[test]
fn clause_counts_round_half_to_even() {
    assert_eq!(clause_count(4, 0.5), 2);
    assert_eq!(clause_count(3, 0.5), 2);
    assert_eq!(clause_count(5, 0.5), 2);
    assert_eq!(clause_count(7, 0.5), 4);
    assert_eq!(clause_count(1000, 0.62), 620);
}

#[test]
fn dimacs_header_counts() {
    let f = generate_random(9, 0.7, 3).unwrap();
    let text = f.to_dimacs();
    let header = text.lines().find(|l| l.starts_with("p ")).unwrap();
    assert_eq!(header, format!("p cnf 9 {}", 4 * f.m()));
}

proptest! {
    #[test]
    fn evaluate_matches_naive_count(seed in any::<u64>(), n in 3usize..20, r in 0.1f64..1.5, bits in any::<u64>()) {
        let f = generate_random(n, r, seed).unwrap();
        let a = Assignment::from_bits(n, bits);
        prop_assert_eq!(f.evaluate(&a), naive_evaluate(&f, &a));
    }

    #[test]
    fn generated_clauses_are_sorted_and_distinct(seed in any::<u64>(), n in 3usize..50, r in 0.1f64..2.0) {
        let f = generate_random(n, r, seed).unwrap();
        prop_assert_eq!(f.m(), clause_count(n, r));
        for c in f.clauses() {
            let [a, b, d] = c.indices();
            prop_assert!(1 <= a && a < b && b < d && d as usize <= n);
        }
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), n in 3usize..40) {
        prop_assert_eq!(generate_random(n, 0.6, seed).unwrap(), generate_random(n, 0.6, seed).unwrap());
    }
}
