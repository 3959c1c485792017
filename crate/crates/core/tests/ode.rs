use ec3lab::ode::{critical_r, integrate, is_feasible, max_lambda1, OdeConfig, Terminal};
use ec3lab::Policy;

/// `(max lambda1, extinction point, residual density)`. The random-variable
/// rule never removes an XOR itself, so its `s2` only decays towards zero and
/// has no extinction point.
fn summary(r: f64, policy: Policy, step: f64) -> (f64, Option<f64>, f64) {
    let t = integrate(&OdeConfig::new(r, policy).with_step(step)).unwrap();
    let (_, lmax) = max_lambda1(&t).unwrap();
    (lmax, t.extinction_x(), t.residual_density().unwrap())
}

#[test]
fn halving_the_step_changes_little() {
    for (r, policy) in [
        (0.546, Policy::SHORT_CLAUSE),
        (0.5, Policy::RANDOM_VARIABLE),
        (0.53, Policy::RANDOM_3_CLAUSE),
    ] {
        let a = summary(r, policy, 1e-5);
        let b = summary(r, policy, 5e-6);
        assert!((a.0 - b.0).abs() < 1e-4, "{policy} lambda1: {a:?} {b:?}");
        match (a.1, b.1) {
            (Some(x), Some(y)) => assert!((x - y).abs() < 1e-4, "{policy} x0: {a:?} {b:?}"),
            (None, None) => assert_eq!(policy, Policy::RANDOM_VARIABLE),
            _ => panic!("{policy}: terminal kind depends on the step"),
        }
        assert!((a.2 - b.2).abs() < 1e-4, "{policy} residual: {a:?} {b:?}");
    }
}

#[test]
fn critical_density_separates_feasible_from_infeasible() {
    let tol = 1e-4;
    for policy in [
        Policy::SHORT_CLAUSE,
        Policy::RANDOM_VARIABLE,
        Policy::RANDOM_3_CLAUSE,
    ] {
        let rc = critical_r(&policy, tol).unwrap();
        let feasible = |r: f64| is_feasible(&integrate(&OdeConfig::new(r, policy)).unwrap());
        assert!(feasible(rc - 2.0 * tol), "{policy} below {rc}");
        assert!(!feasible(rc + 2.0 * tol), "{policy} above {rc}");
        assert!(feasible(0.2) && !feasible(0.9));
    }
}

#[test]
fn s2_stays_positive_until_a_single_extinction() {
    for i in 0..=14 {
        let r = 0.2 + 0.025 * i as f64;
        let t = integrate(&OdeConfig::new(r, Policy::SHORT_CLAUSE)).unwrap();
        if !is_feasible(&t) {
            continue;
        }
        let Terminal::S2Extinct { x0, .. } = t.terminal else {
            panic!(
                "r = {r}: feasible run should end with s2 extinct, got {:?}",
                t.terminal
            );
        };
        let interior = &t.samples[1..t.samples.len() - 1];
        assert!(interior.iter().all(|s| s.s2 > 0.0), "r = {r}");
        assert!(t.samples.iter().all(|s| s.x <= x0 + 1e-12));
    }
}

#[test]
fn mixed_policy_lies_between_its_parts() {
    let rc = |p: Policy| critical_r(&p, 1e-3).unwrap();
    let mix = rc(Policy::mix([0.5, 0.5, 0.0]).unwrap());
    let (sc, rv) = (rc(Policy::SHORT_CLAUSE), rc(Policy::RANDOM_VARIABLE));
    assert!(
        mix > rv.min(sc) - 1e-3 && mix < rv.max(sc) + 1e-3,
        "{rv} {mix} {sc}"
    );
}
