//! Two-type branching process of the forced steps.
//!
//! The two types are positive and negative unit clauses. With a fraction `x`
//! of the variables set and scaled densities `s2`, `s3`:
//!
//! - satisfying a positive unit (setting a variable true) spawns on average
//!   `a = (6 s3 + 2 s2) / (1 - x)` negative units, two per 3-clause and one per
//!   XOR it appears in;
//! - satisfying a negative unit spawns `b = 2 s2 / (1 - x)` positive units, one
//!   per XOR it appears in.
//!
//! The largest eigenvalue of the offspring matrix is `sqrt(a b)`. While it is
//! below one the total progeny of an initial population `(p, q)` is finite:
//! `m_T = (p + b q) / (1 - a b)` variables set true and
//! `m_F = (q + a p) / (1 - a b)` set false.

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchPoint {
    /// Fraction of variables set, in `[0, 1)`.
    pub x: f64,
    pub s2: f64,
    pub s3: f64,
}

impl BranchPoint {
    pub fn new(x: f64, s2: f64, s3: f64) -> Result<Self, BranchError> {
        let p = BranchPoint { x, s2, s3 };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), BranchError> {
        if !(self.x.is_finite() && self.x < 1.0 && self.x >= 0.0) {
            return Err(BranchError::XOutOfRange(self.x));
        }
        if !(self.s2.is_finite() && self.s3.is_finite() && self.s2 >= 0.0 && self.s3 >= 0.0) {
            return Err(BranchError::NegativeDensity {
                s2: self.s2,
                s3: self.s3,
            });
        }
        Ok(())
    }
}

/// Offspring means of the two-type process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionMatrix {
    /// Negative units spawned per positive unit satisfied.
    pub a: f64,
    /// Positive units spawned per negative unit satisfied.
    pub b: f64,
}

impl TransitionMatrix {
    /// As a 2x2 matrix acting on (positive, negative) population column
    /// vectors: new positives = `b` * negatives, new negatives = `a` * positives.
    pub fn as_array(&self) -> [[f64; 2]; 2] {
        [[0.0, self.b], [self.a, 0.0]]
    }
}

/// Initial unit-clause population of a round: `(positive, negative)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeedPopulation {
    pub positive: f64,
    pub negative: f64,
}

impl SeedPopulation {
    /// A variable set true in an XOR plus its forced-false partner.
    pub const XOR_PAIR: SeedPopulation = SeedPopulation {
        positive: 1.0,
        negative: 1.0,
    };
}

/// Which offspring mean feeds which count.
///
/// `Production` follows the production rules in the module docs and gives
/// `m_F >= m_T`. `Swapped` exchanges the roles of `a` and `b`, which is what
/// placing `6 s3 + 2 s2` in the first row of a matrix acting on
/// (positive, negative) vectors would mean; with the symmetric `(1, 1)` seed it
/// simply swaps `m_T` and `m_F`. It exists for comparison only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Convention {
    #[default]
    Production,
    Swapped,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchStats {
    pub m_t: f64,
    pub m_f: f64,
    pub lambda1: f64,
}

impl BranchStats {
    pub fn total(&self) -> f64 {
        self.m_t + self.m_f
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq)]
pub enum BranchError {
    #[error("x must lie in [0, 1), got {0}")]
    XOutOfRange(f64),
    #[error("densities must be finite and non-negative, got s2={s2}, s3={s3}")]
    NegativeDensity { s2: f64, s3: f64 },
    #[error("branching process is supercritical (lambda1 = {lambda1})")]
    Supercritical { lambda1: f64 },
}

pub fn transition_matrix(p: &BranchPoint) -> Result<TransitionMatrix, BranchError> {
    p.validate()?;
    let scale = 1.0 / (1.0 - p.x);
    Ok(TransitionMatrix {
        a: (6.0 * p.s3 + 2.0 * p.s2) * scale,
        b: 2.0 * p.s2 * scale,
    })
}

/// Largest eigenvalue, `2 / (1 - x) * sqrt(s2 (s2 + 3 s3))`.
pub fn lambda1(p: &BranchPoint) -> Result<f64, BranchError> {
    p.validate()?;
    Ok(2.0 / (1.0 - p.x) * (p.s2 * (p.s2 + 3.0 * p.s3)).sqrt())
}

/// Expected true/false settings per round for the `(1, 1)` seed.
pub fn expected_sets(p: &BranchPoint) -> Result<BranchStats, BranchError> {
    expected_sets_with(p, SeedPopulation::XOR_PAIR, Convention::Production)
}

pub fn expected_sets_with(
    p: &BranchPoint,
    seed: SeedPopulation,
    convention: Convention,
) -> Result<BranchStats, BranchError> {
    let TransitionMatrix { a, b } = transition_matrix(p)?;
    let lambda1 = lambda1(p)?;
    if lambda1 >= 1.0 {
        return Err(BranchError::Supercritical { lambda1 });
    }
    let (a, b) = match convention {
        Convention::Production => (a, b),
        Convention::Swapped => (b, a),
    };
    let d = 1.0 - a * b;
    Ok(BranchStats {
        m_t: (seed.positive + b * seed.negative) / d,
        m_f: (seed.negative + a * seed.positive) / d,
        lambda1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bp(x: f64, s2: f64, s3: f64) -> BranchPoint {
        BranchPoint::new(x, s2, s3).unwrap()
    }

    #[test]
    fn matrix_examples() {
        let m = transition_matrix(&bp(0.0, 0.0, 0.4)).unwrap();
        assert!((m.a - 2.4).abs() < 1e-15 && m.b == 0.0);
        assert_eq!(
            transition_matrix(&bp(0.0, 0.5, 0.0)).unwrap(),
            TransitionMatrix { a: 1.0, b: 1.0 }
        );
        let m = transition_matrix(&bp(0.5, 0.1, 0.2)).unwrap();
        assert!((m.a - 2.8).abs() < 1e-14);
        assert!((m.b - 0.4).abs() < 1e-15);
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda1(&bp(0.3, 0.0, 0.7)).unwrap(), 0.0);
        assert_eq!(lambda1(&bp(0.0, 0.5, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn rejects_x_at_one() {
        let p = BranchPoint {
            x: 1.0,
            s2: 0.1,
            s3: 0.1,
        };
        assert_eq!(transition_matrix(&p), Err(BranchError::XOutOfRange(1.0)));
        assert_eq!(lambda1(&p), Err(BranchError::XOutOfRange(1.0)));
        assert!(BranchPoint::new(0.2, -0.1, 0.0).is_err());
    }

    #[test]
    fn expected_sets_examples() {
        let r = 0.4;
        let s = expected_sets(&bp(0.0, 0.0, r)).unwrap();
        assert_eq!(s.m_t, 1.0);
        assert!((s.m_f - (1.0 + 6.0 * r)).abs() < 1e-15);
        let s = expected_sets(&bp(0.42, 0.0, 0.0)).unwrap();
        assert_eq!((s.m_t, s.m_f), (1.0, 1.0));
    }

    #[test]
    fn supercritical_is_an_error() {
        assert!(matches!(
            expected_sets(&bp(0.0, 0.5, 0.0)),
            Err(BranchError::Supercritical { .. })
        ));
        assert!(matches!(
            expected_sets(&bp(0.0, 0.5, 0.2)),
            Err(BranchError::Supercritical { .. })
        ));
    }

    #[test]
    fn swapped_convention_exchanges_counts() {
        let p = bp(0.2, 0.1, 0.15);
        let a = expected_sets(&p).unwrap();
        let b = expected_sets_with(&p, SeedPopulation::XOR_PAIR, Convention::Swapped).unwrap();
        assert!((a.m_t - b.m_f).abs() < 1e-15 && (a.m_f - b.m_t).abs() < 1e-15);
        assert!(a.m_f >= a.m_t);
    }

    #[test]
    fn total_is_monotone_on_a_grid() {
        let x = 0.2;
        for i in 0..20 {
            for j in 0..20 {
                let s2 = 0.01 * i as f64;
                let s3 = 0.01 * j as f64;
                let here = expected_sets(&bp(x, s2, s3)).map(|s| s.total());
                let up2 = expected_sets(&bp(x, s2 + 0.005, s3)).map(|s| s.total());
                let up3 = expected_sets(&bp(x, s2, s3 + 0.005)).map(|s| s.total());
                if let (Ok(h), Ok(u)) = (here, up2) {
                    assert!(u > h, "s2 monotonicity at ({s2}, {s3})");
                }
                if let (Ok(h), Ok(u)) = (here, up3) {
                    // Without XORs a 3-clause spawns negatives that spawn nothing.
                    assert!(u > h, "s3 monotonicity at ({s2}, {s3})");
                }
            }
        }
    }

    #[test]
    fn blows_up_near_criticality() {
        // Walk along s2 at fixed s3 until lambda1 = 0.999.
        let (x, s3) = (0.1, 0.1);
        // lambda1 = 2/(1-x) sqrt(s2^2 + 3 s3 s2) = L  =>  s2^2 + 0.3 s2 - c = 0.
        let c = (0.999 * (1.0 - x) / 2.0_f64).powi(2);
        let s2 = (-3.0 * s3 + (9.0 * s3 * s3 + 4.0 * c).sqrt()) / 2.0;
        let s = expected_sets(&bp(x, s2, s3)).unwrap();
        assert!((s.lambda1 - 0.999).abs() < 1e-12);
        assert!(s.total() > 100.0);
    }

    proptest! {
        #[test]
        fn lambda_squared_is_ab(x in 0.0..0.99f64, s2 in 0.0..1.0f64, s3 in 0.0..1.0f64) {
            let p = bp(x, s2, s3);
            let m = transition_matrix(&p).unwrap();
            let l = lambda1(&p).unwrap();
            let ab = m.a * m.b;
            prop_assert!((l * l - ab).abs() <= 1e-12 * ab.max(1.0));
        }

        #[test]
        fn one_step_fixed_point(x in 0.0..0.9f64, s2 in 0.0..0.2f64, s3 in 0.0..0.3f64) {
            let p = bp(x, s2, s3);
            if let Ok(s) = expected_sets(&p) {
                let m = transition_matrix(&p).unwrap();
                let tol = 1e-10 * s.total();
                prop_assert!((s.m_t - (1.0 + m.b * s.m_f)).abs() <= tol);
                prop_assert!((s.m_f - (1.0 + m.a * s.m_t)).abs() <= tol);
                prop_assert!(s.m_t >= 1.0 && s.m_f >= 1.0);
            }
        }
    }
}
