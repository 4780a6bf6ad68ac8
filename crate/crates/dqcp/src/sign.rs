//! The sign lattice used for sign propagation.
//!
//! Order: `zero ⊑ nonnegative`, `zero ⊑ nonpositive`, `positive ⊑ nonnegative`,
//! `negative ⊑ nonpositive`, and everything `⊑ unknown`. `join` is the least
//! upper bound. Strict signs (positive, negative) come only from variable
//! declarations and constants; they are never inferred from constraints.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Zero,
    Positive,
    Nonnegative,
    Negative,
    Nonpositive,
    Unknown,
}

/// (can be negative, can be zero, can be positive)
type Triple = (bool, bool, bool);

impl Sign {
    fn triple(self) -> Triple {
        match self {
            Sign::Zero => (false, true, false),
            Sign::Positive => (false, false, true),
            Sign::Nonnegative => (false, true, true),
            Sign::Negative => (true, false, false),
            Sign::Nonpositive => (true, true, false),
            Sign::Unknown => (true, true, true),
        }
    }

    fn from_triple(t: Triple) -> Sign {
        match t {
            (false, _, false) => Sign::Zero,
            (false, false, true) => Sign::Positive,
            (false, true, true) => Sign::Nonnegative,
            (true, false, false) => Sign::Negative,
            (true, true, false) => Sign::Nonpositive,
            // "nonzero" is not representable; round up.
            (true, false, true) | (true, true, true) => Sign::Unknown,
        }
    }

    /// Lattice order: does `self` denote a subset of `other`?
    pub fn leq(self, other: Sign) -> bool {
        let (an, az, ap) = self.triple();
        let (bn, bz, bp) = other.triple();
        (!an || bn) && (!az || bz) && (!ap || bp)
    }

    /// Least upper bound.
    pub fn join(self, other: Sign) -> Sign {
        let (an, az, ap) = self.triple();
        let (bn, bz, bp) = other.triple();
        Sign::from_triple((an || bn, az || bz, ap || bp))
    }

    pub fn is_nonnegative(self) -> bool {
        self.leq(Sign::Nonnegative)
    }

    pub fn is_nonpositive(self) -> bool {
        self.leq(Sign::Nonpositive)
    }

    pub fn is_strictly_positive(self) -> bool {
        self == Sign::Positive
    }

    pub fn is_strictly_negative(self) -> bool {
        self == Sign::Negative
    }

    /// Does the sign set contain the given value?
    pub fn contains(self, v: f64) -> bool {
        let (n, z, p) = self.triple();
        if v > 0.0 {
            p
        } else if v < 0.0 {
            n
        } else {
            z
        }
    }

    pub fn negate(self) -> Sign {
        let (n, z, p) = self.triple();
        Sign::from_triple((p, z, n))
    }

    pub fn add(self, other: Sign) -> Sign {
        let a = self.triple();
        let b = other.triple();
        let pos = a.2 || b.2;
        let neg = a.0 || b.0;
        let zero = (a.1 && b.1) || (a.2 && b.0) || (a.0 && b.2);
        Sign::from_triple((neg, zero, pos))
    }

    pub fn mul(self, other: Sign) -> Sign {
        let a = self.triple();
        let b = other.triple();
        let pos = (a.2 && b.2) || (a.0 && b.0);
        let neg = (a.2 && b.0) || (a.0 && b.2);
        let zero = a.1 || b.1;
        Sign::from_triple((neg, zero, pos))
    }

    /// Sign of a quotient. Unknown when the denominator may be zero.
    pub fn div(self, denom: Sign) -> Sign {
        let (dn, dz, dp) = denom.triple();
        if dz {
            return Sign::Unknown;
        }
        let a = self.triple();
        let pos = (a.2 && dp) || (a.0 && dn);
        let neg = (a.2 && dn) || (a.0 && dp);
        let zero = a.1;
        Sign::from_triple((neg, zero, pos))
    }

    pub fn max(self, other: Sign) -> Sign {
        let a = self.triple();
        let b = other.triple();
        let pos = a.2 || b.2;
        let neg = a.0 && b.0;
        let zero = (a.1 && (b.1 || b.0)) || (b.1 && (a.1 || a.0));
        Sign::from_triple((neg, zero, pos))
    }

    pub fn min(self, other: Sign) -> Sign {
        self.negate().max(other.negate()).negate()
    }

    pub fn abs(self) -> Sign {
        let (n, z, p) = self.triple();
        Sign::from_triple((false, z, p || n))
    }

    pub fn of_value(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    /// Joint sign of a collection of entries.
    pub fn of_values(vs: &[f64]) -> Sign {
        vs.iter()
            .map(|&v| Sign::of_value(v))
            .reduce(Sign::join)
            .unwrap_or(Sign::Zero)
    }

    pub fn name(self) -> &'static str {
        match self {
            Sign::Zero => "zero",
            Sign::Positive => "positive",
            Sign::Nonnegative => "nonnegative",
            Sign::Negative => "negative",
            Sign::Nonpositive => "nonpositive",
            Sign::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Sign; 6] = [
        Sign::Zero,
        Sign::Positive,
        Sign::Nonnegative,
        Sign::Negative,
        Sign::Nonpositive,
        Sign::Unknown,
    ];

    #[test]
    fn lattice_order() {
        assert!(Sign::Zero.leq(Sign::Nonnegative));
        assert!(Sign::Zero.leq(Sign::Nonpositive));
        assert!(Sign::Positive.leq(Sign::Nonnegative));
        assert!(Sign::Negative.leq(Sign::Nonpositive));
        for s in ALL {
            assert!(s.leq(Sign::Unknown));
            assert!(s.leq(s));
        }
        assert!(!Sign::Nonnegative.leq(Sign::Positive));
        assert!(!Sign::Positive.leq(Sign::Nonpositive));
    }

    #[test]
    fn join_is_least_upper_bound() {
        for a in ALL {
            for b in ALL {
                let j = a.join(b);
                assert!(a.leq(j) && b.leq(j), "{a} join {b} = {j}");
                // No strictly smaller upper bound exists.
                for c in ALL {
                    if a.leq(c) && b.leq(c) {
                        assert!(j.leq(c), "{a} join {b}: {j} vs {c}");
                    }
                }
            }
        }
        assert_eq!(Sign::Positive.join(Sign::Zero), Sign::Nonnegative);
        assert_eq!(Sign::Nonnegative.join(Sign::Nonpositive), Sign::Unknown);
    }

    #[test]
    fn arithmetic_tables() {
        assert_eq!(Sign::Positive.add(Sign::Nonnegative), Sign::Positive);
        assert_eq!(Sign::Positive.add(Sign::Negative), Sign::Unknown);
        assert_eq!(Sign::Nonnegative.mul(Sign::Nonpositive), Sign::Nonpositive);
        assert_eq!(Sign::Negative.mul(Sign::Negative), Sign::Positive);
        assert_eq!(Sign::Zero.mul(Sign::Unknown), Sign::Zero);
        assert_eq!(Sign::Nonnegative.div(Sign::Positive), Sign::Nonnegative);
        assert_eq!(Sign::Positive.div(Sign::Negative), Sign::Negative);
        assert_eq!(Sign::Positive.div(Sign::Nonnegative), Sign::Unknown);
        assert_eq!(Sign::Positive.max(Sign::Unknown), Sign::Positive);
        assert_eq!(Sign::Negative.min(Sign::Unknown), Sign::Negative);
        assert_eq!(Sign::Unknown.abs(), Sign::Nonnegative);
        assert_eq!(Sign::Negative.abs(), Sign::Positive);
    }

    /// Sampled soundness: the abstract result contains every concrete result.
    #[test]
    fn soundness_by_sampling() {
        let samples = |s: Sign| -> Vec<f64> {
            match s {
                Sign::Zero => vec![0.0],
                Sign::Positive => vec![0.5, 2.0, 17.0],
                Sign::Nonnegative => vec![0.0, 0.5, 3.0],
                Sign::Negative => vec![-0.5, -2.0, -17.0],
                Sign::Nonpositive => vec![0.0, -0.5, -3.0],
                Sign::Unknown => vec![-2.0, 0.0, 1.5],
            }
        };
        for a in ALL {
            for b in ALL {
                for &x in &samples(a) {
                    for &y in &samples(b) {
                        assert!(a.add(b).contains(x + y), "{a}+{b} at {x},{y}");
                        assert!(a.mul(b).contains(x * y), "{a}*{b} at {x},{y}");
                        if y != 0.0 {
                            assert!(a.div(b).contains(x / y), "{a}/{b} at {x},{y}");
                        }
                        assert!(a.max(b).contains(x.max(y)), "max({a},{b})");
                        assert!(a.min(b).contains(x.min(y)), "min({a},{b})");
                    }
                    assert!(a.negate().contains(-x));
                    assert!(a.abs().contains(x.abs()));
                }
            }
        }
    }

    #[test]
    fn constant_signs() {
        assert_eq!(Sign::of_values(&[1.9]), Sign::Positive);
        assert_eq!(Sign::of_values(&[0.0]), Sign::Zero);
        assert_eq!(Sign::of_values(&[-1.0, 2.0]), Sign::Unknown);
        assert_eq!(Sign::of_values(&[0.0, 2.0]), Sign::Nonnegative);
        assert_eq!(Sign::of_values(&[-1.0, 0.0]), Sign::Nonpositive);
    }
}
