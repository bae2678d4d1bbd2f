//! Open intervals with possibly infinite endpoints.

use std::fmt;

use serde::Serialize;

/// An open interval `(lo, hi)`. Any representation with `lo >= hi` is the
/// empty interval; [`Interval::EMPTY`] is the canonical one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Canonical empty interval.
    pub const EMPTY: Interval = Interval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };

    /// The working interval (-1, 1) every generator acts on.
    pub const UNIT: Interval = Interval { lo: -1.0, hi: 1.0 };

    /// Builds `(lo, hi)`, collapsing degenerate input to the empty interval.
    pub fn new(lo: f64, hi: f64) -> Interval {
        if lo < hi {
            Interval { lo, hi }
        } else {
            Interval::EMPTY
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    /// Open-interval membership.
    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// True when `other` is a subset (the empty interval is in everything).
    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.is_empty() || (self.lo <= other.lo && other.hi <= self.hi)
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// Length; zero when empty, infinite when unbounded.
    pub fn length(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "(empty)")
        } else {
            write!(f, "({}, {})", self.lo, self.hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_behaves_like_empty_set() {
        assert!(Interval::EMPTY.is_empty());
        assert!(!Interval::EMPTY.contains(0.0));
        assert_eq!(Interval::EMPTY.length(), 0.0);
        assert!(Interval::UNIT.contains_interval(&Interval::EMPTY));
        assert_eq!(Interval::new(1.0, -1.0), Interval::EMPTY);
    }

    #[test]
    fn intersection_and_containment() {
        let a = Interval::new(-0.5, 0.75);
        let b = Interval::new(0.0, 1.0);
        assert_eq!(a.intersect(&b), Interval::new(0.0, 0.75));
        assert!(Interval::UNIT.contains_interval(&a));
        assert!(!a.contains_interval(&b));
        assert!(a.intersect(&Interval::new(0.8, 0.9)).is_empty());
    }

    #[test]
    fn open_endpoints_excluded() {
        let a = Interval::new(-1.0, 1.0);
        assert!(!a.contains(-1.0));
        assert!(!a.contains(1.0));
        assert!(a.contains(0.999999));
    }
}
