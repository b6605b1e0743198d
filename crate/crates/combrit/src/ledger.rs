//! Instrumented operation counters.
//!
//! A [`FlopLedger`] rides along a single traced computation and tallies
//! scalar multiplications, additions/subtractions, divisions, comparisons and
//! element swaps. The counts feed the closed-form complexity checks in
//! [`crate::flops`].
//!
//! Counting conventions (they matter for the exact-match checks):
//!
//! - A dot product of k terms costs k multiplications and k-1 additions.
//! - The column-recursive triangular updates accumulate over a *seeded* sum:
//!   the leading term has coefficient one (unit diagonal, or a diagonal whose
//!   reciprocal is applied at the end), so it initializes the accumulator and
//!   neither its multiplication nor its fold is tallied. A seeded sum over k
//!   products therefore costs k multiplications and k-1 additions on top of
//!   the free seed.
//! - Negation is never counted.
//! - Scaling by a precomputed reciprocal of a pivot is tallied as a division
//!   (one division-equivalent per produced entry).

use serde::Serialize;

/// Monotone counters for one traced computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlopLedger {
    pub mul: u64,
    pub addsub: u64,
    pub div: u64,
    pub cmp: u64,
    pub swap: u64,
}

impl FlopLedger {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn mul(&mut self, n: u64) {
        self.mul += n;
    }

    #[inline]
    pub fn addsub(&mut self, n: u64) {
        self.addsub += n;
    }

    #[inline]
    pub fn div(&mut self, n: u64) {
        self.div += n;
    }

    #[inline]
    pub fn cmp(&mut self, n: u64) {
        self.cmp += n;
    }

    #[inline]
    pub fn swap(&mut self, n: u64) {
        self.swap += n;
    }

    /// Combined mul + addsub + div, the paper's "flops combined" convention.
    pub fn total(&self) -> u64 {
        self.mul + self.addsub + self.div
    }

    pub fn merge(&mut self, other: &FlopLedger) {
        self.mul += other.mul;
        self.addsub += other.addsub;
        self.div += other.div;
        self.cmp += other.cmp;
        self.swap += other.swap;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_combine_arithmetic_counters_only() {
        let mut l = FlopLedger::new();
        l.mul(3);
        l.addsub(2);
        l.div(1);
        l.cmp(10);
        l.swap(4);
        assert_eq!(l.total(), 6);
    }

    #[test]
    fn merge_accumulates() {
        let mut a = FlopLedger::new();
        a.mul(1);
        let mut b = FlopLedger::new();
        b.mul(2);
        b.swap(5);
        a.merge(&b);
        assert_eq!(a.mul, 3);
        assert_eq!(a.swap, 5);
    }
}
