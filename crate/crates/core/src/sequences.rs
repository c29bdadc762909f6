//! The sequences the matrix is built from.
//!
//! Columns are indexed by the wheel sequence `f(n)` of all naturals of the
//! form 6h±1 (5, 7, 11, 13, …); rows by the primes `p(k) = p_{k+2}`
//! (5, 7, 11, …). The entry in row `k`, column `n` is `p(k)·f(n)`.
//!
//! Every count here is exact integer arithmetic. Real arguments are floored
//! on entry, which does not change any count of integers `≤ x`.

use std::fmt;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::PrimeOracle;

/// Position of an entry: row `k ≥ 1`, column `n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatrixIndex {
    pub k: u64,
    pub n: u64,
}

impl MatrixIndex {
    pub fn new(k: u64, n: u64) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::domain(format!("matrix index ({k};{n}) must be 1-based")));
        }
        Ok(MatrixIndex { k, n })
    }
}

impl fmt::Display for MatrixIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};{})", self.k, self.n)
    }
}

/// A natural of the form 6h±1 with h ≥ 1, together with its column number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct WheelNumber {
    value: u128,
    ordinal: u64,
}

impl WheelNumber {
    pub fn new(value: u128) -> Result<Self> {
        if value < 5 || !matches!(value % 6, 1 | 5) {
            return Err(Error::domain(format!("{value} is not of the form 6h±1 with h ≥ 1")));
        }
        let ordinal = column_index(nu(value))?;
        Ok(WheelNumber { value, ordinal })
    }

    pub fn at(ordinal: u64) -> Result<Self> {
        if ordinal == 0 {
            return Err(Error::domain("wheel ordinal must be ≥ 1"));
        }
        Ok(WheelNumber {
            value: wheel(ordinal),
            ordinal,
        })
    }

    pub fn value(self) -> u128 {
        self.value
    }

    pub fn ordinal(self) -> u64 {
        self.ordinal
    }
}

/// `f(n) = 3n + (3 − (−1)ⁿ)/2`: 3n+2 for odd n, 3n+1 for even n.
///
/// `n` must be ≥ 1. Cannot overflow: `3·u64::MAX + 2 < 2¹²⁸`.
#[inline]
pub const fn wheel(n: u64) -> u128 {
    assert!(n >= 1, "wheel index is 1-based");
    3 * n as u128 + if n % 2 == 1 { 2 } else { 1 }
}

/// Number of 6h±1 naturals (h ≥ 1) that are `≤ x`.
///
/// `⌊(x+2)/3⌋ − ⌊(x mod 6)/4⌋ + ⌊(x mod 6)/5⌋ − 1`, with `ν(0) = 0`.
#[inline]
pub const fn nu(x: u128) -> u128 {
    if x == 0 {
        return 0;
    }
    let r = x % 6;
    // x ≥ 1 ⇒ ⌊(x+2)/3⌋ ≥ 1 and the −r/4 term only fires for r ∈ {4, 5},
    // where ⌊(x+2)/3⌋ ≥ 2; the expression never goes negative.
    x / 3 + (x % 3 + 2) / 3 - r / 4 + r / 5 - 1
}

/// `C(m) = ν(m) + 1` for `m ≥ 5`: the count including 0 as a placeholder.
pub fn capacity(m: u128) -> Result<u128> {
    if m < 5 {
        return Err(Error::domain(format!("C(m) requires m ≥ 5, got {m}")));
    }
    Ok(nu(m) + 1)
}

/// Floors a non-negative real argument for the counting functions.
pub fn floor_real(x: f64) -> Result<u128> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(format!("expected a finite real ≥ 0, got {x}")));
    }
    if x >= u128::MAX as f64 {
        return Err(Error::range(format!("real argument {x}"), u128::MAX));
    }
    Ok(x.floor() as u128)
}

/// Number of entries of the row with prime `row_prime` that are `≤ x`.
#[inline]
pub fn nu_in_row(row_prime: u64, x: u128) -> u128 {
    nu(x / row_prime as u128)
}

pub(crate) fn column_index(n: u128) -> Result<u64> {
    u64::try_from(n).map_err(|_| Error::range(format!("column {n}"), u64::MAX))
}

/// Default ceiling on row indices served by a [`PrimeTable`].
pub const DEFAULT_MAX_ROW: u64 = 10_000_000;

/// The row primes `p(k) = p_{k+2}`, grown on demand up to a ceiling.
///
/// Reads take a shared lock; growth takes the exclusive lock and re-sieves to
/// at least double the previous bound.
#[derive(Debug)]
pub struct PrimeTable {
    max_row: u64,
    /// All primes in increasing order, starting 2, 3, 5, …
    primes: RwLock<Vec<u64>>,
}

impl Default for PrimeTable {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_ROW)
    }
}

impl PrimeTable {
    pub fn new(max_row: u64) -> Self {
        PrimeTable {
            max_row,
            primes: RwLock::new(vec![2, 3, 5, 7, 11, 13]),
        }
    }

    pub fn max_row(&self) -> u64 {
        self.max_row
    }

    fn grow_to_value(&self, bound: u64) -> Result<()> {
        if self.primes.read().unwrap().last().is_some_and(|&p| p >= bound) {
            return Ok(());
        }
        let mut guard = self.primes.write().unwrap();
        let have = *guard.last().unwrap();
        if have >= bound {
            return Ok(());
        }
        let target = bound.max(have.saturating_mul(2));
        *guard = PrimeOracle::new(target)?.primes().collect();
        Ok(())
    }

    fn grow_to_count(&self, count: usize) -> Result<()> {
        loop {
            let (len, last) = {
                let g = self.primes.read().unwrap();
                (g.len(), *g.last().unwrap())
            };
            if len >= count {
                return Ok(());
            }
            // p_n < n(ln n + ln ln n) for n ≥ 6.
            let n = count.max(6) as f64;
            let estimate = (n * (n.ln() + n.ln().ln())).ceil() as u64 + 16;
            self.grow_to_value(estimate.max(last + 1))?;
        }
    }

    /// `p(k)`, the (k+2)-th prime. `p(1) = 5`, `p(2) = 7`.
    pub fn row_prime(&self, k: u64) -> Result<u64> {
        if k == 0 {
            return Err(Error::domain("row index must be ≥ 1"));
        }
        if k > self.max_row {
            return Err(Error::range(format!("row index {k}"), self.max_row));
        }
        let idx = (k + 1) as usize;
        self.grow_to_count(idx + 1)?;
        Ok(self.primes.read().unwrap()[idx])
    }

    /// Inverse of [`row_prime`](Self::row_prime): the `k` with `p(k) = p`.
    pub fn row_of(&self, p: u64) -> Result<u64> {
        if p < 5 {
            return Err(Error::domain(format!("{p} is not a row prime (primes ≥ 5)")));
        }
        self.grow_to_value(p)?;
        let guard = self.primes.read().unwrap();
        match guard.binary_search(&p) {
            Ok(i) => {
                let k = i as u64 - 1;
                if k > self.max_row {
                    Err(Error::range(format!("row index {k}"), self.max_row))
                } else {
                    Ok(k)
                }
            }
            Err(_) => Err(Error::domain(format!("{p} is not prime"))),
        }
    }

    /// `a(k;n) = p(k)·f(n)`.
    pub fn element(&self, idx: MatrixIndex) -> Result<u128> {
        let p = self.row_prime(idx.k)? as u128;
        p.checked_mul(wheel(idx.n))
            .ok_or_else(|| Error::range(format!("a{idx}"), u128::MAX))
    }

    /// `ν_k(x)`: entries of row `k` that are `≤ x`.
    pub fn nu_row(&self, k: u64, x: u128) -> Result<u128> {
        Ok(nu_in_row(self.row_prime(k)?, x))
    }

    /// `#_k(a)`: the column of `a` within row `k`.
    pub fn column_of(&self, k: u64, a: u128) -> Result<u64> {
        let p = self.row_prime(k)? as u128;
        let q = a / p;
        if a % p != 0 || q < 5 || !matches!(q % 6, 1 | 5) {
            return Err(Error::NotInRow { value: a, row: k });
        }
        column_index(nu(q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wheel_examples() {
        assert_eq!(wheel(1), 5);
        assert_eq!(wheel(32), 97);
        assert_eq!(wheel(35), 107);
        let first: Vec<u128> = (1..=8).map(wheel).collect();
        assert_eq!(first, [5, 7, 11, 13, 17, 19, 23, 25]);
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu(100), 32);
        for m in 0..=4 {
            assert_eq!(nu(m), 0);
        }
        assert_eq!(nu(25), 8);
        // u128::MAX ≡ 3 (mod 6)
        assert_eq!(nu(u128::MAX), u128::MAX / 3 - 1);
    }

    #[test]
    fn nu_matches_floor_form() {
        // ⌊(m+2)/3⌋ written directly, for m small enough not to overflow
        for m in 1..10_000u128 {
            let direct = (m + 2) / 3 - (m % 6) / 4 + (m % 6) / 5 - 1;
            assert_eq!(nu(m), direct);
        }
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(capacity(103).unwrap(), 35);
        assert_eq!(capacity(5).unwrap(), 2);
        assert_eq!(capacity(11).unwrap(), 4);
        assert!(matches!(capacity(4), Err(Error::Domain(_))));
    }

    #[test]
    fn floor_real_rejects_bad_input() {
        assert_eq!(floor_real(24.9).unwrap(), 24);
        assert!(floor_real(-0.5).is_err());
        assert!(floor_real(f64::NAN).is_err());
    }

    #[test]
    fn row_prime_examples() {
        let t = PrimeTable::default();
        assert_eq!(t.row_prime(1).unwrap(), 5);
        assert_eq!(t.row_prime(2).unwrap(), 7);
        assert_eq!(t.row_prime(23).unwrap(), 97);
        assert_eq!(t.row_prime(9).unwrap(), 31);
        assert_eq!(t.row_prime(1000).unwrap(), 7933);
        assert_eq!(t.row_of(97).unwrap(), 23);
        assert_eq!(t.row_of(107).unwrap(), 26);
        assert!(t.row_of(91).is_err());
        assert!(t.row_of(3).is_err());
    }

    #[test]
    fn row_ceiling_is_reported() {
        let t = PrimeTable::new(10);
        assert_eq!(t.row_prime(10).unwrap(), 37);
        let err = t.row_prime(11).unwrap_err();
        assert_eq!(
            err,
            Error::Range {
                what: "row index 11".into(),
                limit: "10".into()
            }
        );
        assert!(t.row_of(41).is_err());
    }

    #[test]
    fn element_examples() {
        let t = PrimeTable::default();
        assert_eq!(t.element(MatrixIndex::new(1, 1).unwrap()).unwrap(), 25);
        assert_eq!(t.element(MatrixIndex::new(23, 35).unwrap()).unwrap(), 10379);
        assert_eq!(t.element(MatrixIndex::new(2, 3).unwrap()).unwrap(), 77);
        assert!(MatrixIndex::new(0, 3).is_err());
    }

    #[test]
    fn nu_row_examples() {
        let t = PrimeTable::default();
        assert_eq!(t.nu_row(2, 100).unwrap(), 4);
        assert_eq!(t.nu_row(1, floor_real(24.9).unwrap()).unwrap(), 0);
        assert_eq!(t.nu_row(23, 10_000).unwrap(), 34);
    }

    #[test]
    fn column_of_examples() {
        let t = PrimeTable::default();
        assert_eq!(t.column_of(2, 49).unwrap(), 2);
        assert_eq!(t.column_of(23, 10379).unwrap(), 35);
        assert_eq!(t.column_of(1, 25).unwrap(), 1);
        assert!(matches!(t.column_of(2, 50), Err(Error::NotInRow { .. })));
        assert!(matches!(t.column_of(2, 21), Err(Error::NotInRow { .. })));
        assert!(matches!(t.column_of(2, 7 * 9), Err(Error::NotInRow { .. })));
    }

    #[test]
    fn wheel_number_round_trip() {
        let w = WheelNumber::new(97).unwrap();
        assert_eq!(w.ordinal(), 32);
        assert_eq!(WheelNumber::at(32).unwrap(), w);
        assert!(WheelNumber::new(9).is_err());
        assert!(WheelNumber::new(1).is_err());
    }
}
