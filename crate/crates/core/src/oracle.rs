//! Brute-force reference implementations for tests.
//!
//! Nothing here uses the closed forms or the primality back ends of the
//! main modules: classification goes through full trial factorization, row
//! entries through a separate element formula, and prime lists through a
//! plain sieve. Slow by design.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on values factorized by trial division.
pub const FACTOR_LIMIT: u128 = 1_000_000_000_000;

/// Default bound on the plain sieve.
pub const SIEVE_LIMIT: u64 = 200_000_000;

fn check_limit(v: u128) -> Result<()> {
    if v > FACTOR_LIMIT {
        return Err(Error::range(format!("value {v}"), FACTOR_LIMIT));
    }
    Ok(())
}

/// Prime factors with multiplicity, ascending.
pub fn factorize(mut v: u128) -> Result<Vec<u128>> {
    check_limit(v)?;
    let mut out = Vec::new();
    let mut d = 2u128;
    while d * d <= v {
        while v % d == 0 {
            out.push(d);
            v /= d;
        }
        d += 1;
    }
    if v > 1 {
        out.push(v);
    }
    Ok(out)
}

pub fn trial_is_prime(v: u128) -> Result<bool> {
    check_limit(v)?;
    if v < 2 {
        return Ok(false);
    }
    let mut d = 2u128;
    while d * d <= v {
        if v % d == 0 {
            return Ok(false);
        }
        d += 1;
    }
    Ok(true)
}

/// Both flags, decided independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BruteClass {
    /// Not divisible by 5 and a product of exactly two primes.
    pub defining: bool,
    /// Equal to the square of the row prime.
    pub leading: bool,
}

/// Classifies `value` as an entry of the row with prime `row_prime`.
pub fn brute_classify(value: u128, row_prime: u64) -> Result<BruteClass> {
    let factors = factorize(value)?;
    Ok(BruteClass {
        defining: value % 5 != 0 && factors.len() == 2,
        leading: value == row_prime as u128 * row_prime as u128,
    })
}

/// `n`-th prime, 1-based, by trial division.
pub fn nth_prime(n: u64) -> Result<u64> {
    let mut count = 0;
    let mut v = 1u128;
    while count < n {
        v += 1;
        if trial_is_prime(v)? {
            count += 1;
        }
    }
    Ok(v as u64)
}

/// Row entry from the floor form `p·(5 + 2⌊n/2⌋ + 4⌊(n−1)/2⌋)`.
pub fn row_entry(row_prime: u64, n: u64) -> u128 {
    let n = n as u128;
    row_prime as u128 * (5 + 2 * (n / 2) + 4 * ((n - 1) / 2))
}

/// Every 6h±1 natural `≤ x`, by enumeration.
pub fn wheel_values_upto(x: u128) -> impl Iterator<Item = u128> {
    (5..=x).filter(|v| v % 2 != 0 && v % 3 != 0)
}

pub fn brute_nu(x: u128) -> u128 {
    wheel_values_upto(x).count() as u128
}

/// Row entries up to `x`, counted by walking the row.
pub fn brute_nu_row(row_prime: u64, x: u128) -> u128 {
    let mut n = 1;
    while row_entry(row_prime, n) <= x {
        n += 1;
    }
    (n - 1) as u128
}

/// A contiguous run of one row, classified by factorization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSlice {
    pub k: u64,
    pub row_prime: u64,
    pub columns: std::ops::RangeInclusive<u64>,
    pub values: Vec<(u128, BruteClass)>,
}

impl RowSlice {
    pub fn new(k: u64, columns: std::ops::RangeInclusive<u64>) -> Result<Self> {
        if k == 0 || *columns.start() == 0 {
            return Err(Error::domain("row slices are 1-based"));
        }
        let row_prime = nth_prime(k + 2)?;
        let values = columns
            .clone()
            .map(|n| {
                let v = row_entry(row_prime, n);
                brute_classify(v, row_prime).map(|c| (v, c))
            })
            .collect::<Result<_>>()?;
        Ok(RowSlice { k, row_prime, columns, values })
    }
}

/// Smallest defining entry above `b`, searched over every row `k > 1` whose
/// leading entry is the largest one `≤ b`: walk multiples of the row prime
/// upward and factorize each.
pub fn brute_upper_defining(b: u128) -> Result<u128> {
    if b < 49 {
        return Err(Error::domain(format!("b must be ≥ 49, got {b}")));
    }
    check_limit(b)?;
    let mut p = 7u128;
    let mut candidate = 11u128;
    while candidate * candidate <= b {
        if trial_is_prime(candidate)? {
            p = candidate;
        }
        candidate += 2;
    }
    let mut v = (b / p + 1) * p;
    loop {
        let class = brute_classify(v, p as u64)?;
        if v % 2 != 0 && v % 3 != 0 && class.defining {
            return Ok(v);
        }
        v += p;
    }
}

/// Primes in the open interval `(lo, hi)`, from a plain sieve of `[0, hi)`.
pub fn brute_primes_between(lo: u64, hi: u64) -> Result<Vec<u64>> {
    if hi > SIEVE_LIMIT {
        return Err(Error::range(format!("upper end {hi}"), SIEVE_LIMIT));
    }
    let hi = hi as usize;
    let mut sieve = vec![true; hi.max(2)];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i < hi {
        if sieve[i] {
            for j in (i * i..hi).step_by(i) {
                sieve[j] = false;
            }
        }
        i += 1;
    }
    Ok((lo as usize + 1..hi)
        .filter(|&v| sieve[v])
        .map(|v| v as u64)
        .collect())
}

/// `π(x)` by the same plain sieve.
pub fn brute_pi(x: u64) -> Result<u64> {
    Ok(brute_primes_between(0, x + 1)?.len() as u64)
}
