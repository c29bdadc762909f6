//! Primality, prime counting and neighbour-prime search.
//!
//! Two primality back ends sit behind [`PrimalityTest`]:
//!
//! * [`MillerRabin`]: strong-pseudoprime test with the first twelve prime
//!   witnesses, deterministic for every `u64`.
//! * [`PrimeOracle`]: an odd-only segmented sieve with cumulative counts
//!   every 64 odd numbers. Lookups and `π(x)` are O(1) below the sieve limit;
//!   above it the oracle defers to Miller-Rabin for primality and refuses to
//!   count.

use crate::error::{Error, Result};
use crate::sequences::{nu, wheel};

/// Largest sieve limit accepted by [`PrimeOracle::new`]. Keeps the
/// cumulative counts inside `u32` and the bitset under ~256 MiB.
pub const MAX_SIEVE_LIMIT: u64 = 4_000_000_000;

/// Exact integer square root: the unique `r` with `r² ≤ v < (r+1)²`.
pub fn isqrt(v: u128) -> u128 {
    if v < 2 {
        return v;
    }
    // The float estimate is within a few ulps; one Newton step lands at or
    // above ⌊√v⌋, after which Newton decreases monotonically onto it.
    let mut x = ((v as f64).sqrt() as u128).max(1);
    x = (x + v / x) / 2;
    while x.checked_mul(x).is_none_or(|sq| sq > v) {
        x = (x + v / x) / 2;
    }
    x
}

/// A deterministic primality predicate.
pub trait PrimalityTest: Send + Sync {
    /// `true` iff `v` is prime. Values the implementation cannot decide
    /// exactly produce a range error.
    fn is_prime(&self, v: u128) -> Result<bool>;
}

/// Deterministic Miller-Rabin over the full `u64` range.
#[derive(Debug, Clone, Copy, Default)]
pub struct MillerRabin;

const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn miller_rabin_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl PrimalityTest for MillerRabin {
    fn is_prime(&self, v: u128) -> Result<bool> {
        let n = u64::try_from(v).map_err(|_| Error::range(format!("primality of {v}"), u64::MAX))?;
        Ok(miller_rabin_u64(n))
    }
}

/// Primality over the deterministic range of [`MillerRabin`].
pub fn is_prime(v: u128) -> Result<bool> {
    MillerRabin.is_prime(v)
}

/// Sieve-backed source of primality and `π(x)` on `[0, limit]`.
///
/// Immutable after construction and freely shareable between threads.
#[derive(Debug, Clone)]
pub struct PrimeOracle {
    limit: u64,
    /// Bit `i` set iff `2i + 1` is prime.
    odd_primes: Vec<u64>,
    /// `checkpoints[w]` = number of odd primes with bit index `< 64·w`.
    checkpoints: Vec<u32>,
}

const SEGMENT_BITS: usize = 1 << 18;

impl PrimeOracle {
    pub fn new(limit: u64) -> Result<Self> {
        if limit > MAX_SIEVE_LIMIT {
            return Err(Error::range(format!("sieve limit {limit}"), MAX_SIEVE_LIMIT));
        }
        let bits = (limit as usize).div_ceil(2).max(1);
        let words = bits.div_ceil(64);
        let mut odd_primes = vec![u64::MAX; words];
        // Clear the tail past `limit` and the number 1.
        let tail = words * 64 - bits;
        if tail > 0 {
            odd_primes[words - 1] >>= tail;
        }
        odd_primes[0] &= !1;
        if limit < 3 {
            odd_primes[0] = 0;
        }

        let root = isqrt(limit as u128) as u64;
        let base: Vec<u64> = small_odd_primes(root);
        // Next bit index to clear for each base prime, starting at p².
        let mut next: Vec<usize> = base.iter().map(|&p| (p * p / 2) as usize).collect();

        let mut seg_lo = 0usize;
        while seg_lo < bits {
            let seg_hi = (seg_lo + SEGMENT_BITS).min(bits);
            for (p, j) in base.iter().zip(next.iter_mut()) {
                let step = *p as usize;
                let mut idx = *j;
                while idx < seg_hi {
                    odd_primes[idx >> 6] &= !(1u64 << (idx & 63));
                    idx += step;
                }
                *j = idx;
            }
            seg_lo = seg_hi;
        }

        let mut checkpoints = Vec::with_capacity(words + 1);
        let mut acc = 0u32;
        for w in &odd_primes {
            checkpoints.push(acc);
            acc += w.count_ones();
        }
        checkpoints.push(acc);

        Ok(PrimeOracle {
            limit,
            odd_primes,
            checkpoints,
        })
    }

    /// Inclusive upper bound of the sieved range.
    pub fn limit(&self) -> u64 {
        self.limit
    }

    fn covers(&self, v: u128) -> bool {
        v <= self.limit as u128
    }

    /// Sieve lookup. Errors for `v` past the limit.
    pub fn lookup(&self, v: u128) -> Result<bool> {
        if !self.covers(v) {
            return Err(Error::range(format!("sieve lookup of {v}"), self.limit));
        }
        let v = v as u64;
        if v == 2 {
            return Ok(true);
        }
        if v % 2 == 0 {
            return Ok(false);
        }
        let i = (v / 2) as usize;
        Ok(self.odd_primes[i >> 6] >> (i & 63) & 1 == 1)
    }

    /// `π(x)`: number of primes `≤ x`.
    pub fn pi(&self, x: u128) -> Result<u64> {
        if !self.covers(x) {
            return Err(Error::range(format!("pi({x})"), self.limit));
        }
        if x < 2 {
            return Ok(0);
        }
        let i = ((x - 1) / 2) as usize;
        let w = i >> 6;
        let mask = if i & 63 == 63 {
            u64::MAX
        } else {
            (1u64 << ((i & 63) + 1)) - 1
        };
        let odd = self.checkpoints[w] as u64 + (self.odd_primes[w] & mask).count_ones() as u64;
        Ok(odd + 1)
    }

    /// Number of leading elements `p²(k)` (rows `k ≥ 1`, i.e. primes `≥ 5`)
    /// that are `≤ x`.
    pub fn pi_leading(&self, x: u128) -> Result<u64> {
        Ok(self.pi(isqrt(x))?.saturating_sub(2))
    }

    /// All primes `≤ limit` in increasing order.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        let two = (self.limit >= 2).then_some(2u64);
        two.into_iter().chain(
            self.odd_primes
                .iter()
                .enumerate()
                .flat_map(|(w, &word)| BitIter(word).map(move |b| (((w << 6) + b) * 2 + 1) as u64)),
        )
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}

/// Odd primes up to `n` with a plain sieve; only used for sieving primes.
fn small_odd_primes(n: u64) -> Vec<u64> {
    let n = n as usize;
    if n < 3 {
        return Vec::new();
    }
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    let mut p = 3;
    while p <= n {
        if !composite[p] {
            out.push(p as u64);
            let mut q = p * p;
            while q <= n {
                composite[q] = true;
                q += 2 * p;
            }
        }
        p += 2;
    }
    out
}

impl PrimalityTest for PrimeOracle {
    /// Sieve lookup inside the limit, Miller-Rabin above it.
    fn is_prime(&self, v: u128) -> Result<bool> {
        if self.covers(v) {
            self.lookup(v)
        } else {
            MillerRabin.is_prime(v)
        }
    }
}

/// Largest prime `p` with `lo < p < hi`, or `None` if there is none.
///
/// Walks the 6h±1 candidates `f(n̄), f(n̄−1), …` downward from `hi`, so
/// multiples of 2 and 3 are never tested. 2 and 3 are handled separately.
pub fn prev_prime_in(test: &dyn PrimalityTest, lo: u128, hi: u128) -> Result<Option<u128>> {
    if lo >= hi {
        return Err(Error::domain(format!("empty interval ({lo}, {hi})")));
    }
    let mut n = nu(hi - 1);
    while n >= 1 {
        let col = u64::try_from(n).map_err(|_| Error::range(format!("column {n}"), u64::MAX))?;
        let v = wheel(col);
        if v <= lo {
            break;
        }
        if test.is_prime(v)? {
            return Ok(Some(v));
        }
        n -= 1;
    }
    Ok([3u128, 2].into_iter().find(|&p| lo < p && p < hi))
}

/// Smallest prime `p` with `lo < p < hi`, or `None`.
pub fn next_prime_in(test: &dyn PrimalityTest, lo: u128, hi: u128) -> Result<Option<u128>> {
    if lo >= hi {
        return Err(Error::domain(format!("empty interval ({lo}, {hi})")));
    }
    if let Some(p) = [2u128, 3].into_iter().find(|&p| lo < p && p < hi) {
        return Ok(Some(p));
    }
    let mut n = nu(lo) + 1;
    loop {
        let col = u64::try_from(n).map_err(|_| Error::range(format!("column {n}"), u64::MAX))?;
        let v = wheel(col);
        if v >= hi {
            return Ok(None);
        }
        if test.is_prime(v)? {
            return Ok(Some(v));
        }
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(v: u64) -> bool {
        v >= 2 && (2..).take_while(|d| d * d <= v).all(|d| v % d != 0)
    }

    #[test]
    fn isqrt_examples() {
        assert_eq!(isqrt(0), 0);
        assert_eq!(isqrt(1), 1);
        assert_eq!(isqrt(11449), 107);
        assert_eq!(isqrt(11448), 106);
        assert_eq!(isqrt(u128::MAX), u64::MAX as u128);
        let big = (1u128 << 64) - 1;
        assert_eq!(isqrt(big * big), big);
        assert_eq!(isqrt(big * big - 1), big - 1);
    }

    #[test]
    fn miller_rabin_examples() {
        assert!(is_prime(97).unwrap());
        assert!(!is_prime(1).unwrap());
        assert!(!is_prime(217).unwrap());
        assert!(is_prime(18_446_744_073_709_551_557).unwrap());
        // strong pseudoprime to bases 2..=37 would need > 3.3e24; these fool small bases
        assert!(!is_prime(3_215_031_751).unwrap());
        assert!(!is_prime(3_825_123_056_546_413_051).unwrap());
        assert!(matches!(is_prime(1u128 << 64), Err(Error::Range { .. })));
    }

    #[test]
    fn miller_rabin_matches_trial_division() {
        for v in 0..20_000u64 {
            assert_eq!(is_prime(v as u128).unwrap(), trial(v), "v = {v}");
        }
    }

    #[test]
    fn oracle_small_limits() {
        for limit in 0..40u64 {
            let o = PrimeOracle::new(limit).unwrap();
            for v in 0..=limit {
                assert_eq!(o.lookup(v as u128).unwrap(), trial(v), "limit {limit} v {v}");
                let count = (0..=v).filter(|&x| trial(x)).count() as u64;
                assert_eq!(o.pi(v as u128).unwrap(), count);
            }
            assert!(o.lookup(limit as u128 + 1).is_err());
            assert_eq!(o.primes().count() as u64, o.pi(limit as u128).unwrap());
        }
    }

    #[test]
    fn oracle_agrees_with_trial_division() {
        let o = PrimeOracle::new(300_000).unwrap();
        let mut count = 0;
        for v in 0..=300_000u64 {
            let p = trial(v);
            count += p as u64;
            assert_eq!(o.lookup(v as u128).unwrap(), p);
            assert_eq!(o.pi(v as u128).unwrap(), count);
        }
    }

    #[test]
    fn pi_examples() {
        let o = PrimeOracle::new(1000).unwrap();
        assert_eq!(o.pi(97).unwrap(), 25);
        assert_eq!(o.pi(107).unwrap(), 28);
        assert_eq!(o.pi(1).unwrap(), 0);
        assert_eq!(o.pi(2).unwrap(), 1);
        assert!(matches!(o.pi(1001), Err(Error::Range { .. })));
    }

    #[test]
    fn pi_leading_examples() {
        let o = PrimeOracle::new(1000).unwrap();
        assert_eq!(o.pi_leading(24).unwrap(), 0);
        assert_eq!(o.pi_leading(25).unwrap(), 1);
        assert_eq!(o.pi_leading(10_000).unwrap(), 23);
        assert_eq!(o.pi_leading(121).unwrap(), 3);
        assert!(o.pi_leading(1002 * 1002).is_err());
    }

    #[test]
    fn prev_prime_examples() {
        let t = MillerRabin;
        assert_eq!(prev_prime_in(&t, 81, 100).unwrap(), Some(97));
        assert_eq!(prev_prime_in(&t, 25, 36).unwrap(), Some(31));
        assert_eq!(prev_prime_in(&t, 16, 25).unwrap(), Some(23));
        assert_eq!(prev_prime_in(&t, 113, 127).unwrap(), None);
        assert_eq!(prev_prime_in(&t, 0, 5).unwrap(), Some(3));
        assert_eq!(prev_prime_in(&t, 0, 3).unwrap(), Some(2));
        assert!(prev_prime_in(&t, 5, 5).is_err());
    }

    #[test]
    fn next_prime_examples() {
        let t = MillerRabin;
        assert_eq!(next_prime_in(&t, 100, 121).unwrap(), Some(101));
        assert_eq!(next_prime_in(&t, 31, 49).unwrap(), Some(37));
        assert_eq!(next_prime_in(&t, 113, 127).unwrap(), None);
        assert_eq!(next_prime_in(&t, 0, 10).unwrap(), Some(2));
    }

    #[test]
    fn oracle_falls_back_above_limit() {
        let o = PrimeOracle::new(100).unwrap();
        assert!(o.is_prime(101).unwrap());
        assert!(!o.is_prime(1001).unwrap());
        assert!(PrimeOracle::new(MAX_SIEVE_LIMIT + 1).is_err());
    }
}
