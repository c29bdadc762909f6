//! Classification of matrix entries and the neighbour operators.
//!
//! An entry `p(k)·f(n)` is *defining* when it is a product of two primes and
//! not divisible by 5; for `k, n > 1` that is exactly "`f(n)` is a prime
//! above 5", so classification costs one primality test. The entry is
//! *leading* when `f(n) = p(k)`. Leading entries of rows `k > 1` are
//! defining and take part in every min/max scan; the row-1 leading entry 25
//! is not defining.
//!
//! The neighbour operators come in four flavours:
//!
//! | | strictly above `b` | strictly below `b` |
//! |---|---|---|
//! | defining entries | `D`, `D_k` | `d`, `d_k` |
//! | all entries | `W`, `W_k` | `w`, `w_k` |
//!
//! The row variants scan one given row. The global variants first pick the
//! row whose leading entry is the largest one `≤ b` (upper) or `< b` (lower)
//! among rows `k > 1`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::{isqrt, prev_prime_in, MillerRabin, PrimalityTest, PrimeOracle};
use crate::sequences::{column_index, nu, nu_in_row, wheel, MatrixIndex, PrimeTable};

/// Default budget of columns a single row scan may visit.
pub const DEFAULT_COLUMN_CEILING: u64 = 10_000_000;

/// Smallest `b` accepted by the global upper operators `D`/`W` (`b ≥ 49`).
pub const UPPER_THRESHOLD: u128 = 49;

/// One classified matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TElement {
    #[serde(with = "crate::decimal")]
    pub value: u128,
    pub k: u64,
    pub n: u64,
    pub p_k: u64,
    #[serde(with = "crate::decimal")]
    pub f_n: u128,
    pub is_defining: bool,
    pub is_leading: bool,
}

impl TElement {
    pub fn index(&self) -> MatrixIndex {
        MatrixIndex { k: self.k, n: self.n }
    }

    /// `p²(k)` of the element's row.
    pub fn leading_value(&self) -> u128 {
        self.p_k as u128 * self.p_k as u128
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Down,
    Up,
}

/// A defining value `p·q` seen from both rows that contain it.
///
/// `small_prime = p < q = large_prime`. In the row of `p` the value sits
/// `h` wheel steps of `2p` after `p²`; in the row of `q` it sits the same
/// `h` steps of `2q` before `q²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub direction: Direction,
    pub source: MatrixIndex,
    pub target: MatrixIndex,
    #[serde(with = "crate::decimal")]
    pub value: u128,
    #[serde(with = "crate::decimal")]
    pub h: u128,
    pub small_prime: u64,
    pub large_prime: u64,
}

impl Transition {
    /// Verifies `p² + 2h·p = a`, `a + 2h·q = q²` and `a/p − p = q − a/q`.
    pub fn check(&self) -> Result<()> {
        let p = self.small_prime as u128;
        let q = self.large_prime as u128;
        let a = self.value;
        let ok = p * p + 2 * self.h * p == a
            && a + 2 * self.h * q == q * q
            && a % p == 0
            && a % q == 0
            && a / p - p == q - a / q;
        if ok {
            Ok(())
        } else {
            Err(Error::inconsistency(format!("transition identities fail for {self:?}")))
        }
    }
}

/// `D_k(p²(k)) = p(k)·p(k+1)` with the gap `g = p(k+1) − p(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeadingStep {
    pub k: u64,
    pub p_k: u64,
    pub p_next: u64,
    pub gap: u64,
    #[serde(with = "crate::decimal")]
    pub value: u128,
}

/// Shared context for all element operations: row primes, a primality back
/// end, an optional sieve for `π`, and the scan budget.
pub struct TMatrix {
    table: PrimeTable,
    primality: Arc<dyn PrimalityTest>,
    oracle: Option<Arc<PrimeOracle>>,
    column_ceiling: u64,
}

impl std::fmt::Debug for TMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TMatrix")
            .field("max_row", &self.table.max_row())
            .field("oracle_limit", &self.oracle.as_ref().map(|o| o.limit()))
            .field("column_ceiling", &self.column_ceiling)
            .finish()
    }
}

impl TMatrix {
    /// Sieve-backed context: lookups below the oracle limit, Miller-Rabin above.
    pub fn new(oracle: Arc<PrimeOracle>) -> Self {
        TMatrix {
            table: PrimeTable::default(),
            primality: oracle.clone(),
            oracle: Some(oracle),
            column_ceiling: DEFAULT_COLUMN_CEILING,
        }
    }

    /// Convenience: build a sieve up to `limit` and wrap it.
    pub fn with_sieve(limit: u64) -> Result<Self> {
        Ok(Self::new(Arc::new(PrimeOracle::new(limit)?)))
    }

    /// Miller-Rabin only; `π` is unavailable and row indices come from the
    /// prime table.
    pub fn without_oracle() -> Self {
        TMatrix {
            table: PrimeTable::default(),
            primality: Arc::new(MillerRabin),
            oracle: None,
            column_ceiling: DEFAULT_COLUMN_CEILING,
        }
    }

    pub fn with_primality(mut self, test: Arc<dyn PrimalityTest>) -> Self {
        self.primality = test;
        self
    }

    pub fn with_column_ceiling(mut self, ceiling: u64) -> Self {
        self.column_ceiling = ceiling;
        self
    }

    pub fn with_max_row(mut self, max_row: u64) -> Self {
        self.table = PrimeTable::new(max_row);
        self
    }

    pub fn table(&self) -> &PrimeTable {
        &self.table
    }

    pub fn oracle(&self) -> Option<&PrimeOracle> {
        self.oracle.as_deref()
    }

    pub fn primality(&self) -> &dyn PrimalityTest {
        &*self.primality
    }

    pub fn column_ceiling(&self) -> u64 {
        self.column_ceiling
    }

    pub fn is_prime(&self, v: u128) -> Result<bool> {
        self.primality.is_prime(v)
    }

    /// The oracle, or a range error naming what needed it.
    pub fn require_oracle(&self, what: &str) -> Result<&PrimeOracle> {
        self.oracle()
            .ok_or_else(|| Error::range(format!("{what} needs a prime-counting sieve"), 0))
    }

    pub fn row_prime(&self, k: u64) -> Result<u64> {
        self.table.row_prime(k)
    }

    /// Row index of a row prime: `π(p) − 2` from the sieve when it covers `p`,
    /// otherwise a prime-table lookup.
    pub fn row_of(&self, p: u64) -> Result<u64> {
        match self.oracle() {
            Some(o) if p as u128 <= o.limit() as u128 => {
                if p < 5 || !o.lookup(p as u128)? {
                    return Err(Error::domain(format!("{p} is not a row prime")));
                }
                Ok(o.pi(p as u128)? - 2)
            }
            _ => self.table.row_of(p),
        }
    }

    fn classify_with_prime(&self, k: u64, p: u64, n: u64) -> Result<TElement> {
        let f_n = wheel(n);
        let value = (p as u128)
            .checked_mul(f_n)
            .ok_or_else(|| Error::range(format!("a({k};{n})"), u128::MAX))?;
        // Row 1 and column 1 carry the factor 5.
        let is_defining = k > 1 && n > 1 && self.is_prime(f_n)?;
        Ok(TElement {
            value,
            k,
            n,
            p_k: p,
            f_n,
            is_defining,
            is_leading: f_n == p as u128,
        })
    }

    /// Classifies the entry at `idx` with one primality test on `f(n)`.
    pub fn classify(&self, idx: MatrixIndex) -> Result<TElement> {
        let p = self.row_prime(idx.k)?;
        self.classify_with_prime(idx.k, p, idx.n)
    }

    /// Classifies `value` as an entry of row `k`.
    pub fn classify_value(&self, k: u64, value: u128) -> Result<TElement> {
        let n = self.table.column_of(k, value)?;
        self.classify(MatrixIndex { k, n })
    }

    fn require_inner_row(k: u64) -> Result<()> {
        if k < 2 {
            return Err(Error::domain(format!("row operators need k > 1, got k = {k}")));
        }
        Ok(())
    }

    fn scan_up(&self, k: u64, p: u64, b: u128, defining_only: bool) -> Result<TElement> {
        let start = column_index(nu_in_row(p, b) + 1)?;
        for n in start..start.saturating_add(self.column_ceiling) {
            let el = self.classify_with_prime(k, p, n)?;
            if !defining_only || el.is_defining {
                return Ok(el);
            }
        }
        Err(Error::Resource(format!(
            "no defining element above {b} in row {k} within {} columns",
            self.column_ceiling
        )))
    }

    fn scan_down(&self, k: u64, p: u64, b: u128, defining_only: bool) -> Result<TElement> {
        let start = column_index(nu_in_row(p, b - 1))?;
        let stop = start.saturating_sub(self.column_ceiling);
        let mut n = start;
        while n >= 1 && n > stop {
            let el = self.classify_with_prime(k, p, n)?;
            if !defining_only || el.is_defining {
                return Ok(el);
            }
            n -= 1;
        }
        Err(Error::Resource(format!(
            "no defining element below {b} in row {k} within {} columns",
            self.column_ceiling
        )))
    }

    fn upper_in_row(&self, k: u64, b: u128, defining_only: bool) -> Result<TElement> {
        Self::require_inner_row(k)?;
        let p = self.row_prime(k)?;
        if (p as u128) * (p as u128) > b {
            return Err(Error::domain(format!("upper operator in row {k} needs p²(k) = {} ≤ b = {b}", p as u128 * p as u128)));
        }
        self.scan_up(k, p, b, defining_only)
    }

    fn lower_in_row(&self, k: u64, b: u128, defining_only: bool) -> Result<TElement> {
        Self::require_inner_row(k)?;
        let p = self.row_prime(k)?;
        if (p as u128) * (p as u128) >= b {
            return Err(Error::domain(format!("lower operator in row {k} needs p²(k) = {} < b = {b}", p as u128 * p as u128)));
        }
        self.scan_down(k, p, b, defining_only)
    }

    /// `D_k(b)`: smallest defining entry of row `k` strictly above `b`.
    pub fn upper_defining_in_row(&self, k: u64, b: u128) -> Result<TElement> {
        self.upper_in_row(k, b, true)
    }

    /// `d_k(b)`: largest defining entry of row `k` strictly below `b`.
    pub fn lower_defining_in_row(&self, k: u64, b: u128) -> Result<TElement> {
        self.lower_in_row(k, b, true)
    }

    /// `W_k(b)`: the entry of row `k` right after `b`.
    pub fn upper_element_in_row(&self, k: u64, b: u128) -> Result<TElement> {
        self.upper_in_row(k, b, false)
    }

    /// `w_k(b)`: the entry of row `k` right before `b`.
    pub fn lower_element_in_row(&self, k: u64, b: u128) -> Result<TElement> {
        self.lower_in_row(k, b, false)
    }

    /// Row `k > 1` whose leading entry is the largest one `≤ bound`.
    fn leading_row_at_most(&self, bound: u128) -> Result<(u64, u64)> {
        let r = isqrt(bound);
        let p = prev_prime_in(self.primality(), 6, r + 1)?
            .ok_or_else(|| Error::domain(format!("no leading element p²(k) ≤ {bound} with k > 1")))?;
        let p = u64::try_from(p).map_err(|_| Error::range(format!("row prime {p}"), u64::MAX))?;
        Ok((self.row_of(p)?, p))
    }

    fn upper_global(&self, b: u128, defining_only: bool) -> Result<TElement> {
        if b < UPPER_THRESHOLD {
            return Err(Error::domain(format!("upper operators need b ≥ 49, got {b}")));
        }
        let (k, p) = self.leading_row_at_most(b)?;
        self.scan_up(k, p, b, defining_only)
    }

    fn lower_global(&self, b: u128, defining_only: bool) -> Result<TElement> {
        if b <= UPPER_THRESHOLD {
            return Err(Error::domain(format!("lower operators need b > 49, got {b}")));
        }
        let (k, p) = self.leading_row_at_most(b - 1)?;
        self.scan_down(k, p, b, defining_only)
    }

    /// `D(b)`, the upper defining element of `b ≥ 49`.
    pub fn upper_defining(&self, b: u128) -> Result<TElement> {
        self.upper_global(b, true)
    }

    /// `d(b)`, the lower defining element of `b > 49`.
    pub fn lower_defining(&self, b: u128) -> Result<TElement> {
        self.lower_global(b, true)
    }

    /// `W(b)`, the upper element of `b ≥ 49`.
    pub fn upper_element(&self, b: u128) -> Result<TElement> {
        self.upper_global(b, false)
    }

    /// `w(b)`, the lower element of `b > 49`.
    pub fn lower_element(&self, b: u128) -> Result<TElement> {
        self.lower_global(b, false)
    }

    /// Moves a defining entry `p(k)·q` with `q > p(k)` to row `j` where
    /// `p(j) = q`. The value lands in column `#_k(p²(k))` of row `j`, and
    /// column `n` of row `j` holds `p²(j)`.
    pub fn transition_down(&self, el: &TElement) -> Result<Transition> {
        if !el.is_defining || el.value <= el.leading_value() {
            return Err(Error::domain(format!(
                "transition down needs a defining element above p²(k); got {} in row {}",
                el.value, el.k
            )));
        }
        let q = u64::try_from(el.f_n).map_err(|_| Error::range(format!("prime {}", el.f_n), u64::MAX))?;
        let j = self.row_of(q)?;
        let t = Transition {
            direction: Direction::Down,
            source: el.index(),
            target: MatrixIndex {
                k: j,
                n: column_index(nu(el.p_k as u128))?,
            },
            value: el.value,
            h: (el.f_n - el.p_k as u128) / 2,
            small_prime: el.p_k,
            large_prime: q,
        };
        t.check()?;
        Ok(t)
    }

    /// Inverse of [`transition_down`](Self::transition_down): a defining
    /// entry `p(j)·q` with `q < p(j)` moves up to the row `k` with `p(k) = q`.
    pub fn transition_up(&self, el: &TElement) -> Result<Transition> {
        if !el.is_defining || el.value >= el.leading_value() {
            return Err(Error::domain(format!(
                "transition up needs a defining element below p²(j); got {} in row {}",
                el.value, el.k
            )));
        }
        let q = el.f_n as u64;
        let k = self.row_of(q)?;
        let t = Transition {
            direction: Direction::Up,
            source: el.index(),
            target: MatrixIndex {
                k,
                n: column_index(nu(el.p_k as u128))?,
            },
            value: el.value,
            h: (el.p_k as u128 - el.f_n) / 2,
            small_prime: q,
            large_prime: el.p_k,
        };
        t.check()?;
        Ok(t)
    }

    /// The first defining entry after `p²(k)`, checked against both
    /// `p²(k) + g·p(k) = D_k(p²(k))` and `D_k(p²(k)) + g·p(k+1) = p²(k+1)`.
    pub fn leading_step(&self, k: u64) -> Result<LeadingStep> {
        Self::require_inner_row(k)?;
        let p = self.row_prime(k)?;
        let q = self.row_prime(k + 1)?;
        let g = (q - p) as u128;
        let (p, q) = (p as u128, q as u128);
        let value = p * q;
        if p * p + g * p != value || value + g * q != q * q {
            return Err(Error::inconsistency(format!("leading step identities fail at k = {k}")));
        }
        Ok(LeadingStep {
            k,
            p_k: p as u64,
            p_next: q as u64,
            gap: g as u64,
            value,
        })
    }
}
