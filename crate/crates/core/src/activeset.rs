//! The active set of `m`: the defining entries of row `k₁` after `p²(k₁)`
//! whose quotient by `p(k₁)` falls inside `(m², (m+1)²)`.
//!
//! Quotients increase along the row, so the set is a contiguous run of
//! defining entries starting right after `p²(k₁)`. The first defining entry
//! past the run is the critical element. Dividing the members by `p(k₁)`
//! lists every prime in `(m², (m+1)²)`.

use serde::{Deserialize, Serialize};

use crate::elements::TMatrix;
use crate::error::{Error, Result};
use crate::method1::{step1_nbar, step2_pk1};
use crate::sequences::{column_index, nu, wheel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSet {
    pub m: u64,
    pub p_k1: u64,
    pub k1: u64,
    #[serde(with = "crate::decimal::vec")]
    pub members: Vec<u128>,
    pub s_m: u64,
    pub q_m: u64,
    #[serde(with = "crate::decimal")]
    pub critical: u128,
    pub recovered_primes: Vec<u64>,
    /// gcd of the members; `None` for an empty set.
    #[serde(with = "crate::decimal::option")]
    pub gcd: Option<u128>,
    /// No member: `(m², (m+1)²)` holds no prime.
    pub legendre_counterexample: bool,
}

impl ActiveSet {
    /// `D(p²(k₁))`, the first defining entry after the leading one.
    pub fn first_defining(&self) -> u128 {
        self.members.first().copied().unwrap_or(self.critical)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Member,
    Critical,
    Outside,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `p(k₁)`: the largest prime in `((m−1)², m²)`, equivalently the row whose
/// leading entry is the largest one in `((m−1)⁴, m⁴)`.
pub fn leading_prime(tm: &TMatrix, m: u64) -> Result<u64> {
    Ok(step2_pk1(tm, m, step1_nbar(m)?)?.0)
}

pub fn build_active_set(tm: &TMatrix, m: u64) -> Result<ActiveSet> {
    let p_k1 = leading_prime(tm, m)?;
    let k1 = tm.row_of(p_k1)?;
    let m2 = m as u128 * m as u128;
    let m4 = m2 * m2;
    let upper = (m as u128 + 1) * (m as u128 + 1);
    let p = p_k1 as u128;

    let start = column_index(nu(p) + 1)?;
    let mut members = Vec::new();
    let mut critical = None;
    for n in start..start.saturating_add(tm.column_ceiling()) {
        let f = wheel(n);
        if !tm.is_prime(f)? {
            continue;
        }
        if members.is_empty() && critical.is_none() && f <= m2 {
            return Err(Error::inconsistency(format!(
                "first defining quotient {f} after p(k₁) = {p_k1} does not exceed m²"
            )));
        }
        if f < upper {
            members.push(p * f);
        } else {
            critical = Some(p * f);
            break;
        }
    }
    let critical = critical.ok_or_else(|| {
        Error::Resource(format!(
            "no critical element in row {k1} within {} columns",
            tm.column_ceiling()
        ))
    })?;

    let g = members.iter().copied().reduce(gcd);
    if members.len() >= 2 && g != Some(p) {
        return Err(Error::inconsistency(format!("gcd of members is {g:?}, expected {p}")));
    }
    // With a single member the gcd is the member itself, so divide by p(k₁).
    let recovered_primes = members.iter().map(|&a| (a / p) as u64).collect();
    let s_m = members.iter().filter(|&&a| a < m4).count() as u64;
    Ok(ActiveSet {
        m,
        p_k1,
        k1,
        s_m,
        q_m: members.len() as u64,
        legendre_counterexample: members.is_empty(),
        members,
        critical,
        recovered_primes,
        gcd: g,
    })
}

/// Primes in `(m², (m+1)²)` from the active set.
pub fn recovered_primes(hs: &ActiveSet) -> Vec<u64> {
    hs.recovered_primes.clone()
}

/// `D(p²(k₁))/p(k₁)`, the smallest prime above `m²`, provided it lies below
/// `(m+1)²`.
pub fn min_prime_between(tm: &TMatrix, m: u64) -> Result<u64> {
    let p_k1 = leading_prime(tm, m)?;
    let k1 = tm.row_of(p_k1)?;
    let lead = p_k1 as u128 * p_k1 as u128;
    let d = tm.upper_defining_in_row(k1, lead)?;
    let upper = (m as u128 + 1) * (m as u128 + 1);
    if d.f_n >= upper {
        return Err(Error::LegendreCounterexample {
            m,
            lo: m as u128 * m as u128,
            hi: upper,
        });
    }
    Ok(d.f_n as u64)
}

/// Whether the transition of a defining entry of row `k₁` lands inside the
/// active set, on the critical element, or beyond.
pub fn membership_check(tm: &TMatrix, m: u64, value: u128) -> Result<Membership> {
    let hs = build_active_set(tm, m)?;
    let el = tm.classify_value(hs.k1, value).map_err(|e| match e {
        Error::NotInRow { .. } => Error::domain(format!("{value} is not in row k₁ = {}", hs.k1)),
        e => e,
    })?;
    if !el.is_defining || el.value <= el.leading_value() {
        return Err(Error::domain(format!(
            "{value} is not a defining element of row {} above p²(k₁)",
            hs.k1
        )));
    }
    Ok(if hs.members.binary_search(&value).is_ok() {
        Membership::Member
    } else if value == hs.critical {
        Membership::Critical
    } else {
        Membership::Outside
    })
}
