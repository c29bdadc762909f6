//! Locating a prime in `(m², (m+1)²)` through the upper defining element
//! `D(m⁴)`.
//!
//! 1. `n̄ = ν(m²)`.
//! 2. Walk `f(n̄), f(n̄−1), …` down to the first prime; it is `p(k₁)`, the
//!    largest prime below `m²`, and must exceed `(m−1)²`.
//! 3. `n₀ = C(⌊m⁴/p(k₁)⌋)`, the column of the first entry of row `k₁`
//!    above `m⁴`.
//! 4. Walk `f(n₀), f(n₀+1), …` up to the first prime `p(j)`; then
//!    `D(m⁴) = p(k₁)·p(j)`.
//!
//! `p(j)` is recovered a second time from `D(m⁴)` alone through the half gap
//! `h`, and both recoveries must agree.

use serde::{Deserialize, Serialize};

use crate::elements::TMatrix;
use crate::error::{Error, Result};
use crate::primes::isqrt;
use crate::sequences::{capacity, column_index, nu, wheel};

/// Largest `m` accepted. Keeps `(m+1)²` and every scanned wheel value in `u64`.
pub const MAX_M: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Method1Result {
    pub m: u64,
    pub n_bar: u64,
    pub delta_n_bar: u64,
    pub p_k1: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k1: Option<u64>,
    pub n0: u64,
    pub delta_n0: u64,
    #[serde(rename = "D_m4", with = "crate::decimal")]
    pub d_m4: u128,
    #[serde(with = "crate::decimal")]
    pub h: u128,
    pub p_j: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub j: Option<u64>,
    /// `m² < p(j) < (m+1)²`.
    pub conjecture_holds: bool,
    /// `Δ(m) = ν(m²) − ν((m−1)²)`, the length of the step-2 search window.
    pub delta_m: u64,
    /// `ν_{k₁}(D(m⁴)) − ν_{k₁}(m⁴)`.
    pub column_gap: u64,
    /// `Δ(m) < 4m/3`.
    pub scan_bound_ok: bool,
    /// `column_gap < 5m/3`.
    pub gap_bound_ok: bool,
}

fn check_m(m: u64) -> Result<()> {
    if m < 3 {
        return Err(Error::domain(format!("m must be ≥ 3, got {m}")));
    }
    if m > MAX_M {
        return Err(Error::range(format!("m = {m}"), MAX_M));
    }
    Ok(())
}

fn sq(x: u64) -> u128 {
    x as u128 * x as u128
}

/// Step 1: `n̄ = ν(m²)`.
pub fn step1_nbar(m: u64) -> Result<u64> {
    check_m(m)?;
    column_index(nu(sq(m)))
}

/// Step 2: `(p(k₁), Δn̄)`, scanning `f(n̄ − i)` downward.
///
/// Running out of candidates above `(m−1)²` means there is no prime in
/// `((m−1)², m²)`; that is reported as a counterexample for `m − 1`.
pub fn step2_pk1(tm: &TMatrix, m: u64, n_bar: u64) -> Result<(u64, u64)> {
    check_m(m)?;
    let floor = sq(m - 1);
    let mut n = n_bar;
    while n >= 1 {
        let f = wheel(n);
        if f <= floor {
            break;
        }
        if tm.is_prime(f)? {
            if f >= sq(m) {
                return Err(Error::inconsistency(format!("step 2 found {f} ≥ m²")));
            }
            return Ok((f as u64, n_bar - n));
        }
        n -= 1;
    }
    Err(Error::LegendreCounterexample {
        m: m - 1,
        lo: floor,
        hi: sq(m),
    })
}

/// Step 3: `n₀ = C(⌊m⁴/p(k₁)⌋)`.
pub fn step3_n0(m: u64, p_k1: u64) -> Result<u64> {
    check_m(m)?;
    if p_k1 < 5 {
        return Err(Error::domain(format!("p(k₁) must be a row prime, got {p_k1}")));
    }
    column_index(capacity(sq(m) * sq(m) / p_k1 as u128)?)
}

/// Step 4: `(D(m⁴), Δn₀, p(j))`, scanning `f(n₀ + i)` upward.
pub fn step4_d(tm: &TMatrix, m: u64, p_k1: u64, n0: u64) -> Result<(u128, u64, u64)> {
    check_m(m)?;
    let m2 = sq(m);
    let m4 = m2 * m2;
    for i in 0..tm.column_ceiling() {
        let f = wheel(n0 + i);
        if f <= m2 {
            return Err(Error::inconsistency(format!("step 4 scanned f({}) = {f} ≤ m²", n0 + i)));
        }
        if tm.is_prime(f)? {
            let d = p_k1 as u128 * f;
            if d <= m4 {
                return Err(Error::inconsistency(format!("D(m⁴) = {d} does not exceed m⁴")));
            }
            return Ok((d, i, f as u64));
        }
    }
    Err(Error::Resource(format!(
        "step 4 found no prime within {} columns from n₀ = {n0}",
        tm.column_ceiling()
    )))
}

/// `p(j) = h + √(h² + D)` with `h = (D − p²)/(2p)`. Both the division and
/// the square root must be exact.
pub fn recover_pj_way1(d_m4: u128, p_k1: u64) -> Result<u128> {
    let p = p_k1 as u128;
    let p2 = p * p;
    if p == 0 || d_m4 <= p2 || (d_m4 - p2) % (2 * p) != 0 {
        return Err(Error::inconsistency(format!("h is not a positive integer for D = {d_m4}, p = {p}")));
    }
    let h = (d_m4 - p2) / (2 * p);
    let radicand = h
        .checked_mul(h)
        .and_then(|h2| h2.checked_add(d_m4))
        .ok_or_else(|| Error::range("h² + D", u128::MAX))?;
    let r = isqrt(radicand);
    if r * r != radicand {
        return Err(Error::inconsistency(format!("h² + D = {radicand} is not a perfect square")));
    }
    Ok(h + r)
}

/// `p(j) = D/p(k₁)`.
pub fn recover_pj_way2(d_m4: u128, p_k1: u64) -> Result<u128> {
    if p_k1 == 0 || d_m4 % p_k1 as u128 != 0 {
        return Err(Error::domain(format!("{p_k1} does not divide {d_m4}")));
    }
    Ok(d_m4 / p_k1 as u128)
}

/// Runs all four steps and both recoveries. Row indices are filled in when
/// `rows` is set.
pub fn run_method1(tm: &TMatrix, m: u64, rows: bool) -> Result<Method1Result> {
    let n_bar = step1_nbar(m)?;
    let (p_k1, delta_n_bar) = step2_pk1(tm, m, n_bar)?;
    let m2 = sq(m);
    let m4 = m2 * m2;
    if m4 % p_k1 as u128 == 0 {
        return Err(Error::inconsistency(format!("p(k₁) = {p_k1} divides m⁴")));
    }
    let n0 = step3_n0(m, p_k1)?;
    let (d_m4, delta_n0, p_j) = step4_d(tm, m, p_k1, n0)?;

    let way1 = recover_pj_way1(d_m4, p_k1)?;
    let way2 = recover_pj_way2(d_m4, p_k1)?;
    if way1 != p_j as u128 || way2 != p_j as u128 {
        return Err(Error::inconsistency(format!(
            "recoveries disagree: way 1 = {way1}, way 2 = {way2}, step 4 = {p_j}"
        )));
    }
    let p = p_k1 as u128;
    let h = (d_m4 - p * p) / (2 * p);
    let pj = p_j as u128;
    if pj * pj != 2 * h * pj + d_m4 {
        return Err(Error::inconsistency(format!("p(j)² − 2h·p(j) ≠ D for p(j) = {p_j}")));
    }

    let delta_m = column_index(nu(m2) - nu(sq(m - 1)))?;
    let column_gap = delta_n0 + 1;
    let (k1, j) = if rows {
        (Some(tm.row_of(p_k1)?), Some(tm.row_of(p_j)?))
    } else {
        (None, None)
    };

    Ok(Method1Result {
        m,
        n_bar,
        delta_n_bar,
        p_k1,
        k1,
        n0,
        delta_n0,
        d_m4,
        h,
        p_j,
        j,
        conjecture_holds: m2 < pj && pj < sq(m + 1),
        delta_m,
        column_gap,
        scan_bound_ok: 3 * delta_m < 4 * m,
        gap_bound_ok: 3 * column_gap < 5 * m,
    })
}
