//! Per-`m` outcome classification, range scans and the scaling benchmark.
//!
//! For each `m` three statements are evaluated:
//!
//! * *legendre*: some prime lies in `(m², (m+1)²)`;
//! * *weak*: `D(p²(k₁))` is in the active set;
//! * *strong*: `D(m⁴)` is in the active set.
//!
//! Exactly one outcome applies: `Outcome2` when legendre fails, `Outcome3`
//! when strong holds, `Outcome1` otherwise. Legendre status is obtained three
//! ways (active set, sieve `π`, leading entries in `(m⁴, (m+1)⁴)`) and any
//! disagreement is an error.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activeset::{build_active_set, min_prime_between, ActiveSet};
use crate::elements::TMatrix;
use crate::error::{Error, Result};
use crate::method1::{run_method1, Method1Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Outcome1,
    Outcome2,
    Outcome3,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Outcome1 => "Outcome1",
            Outcome::Outcome2 => "Outcome2",
            Outcome::Outcome3 => "Outcome3",
        })
    }
}

/// The values the three statements were decided on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    /// `D(p²(k₁))`.
    #[serde(with = "crate::decimal")]
    pub d_leading: u128,
    /// `D(p²(k₁))/p(k₁)`.
    pub p_j1: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub j1: Option<u64>,
    #[serde(rename = "D_m4", with = "crate::decimal")]
    pub d_m4: u128,
    pub p_j: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub j: Option<u64>,
    /// `π((m+1)²) − π(m²)`.
    pub pi_count: u64,
    /// Leading entries in `(m⁴, (m+1)⁴)`.
    pub leading_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub m: u64,
    pub legendre_true: bool,
    pub weak_true: bool,
    pub strong_true: bool,
    pub outcome: Outcome,
    pub p_k1: u64,
    pub k1: u64,
    pub q_m: u64,
    pub s_m: u64,
    pub scan_bound_ok: bool,
    pub gap_bound_ok: bool,
    pub witness: Witness,
}

/// Extra invariant checks run by [`evaluate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Checks {
    /// Cross-check the fast paths against the global operators and the
    /// sieve's prime list.
    pub deep: bool,
}

impl Checks {
    pub fn all() -> Self {
        Checks { deep: true }
    }
}

pub fn evaluate(tm: &TMatrix, m: u64) -> Result<OutcomeReport> {
    evaluate_with(tm, m, Checks::default())
}

pub fn evaluate_with(tm: &TMatrix, m: u64, checks: Checks) -> Result<OutcomeReport> {
    evaluate_inner(tm, m, checks).map_err(|e| e.at_m(m))
}

fn evaluate_inner(tm: &TMatrix, m: u64, checks: Checks) -> Result<OutcomeReport> {
    let oracle = tm.require_oracle("outcome evaluation")?;
    let m1 = run_method1(tm, m, true)?;
    let hs = build_active_set(tm, m)?;
    if hs.p_k1 != m1.p_k1 {
        return Err(Error::inconsistency("active set and method disagree on p(k₁)"));
    }

    let m2 = m as u128 * m as u128;
    let up = (m as u128 + 1) * (m as u128 + 1);
    let pi_count = oracle.pi(up)? - oracle.pi(m2)?;
    let leading_count = oracle.pi_leading(up * up)? - oracle.pi_leading(m2 * m2)?;

    let d_leading = hs.first_defining();
    let p_j1 = (d_leading / hs.p_k1 as u128) as u64;
    let weak_true = m2 < p_j1 as u128 && (p_j1 as u128) < up;
    let strong_true = m1.conjecture_holds;
    let legendre_true = !hs.legendre_counterexample;

    if legendre_true != (pi_count > 0) || hs.q_m != pi_count {
        return Err(Error::inconsistency(format!(
            "active set has {} members, sieve counts {pi_count} primes",
            hs.q_m
        )));
    }
    if legendre_true != (leading_count > 0) {
        return Err(Error::inconsistency("leading-entry count disagrees with legendre status"));
    }
    if weak_true != legendre_true {
        return Err(Error::inconsistency("weak status differs from legendre status"));
    }
    if strong_true && !weak_true {
        return Err(Error::inconsistency("strong holds but weak fails"));
    }
    if strong_true != hs.members.contains(&m1.d_m4) {
        return Err(Error::inconsistency("D(m⁴) membership disagrees with the method's quotient test"));
    }

    let outcome = if !legendre_true {
        Outcome::Outcome2
    } else if strong_true {
        Outcome::Outcome3
    } else {
        // A member below m⁴ must exist, otherwise D(p²(k₁)) = D(m⁴) and strong would hold.
        if hs.s_m == 0 {
            return Err(Error::inconsistency("legendre without strong but no member below m⁴"));
        }
        Outcome::Outcome1
    };

    if checks.deep {
        deep_checks(tm, m, &m1, &hs)?;
    }

    let j1 = if weak_true { Some(tm.row_of(p_j1)?) } else { None };
    Ok(OutcomeReport {
        m,
        legendre_true,
        weak_true,
        strong_true,
        outcome,
        p_k1: m1.p_k1,
        k1: hs.k1,
        q_m: hs.q_m,
        s_m: hs.s_m,
        scan_bound_ok: m1.scan_bound_ok,
        gap_bound_ok: m1.gap_bound_ok,
        witness: Witness {
            d_leading,
            p_j1,
            j1,
            d_m4: m1.d_m4,
            p_j: m1.p_j,
            j: m1.j,
            pi_count,
            leading_count,
        },
    })
}

fn deep_checks(tm: &TMatrix, m: u64, m1: &Method1Result, hs: &ActiveSet) -> Result<()> {
    let oracle = tm.require_oracle("deep checks")?;
    let m2 = m as u128 * m as u128;
    let m4 = m2 * m2;
    let up = (m as u128 + 1) * (m as u128 + 1);

    if tm.upper_defining(m4)?.value != m1.d_m4 {
        return Err(Error::inconsistency("D(m⁴) differs from the global operator"));
    }
    let sieve: Vec<u64> = ((m2 + 1)..up)
        .filter_map(|v| match oracle.lookup(v) {
            Ok(true) => Some(Ok(v as u64)),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        })
        .collect::<Result<_>>()?;
    if sieve != hs.recovered_primes {
        return Err(Error::inconsistency("recovered primes differ from the sieve"));
    }
    if let Some(&first) = hs.recovered_primes.first() {
        if min_prime_between(tm, m)? != first {
            return Err(Error::inconsistency("minimum prime differs from D(p²(k₁))/p(k₁)"));
        }
        if hs.critical == hs.first_defining() {
            return Err(Error::inconsistency("D(p²(k₁)) is the critical element"));
        }
    }
    if m1.d_m4 < up * up && hs.first_defining() > m1.d_m4 {
        return Err(Error::inconsistency("D(p²(k₁)) exceeds D(m⁴)"));
    }
    for &a in &hs.members {
        let q = a / hs.p_k1 as u128;
        if !(m4 < q * q && q * q < up * up) {
            return Err(Error::inconsistency(format!("member {a} lands outside (m⁴, (m+1)⁴)")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `Δ(m) ≥ 4m/3`.
    ScanWindow,
    /// `ν_{k₁}(D(m⁴)) − ν_{k₁}(m⁴) ≥ 5m/3`.
    ColumnGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub m: u64,
    pub kind: BoundKind,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RangeSummary {
    pub m_lo: u64,
    pub m_hi: u64,
    pub evaluated: u64,
    pub outcome1: u64,
    pub outcome2: u64,
    pub outcome3: u64,
    pub legendre_counterexamples: Vec<u64>,
    pub strong_failures: Vec<u64>,
    pub bound_violations: Vec<BoundViolation>,
    /// `m` with exactly one prime in `(m², (m+1)²)`.
    pub single_prime: Vec<u64>,
    /// Wall time per evaluated chunk; left out of serialized output so that
    /// records do not depend on the machine or the worker count.
    #[serde(skip)]
    pub timing: Vec<(u64, Duration)>,
}

impl RangeSummary {
    pub fn new(m_lo: u64, m_hi: u64) -> Self {
        RangeSummary {
            m_lo,
            m_hi,
            ..Default::default()
        }
    }

    /// Folds one report in. Reports must arrive in increasing `m`.
    pub fn record(&mut self, r: &OutcomeReport) {
        self.evaluated += 1;
        match r.outcome {
            Outcome::Outcome1 => self.outcome1 += 1,
            Outcome::Outcome2 => self.outcome2 += 1,
            Outcome::Outcome3 => self.outcome3 += 1,
        }
        if !r.legendre_true {
            self.legendre_counterexamples.push(r.m);
        }
        if !r.strong_true {
            self.strong_failures.push(r.m);
        }
        if !r.scan_bound_ok {
            self.bound_violations.push(BoundViolation { m: r.m, kind: BoundKind::ScanWindow });
        }
        if !r.gap_bound_ok {
            self.bound_violations.push(BoundViolation { m: r.m, kind: BoundKind::ColumnGap });
        }
        if r.q_m == 1 {
            self.single_prime.push(r.m);
        }
    }

    pub fn total_time(&self) -> Duration {
        self.timing.iter().map(|t| t.1).sum()
    }
}

/// Evaluates `ms` on `pool`, returning reports in the order of `ms`.
pub fn evaluate_many(
    tm: &TMatrix,
    ms: &[u64],
    checks: Checks,
    pool: &rayon::ThreadPool,
) -> Result<Vec<OutcomeReport>> {
    pool.install(|| ms.par_iter().map(|&m| evaluate_with(tm, m, checks)).collect())
}

pub fn build_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))
}

/// Checks that `3 ≤ m_lo ≤ m_hi` and that the sieve reaches `(m_hi+1)²`.
pub fn check_range(tm: &TMatrix, m_lo: u64, m_hi: u64) -> Result<()> {
    if m_lo < 3 || m_lo > m_hi {
        return Err(Error::domain(format!("need 3 ≤ m_lo ≤ m_hi, got [{m_lo}, {m_hi}]")));
    }
    let oracle = tm.require_oracle("range scan")?;
    let need = (m_hi as u128 + 1) * (m_hi as u128 + 1);
    if need > oracle.limit() as u128 {
        return Err(Error::range(format!("(m_hi+1)² = {need}"), oracle.limit()));
    }
    Ok(())
}

/// Scans `[m_lo, m_hi]` on `jobs` workers. Reports come back sorted by `m`
/// whatever the worker count.
pub fn scan_range(
    tm: &TMatrix,
    m_lo: u64,
    m_hi: u64,
    checks: Checks,
    jobs: usize,
) -> Result<(Vec<OutcomeReport>, RangeSummary)> {
    check_range(tm, m_lo, m_hi)?;
    let pool = build_pool(jobs)?;
    let ms: Vec<u64> = (m_lo..=m_hi).collect();
    let mut summary = RangeSummary::new(m_lo, m_hi);
    let started = Instant::now();
    let reports = evaluate_many(tm, &ms, checks, &pool)?;
    summary.timing.push((m_lo, started.elapsed()));
    for r in &reports {
        summary.record(r);
    }
    Ok((reports, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub m: u64,
    pub runs: u64,
    pub seconds_per_run: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of `ln t` against `ln m`; needs two distinct points.
    pub exponent: Option<f64>,
}

/// Minimum wall time spent on each point; short runs are repeated.
const BENCH_BATCH: Duration = Duration::from_millis(50);

pub fn bench_scaling(tm: &TMatrix, points: &[u64]) -> Result<BenchReport> {
    if points.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("bench points must be sorted ascending"));
    }
    let mut rows = Vec::with_capacity(points.len());
    for &m in points {
        // warm-up, also surfaces errors before timing
        run_method1(tm, m, false)?;
        let started = Instant::now();
        let mut runs = 0u64;
        while runs == 0 || started.elapsed() < BENCH_BATCH {
            std::hint::black_box(run_method1(tm, std::hint::black_box(m), false)?);
            runs += 1;
        }
        rows.push(BenchRow {
            m,
            runs,
            seconds_per_run: started.elapsed().as_secs_f64() / runs as f64,
        });
    }
    let exponent = fit_exponent(&rows);
    Ok(BenchReport { rows, exponent })
}

fn fit_exponent(rows: &[BenchRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.seconds_per_run > 0.0)
        .map(|r| ((r.m as f64).ln(), r.seconds_per_run.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (pts.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}
