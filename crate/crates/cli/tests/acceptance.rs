//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;
use tmatrix::activeset::{build_active_set, min_prime_between};
use tmatrix::method1::{recover_pj_way1, recover_pj_way2, run_method1};
use tmatrix::oracle::{brute_primes_between, row_entry};
use tmatrix::{nu, MatrixIndex, PrimeOracle, TMatrix};

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

const SWEEP_HI: u64 = 2000;
const SCAN_HI: u64 = 10_000;

fn cli(args: &[&str]) -> Result<(Vec<u8>, Duration), String> {
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_tmatrix"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let took = started.elapsed();
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok((out.stdout, took))
}

fn json_records(bytes: &[u8]) -> Result<Vec<Value>, String> {
    std::str::from_utf8(bytes)
        .map_err(|e| e.to_string())?
        .lines()
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect()
}

fn single_payload(args: &[&str]) -> Result<(Value, Duration), String> {
    let mut all = vec!["--format", "json"];
    all.extend_from_slice(args);
    let (out, took) = cli(&all)?;
    let mut recs = json_records(&out)?;
    ensure!(recs.len() == 1, "expected one record, got {}", recs.len());
    Ok((recs.pop().unwrap()["payload"].clone(), took))
}

/// Brute-force prime list covering every interval the sweeps touch.
fn primes() -> &'static [u64] {
    static P: OnceLock<Vec<u64>> = OnceLock::new();
    P.get_or_init(|| brute_primes_between(0, (SCAN_HI + 1) * (SCAN_HI + 1) + 1).unwrap())
}

/// Primes in the open interval `(lo, hi)`.
fn primes_in(lo: u64, hi: u64) -> &'static [u64] {
    let p = primes();
    &p[p.partition_point(|&q| q <= lo)..p.partition_point(|&q| q < hi)]
}

fn sweep_matrix() -> &'static TMatrix {
    static TM: OnceLock<TMatrix> = OnceLock::new();
    TM.get_or_init(|| {
        let limit = (SWEEP_HI + 2) * (SWEEP_HI + 2);
        TMatrix::new(Arc::new(PrimeOracle::new(limit).unwrap()))
    })
}

fn u(v: &Value) -> Option<u64> {
    v.as_u64()
}

fn criterion_1() -> Verdict {
    let (p, cli_time) = single_payload(&["d4", "10", "--rows"])?;
    let got = (
        u(&p["n_bar"]),
        u(&p["delta_n_bar"]),
        u(&p["p_k1"]),
        u(&p["n0"]),
        u(&p["delta_n0"]),
        p["D_m4"].as_str(),
        u(&p["p_j"]),
        u(&p["k1"]),
        u(&p["j"]),
    );
    let want = (
        Some(32),
        Some(0),
        Some(97),
        Some(35),
        Some(0),
        Some("10379"),
        Some(107),
        Some(23),
        Some(26),
    );
    ensure!(got == want, "got {got:?}, want {want:?}");

    let started = Instant::now();
    let tm = TMatrix::with_sieve(12 * 12).map_err(|e| e.to_string())?;
    let r = run_method1(&tm, 10, true).map_err(|e| e.to_string())?;
    let took = started.elapsed();
    ensure!(r.d_m4 == 10379 && r.j == Some(26), "library result {r:?}");
    ensure!(took < Duration::from_millis(10), "computation took {took:?}");
    Ok(format!("computation {took:?}; CLI process incl. startup {cli_time:?}"))
}

fn criterion_2() -> Verdict {
    let (p, _) = single_payload(&["active-set", "6"])?;
    ensure!(
        p["members"] == serde_json::json!(["1147", "1271", "1333", "1457"]),
        "members {}",
        p["members"]
    );
    let got = (u(&p["s_m"]), u(&p["q_m"]), p["critical"].as_str(), u(&p["p_k1"]), u(&p["k1"]));
    let want = (Some(2), Some(4), Some("1643"), Some(31), Some(9));
    ensure!(got == want, "got {got:?}, want {want:?}");
    Ok(String::new())
}

fn criterion_3() -> Verdict {
    let (p, _) = single_payload(&["active-set", "5"])?;
    ensure!(p["members"] == serde_json::json!(["667", "713"]), "members {}", p["members"]);
    let got = (u(&p["s_m"]), u(&p["q_m"]), p["critical"].as_str(), u(&p["p_k1"]), u(&p["k1"]));
    let want = (Some(0), Some(2), Some("851"), Some(23), Some(7));
    ensure!(got == want, "got {got:?}, want {want:?}");
    let d = sweep_matrix().lower_defining(625).map_err(|e| e.to_string())?;
    ensure!(d.value == 529, "lower_defining(625) = {}", d.value);
    Ok(String::new())
}

fn criterion_4() -> Verdict {
    let started = Instant::now();
    let mut count = 0u128;
    for x in 1..=1_000_000u128 {
        if x >= 5 && x % 2 != 0 && x % 3 != 0 {
            count += 1;
        }
        ensure!(nu(x) == count, "nu({x}) = {}, enumeration {count}", nu(x));
    }

    let tm = sweep_matrix();
    let table = tm.table();
    let all = primes();
    let mut checks = 0u64;
    for k in 1..=1000u64 {
        let p = all[k as usize + 1];
        ensure!(table.row_prime(k).unwrap() == p, "p({k})");
        let mut prev = 0u128;
        for n in 1..=1000u64 {
            let a = row_entry(p, n);
            let n = n as u128;
            for (x, want) in [(a - 1, n - 1), (a, n), ((prev + a) / 2, n - 1)] {
                let got = table.nu_row(k, x).unwrap();
                ensure!(got == want, "nu_row({k}, {x}) = {got}, row scan {want}");
                checks += 1;
            }
            prev = a;
        }
    }
    let took = started.elapsed();
    ensure!(took < Duration::from_secs(30), "took {took:?}");
    Ok(format!("10^6 closed-form values, {checks} row-scan points, {took:.2?}"))
}

fn criterion_5() -> Verdict {
    let started = Instant::now();
    let tm = sweep_matrix();
    for m in 3..=SWEEP_HI {
        let r = run_method1(tm, m, true).map_err(|e| format!("m = {m}: {e}"))?;
        let way1 = recover_pj_way1(r.d_m4, r.p_k1).map_err(|e| e.to_string())?;
        let way2 = recover_pj_way2(r.d_m4, r.p_k1).map_err(|e| e.to_string())?;
        ensure!(way1 == way2 && way2 == r.p_j as u128, "m = {m}: {way1} {way2} {}", r.p_j);
        let m4 = (m as u128).pow(4);
        ensure!(m4 % r.p_k1 as u128 != 0, "m = {m}: p(k1) divides m^4");
        ensure!(primes_in((m - 1) * (m - 1), m * m).last() == Some(&r.p_k1), "m = {m}: p(k1) not maximal");
        let d = tm.upper_defining(m4).map_err(|e| e.to_string())?.value;
        ensure!(d == r.d_m4, "m = {m}: D(m^4) {} vs operator {d}", r.d_m4);
        let delta = nu((m * m) as u128) - nu(((m - 1) * (m - 1)) as u128);
        ensure!(r.delta_n_bar + 1 <= delta as u64 && 3 * delta < 4 * m as u128, "m = {m}: scan window {delta}");
        let p = r.p_k1 as u128;
        let gap = nu(r.d_m4 / p) - nu(m4 / p);
        ensure!(3 * gap < 5 * m as u128, "m = {m}: column gap {gap}");
        ensure!(r.scan_bound_ok && r.gap_bound_ok, "m = {m}: flags");
    }
    let took = started.elapsed();
    ensure!(took < Duration::from_secs(120), "took {took:?}");
    Ok(format!("m in [3, {SWEEP_HI}], {took:.2?}"))
}

fn criterion_6() -> Verdict {
    let tm = sweep_matrix();
    let oracle = tm.oracle().unwrap();
    let mut gcd_checked = 0;
    for m in 3..=SWEEP_HI {
        let hs = build_active_set(tm, m).map_err(|e| format!("m = {m}: {e}"))?;
        let (lo, hi) = (m * m, (m + 1) * (m + 1));
        let want = primes_in(lo, hi);
        ensure!(hs.recovered_primes == want, "m = {m}: recovered {:?}, oracle {want:?}", hs.recovered_primes);
        let pi = oracle.pi(hi as u128).unwrap() - oracle.pi(lo as u128).unwrap();
        ensure!(hs.q_m == pi && hs.q_m == want.len() as u64, "m = {m}: q_m {}", hs.q_m);
        if hs.q_m >= 2 {
            ensure!(hs.gcd == Some(hs.p_k1 as u128), "m = {m}: gcd {:?}", hs.gcd);
            gcd_checked += 1;
        }
        let lead = hs.p_k1 as u128 * hs.p_k1 as u128;
        let d = tm.upper_defining_in_row(hs.k1, lead).map_err(|e| e.to_string())?;
        let min = min_prime_between(tm, m).map_err(|e| e.to_string())?;
        ensure!(
            min as u128 == d.value / hs.p_k1 as u128 && min == want[0],
            "m = {m}: min prime {min}"
        );
    }
    Ok(format!("gcd checked for {gcd_checked} values of m"))
}

fn criterion_7() -> Verdict {
    let tm = sweep_matrix();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for _ in 0..10_000 {
        let k = rng.random_range(2..=2000u64);
        let p = tm.row_prime(k).unwrap() as u128;
        let n = nu(p) as u64 + rng.random_range(1..20_000u64);
        let b = tm.table().element(MatrixIndex { k, n }).unwrap();
        let el = tm.upper_defining_in_row(k, b).map_err(|e| e.to_string())?;

        let down = tm.transition_down(&el).map_err(|e| e.to_string())?;
        let landed = tm.classify(down.target).map_err(|e| e.to_string())?;
        ensure!(landed.value == el.value && landed.is_defining, "down from {}", el.value);
        let up = tm.transition_up(&landed).map_err(|e| e.to_string())?;
        ensure!(up.target == el.index() && up.h == down.h, "up from {}", el.value);

        let (a, h, q) = (el.value, down.h, down.large_prime as u128);
        ensure!(p * p + 2 * h * p == a, "p² + 2hp ≠ a for {a}");
        ensure!(a + 2 * h * q == q * q, "a + 2hq ≠ q² for {a}");
        ensure!(a / p - p == q - a / q, "a/p − p ≠ q − a/q for {a}");
        ensure!(tm.table().element(MatrixIndex { k: down.target.k, n: el.n }).unwrap() == q * q, "q² placement for {a}");
    }
    for k in 2..=1000u64 {
        let s = tm.leading_step(k).map_err(|e| e.to_string())?;
        let (p, q, g) = (s.p_k as u128, s.p_next as u128, s.gap as u128);
        ensure!(p * p + g * p == s.value && s.value + g * q == q * q, "k = {k}");
        let d = tm.upper_defining_in_row(k, p * p).map_err(|e| e.to_string())?;
        ensure!(d.value == p * q, "D_k(p²) at k = {k}");
    }
    Ok("10^4 sampled transitions, leading steps for k in (1, 1000]".into())
}

fn criterion_8() -> Verdict {
    let hi = SCAN_HI.to_string();
    let (out, took) = cli(&["--format", "json", "--jobs", "1", "verify", "3", &hi])?;
    let recs = json_records(&out)?;
    ensure!(recs.len() as u64 == SCAN_HI - 1, "{} records", recs.len());
    for r in &recs[..recs.len() - 1] {
        let m = u(&r["m"]).ok_or("record without m")?;
        let p = &r["payload"];
        let want = primes_in(m * m, (m + 1) * (m + 1));
        ensure!(p["legendre_true"] == true && !want.is_empty(), "m = {m}: legendre");
        ensure!(u(&p["q_m"]) == Some(want.len() as u64), "m = {m}: q_m vs oracle");
    }
    let s = &recs[recs.len() - 1]["payload"];
    ensure!(s["legendre_counterexamples"] == serde_json::json!([]), "counterexamples {}", s["legendre_counterexamples"]);
    ensure!(took < Duration::from_secs(600), "verify took {took:?}");

    let tm = TMatrix::with_sieve(1002 * 1002).map_err(|e| e.to_string())?;
    let oracle = tm.oracle().unwrap();
    let all = primes();
    for x in 2..=1000u64 {
        let left = primes_in(x * x, (x + 1) * (x + 1)).len() as u64;
        let (x4, y4) = ((x as u128).pow(4), (x as u128 + 1).pow(4));
        let right = oracle.pi_leading(y4).unwrap() - oracle.pi_leading(x4).unwrap();
        // leading elements p² with p ≥ 5, squared and compared directly
        let brute = all
            .iter()
            .take_while(|&&p| (p as u128).pow(2) <= y4)
            .filter(|&&p| p >= 5 && x4 < (p as u128).pow(2))
            .count() as u64;
        ensure!(left == right && right == brute, "x = {x}: {left} {right} {brute}");
    }

    let small = "2000";
    let (_, t1) = cli(&["--format", "json", "--jobs", "1", "verify", "3", small])?;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let (_, tn) = cli(&["--format", "json", "--jobs", &cores.to_string(), "verify", "3", small])?;
    Ok(format!(
        "census Outcome1={} Outcome2={} Outcome3={}; strong failures {}; verify 3..{SCAN_HI} took {took:.2?}; \
         speedup on verify 3..{small} with {cores} core(s): {:.2}x",
        s["outcome1"],
        s["outcome2"],
        s["outcome3"],
        s["strong_failures"].as_array().map_or(0, Vec::len),
        t1.as_secs_f64() / tn.as_secs_f64()
    ))
}

fn criterion_9() -> Verdict {
    let (p, _) = single_payload(&["bench", "1000", "2000", "4000", "8000"])?;
    let rows = p["rows"].as_array().ok_or("no rows")?;
    ensure!(rows.len() == 4, "{} rows", rows.len());
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("m={} {:.3e}s", r["m"], r["seconds_per_run"].as_f64().unwrap_or(f64::NAN)))
        .collect();
    let e = p["exponent"].as_f64().ok_or("no exponent")?;
    ensure!(e < 2.0, "fitted exponent {e:.3} ({})", table.join(", "));
    Ok(format!("exponent {e:.3}; {}", table.join(", ")))
}

fn criterion_10() -> Verdict {
    let (a, _) = cli(&["--format", "json", "--jobs", "1", "verify", "3", "500"])?;
    let (b, _) = cli(&["--format", "json", "--jobs", "8", "verify", "3", "500"])?;
    ensure!(a == b, "outputs differ");
    Ok(format!("{} bytes identical", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("d4 10 --rows trace", criterion_1),
        ("active-set 6", criterion_2),
        ("active-set 5 and d(625)", criterion_3),
        ("closed-form counting", criterion_4),
        ("method consistency sweep", criterion_5),
        ("active-set sweep", criterion_6),
        ("transition identities", criterion_7),
        ("outcome scan", criterion_8),
        ("sub-quadratic scaling", criterion_9),
        ("determinism across --jobs", criterion_10),
    ];
    // keep panics from the criteria on the FAIL line only
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let took = started.elapsed();
        match verdict {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} [{took:.2?}] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} [{took:.2?}] {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
