use std::fs::OpenOptions;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tmatrix::activeset::ActiveSet;
use tmatrix::method1::Method1Result;
use tmatrix::verifier::{BenchReport, OutcomeReport, RangeSummary};

use crate::fragment::Grid;
use crate::{Format, Result};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize, Deserialize)]
pub struct OutputRecord<T> {
    pub schema_version: String,
    pub command: String,
    pub m: Option<u64>,
    pub payload: T,
}

#[derive(Serialize)]
struct VerifyRow {
    m: u64,
    legendre: bool,
    weak: bool,
    strong: bool,
    outcome: String,
    p_k1: u64,
    #[serde(rename = "D_m4")]
    d_m4: String,
    p_j: u64,
    q_m: u64,
}

#[derive(Serialize)]
struct NuPayload<'a> {
    x: &'a str,
    nu: String,
}

/// Where records go. CSV headers are written once, and not at all when
/// appending to a non-empty file.
pub struct Sink {
    w: Box<dyn Write>,
    format: Format,
    csv_header: bool,
}

impl Sink {
    pub fn stdout(format: Format) -> Self {
        Sink {
            w: Box::new(BufWriter::new(io::stdout().lock())),
            format,
            csv_header: true,
        }
    }

    pub fn append(path: &Path, format: Format) -> Result<Self> {
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        let empty = f.metadata()?.len() == 0;
        Ok(Sink {
            w: Box::new(BufWriter::new(f)),
            format,
            csv_header: empty,
        })
    }

    pub fn flush(&mut self) -> Result<()> {
        Ok(self.w.flush()?)
    }

    fn json<T: Serialize>(&mut self, command: &str, m: Option<u64>, payload: &T) -> Result<()> {
        let rec = OutputRecord {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            m,
            payload,
        };
        serde_json::to_writer(&mut self.w, &rec)?;
        self.w.write_all(b"\n")?;
        Ok(())
    }

    fn csv_rows<T: Serialize>(&mut self, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut c = csv::WriterBuilder::new()
            .has_headers(self.csv_header)
            .from_writer(&mut self.w);
        for r in rows {
            c.serialize(r)?;
            self.csv_header = false;
        }
        c.flush()?;
        Ok(())
    }

    pub fn method1(&mut self, r: &Method1Result) -> Result<()> {
        match self.format {
            Format::Json => self.json("d4", Some(r.m), r)?,
            Format::Csv => self.csv_rows([r])?,
            Format::Text => {
                let w = &mut self.w;
                writeln!(w, "m            {}", r.m)?;
                writeln!(w, "n_bar        {}   (delta {})", r.n_bar, r.delta_n_bar)?;
                writeln!(w, "p(k1)        {}", r.p_k1)?;
                writeln!(w, "n0           {}   (delta {})", r.n0, r.delta_n0)?;
                writeln!(w, "D(m^4)       {}", r.d_m4)?;
                writeln!(w, "h            {}", r.h)?;
                writeln!(w, "p(j)         {}", r.p_j)?;
                if let (Some(k1), Some(j)) = (r.k1, r.j) {
                    writeln!(w, "k1, j        {k1}, {j}")?;
                }
                writeln!(w, "m² < p(j) < (m+1)²: {}", r.conjecture_holds)?;
            }
        }
        self.flush()
    }

    pub fn active_set(&mut self, hs: &ActiveSet) -> Result<()> {
        match self.format {
            Format::Json => self.json("active-set", Some(hs.m), hs)?,
            Format::Csv => {
                #[derive(Serialize)]
                struct Row {
                    role: &'static str,
                    value: String,
                    quotient: String,
                }
                let p = hs.p_k1 as u128;
                let rows = hs
                    .members
                    .iter()
                    .map(|&a| ("member", a))
                    .chain([("critical", hs.critical)])
                    .map(|(role, a)| Row {
                        role,
                        value: a.to_string(),
                        quotient: (a / p).to_string(),
                    })
                    .collect::<Vec<_>>();
                self.csv_rows(rows)?;
            }
            Format::Text => {
                let w = &mut self.w;
                let members: Vec<String> = hs.members.iter().map(u128::to_string).collect();
                writeln!(w, "m          {}", hs.m)?;
                writeln!(w, "p(k1)      {}   (k1 = {})", hs.p_k1, hs.k1)?;
                writeln!(w, "members    {{{}}}", members.join(", "))?;
                writeln!(w, "s_m, q_m   {}, {}", hs.s_m, hs.q_m)?;
                writeln!(w, "critical   {}", hs.critical)?;
                writeln!(w, "primes     {:?}", hs.recovered_primes)?;
                if hs.legendre_counterexample {
                    writeln!(w, "no prime in (m², (m+1)²)")?;
                }
            }
        }
        self.flush()
    }

    pub fn outcome(&mut self, r: &OutcomeReport) -> Result<()> {
        match self.format {
            Format::Json => self.json("verify", Some(r.m), r),
            Format::Csv => self.csv_rows([VerifyRow {
                m: r.m,
                legendre: r.legendre_true,
                weak: r.weak_true,
                strong: r.strong_true,
                outcome: r.outcome.to_string(),
                p_k1: r.p_k1,
                d_m4: r.witness.d_m4.to_string(),
                p_j: r.witness.p_j,
                q_m: r.q_m,
            }]),
            Format::Text => Ok(writeln!(
                self.w,
                "m={} legendre={} weak={} strong={} {} p_k1={} D_m4={} p_j={} q_m={}",
                r.m,
                r.legendre_true,
                r.weak_true,
                r.strong_true,
                r.outcome,
                r.p_k1,
                r.witness.d_m4,
                r.witness.p_j,
                r.q_m
            )?),
        }
    }

    pub fn summary(&mut self, s: &RangeSummary) -> Result<()> {
        match self.format {
            Format::Json => self.json("verify", None, s),
            // the CSV stream carries per-m rows only
            Format::Csv => Ok(()),
            Format::Text => {
                let w = &mut self.w;
                writeln!(w, "range [{}, {}]: {} evaluated", s.m_lo, s.m_hi, s.evaluated)?;
                writeln!(w, "Outcome1 {}  Outcome2 {}  Outcome3 {}", s.outcome1, s.outcome2, s.outcome3)?;
                writeln!(w, "legendre counterexamples {:?}", s.legendre_counterexamples)?;
                writeln!(w, "strong failures {:?}", s.strong_failures)?;
                writeln!(w, "bound violations {}", s.bound_violations.len())?;
                Ok(())
            }
        }
    }

    pub fn fragment(&mut self, g: &Grid) -> Result<()> {
        match self.format {
            Format::Json => self.json("fragment", g.annotate, g)?,
            Format::Csv => {
                #[derive(Serialize)]
                struct Row {
                    k: u64,
                    n: u64,
                    value: String,
                    markers: String,
                }
                let rows = g
                    .rows
                    .iter()
                    .flat_map(|r| {
                        r.cells.iter().map(|c| Row {
                            k: r.k,
                            n: c.n,
                            value: c.value.to_string(),
                            markers: c.markers.clone(),
                        })
                    })
                    .collect::<Vec<_>>();
                self.csv_rows(rows)?;
            }
            Format::Text => g.render(&mut self.w)?,
        }
        self.flush()
    }

    pub fn nu(&mut self, x: &str, nu: u128) -> Result<()> {
        match self.format {
            Format::Json => self.json("nu", None, &NuPayload { x, nu: nu.to_string() })?,
            Format::Csv => self.csv_rows([NuPayload { x, nu: nu.to_string() }])?,
            Format::Text => writeln!(self.w, "{nu}")?,
        }
        self.flush()
    }

    pub fn bench(&mut self, b: &BenchReport) -> Result<()> {
        match self.format {
            Format::Json => self.json("bench", None, b)?,
            Format::Csv => self.csv_rows(&b.rows)?,
            Format::Text => {
                let w = &mut self.w;
                writeln!(w, "{:>12} {:>10} {:>14}", "m", "runs", "seconds/run")?;
                for r in &b.rows {
                    writeln!(w, "{:>12} {:>10} {:>14.3e}", r.m, r.runs, r.seconds_per_run)?;
                }
                match b.exponent {
                    Some(e) => writeln!(w, "fitted exponent {e:.3}")?,
                    None => writeln!(w, "fitted exponent n/a")?,
                }
            }
        }
        self.flush()
    }
}
