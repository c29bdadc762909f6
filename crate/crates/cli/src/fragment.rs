use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use tmatrix::activeset::build_active_set;
use tmatrix::{MatrixIndex, TMatrix};

use crate::{CliError, Result};

/// Largest number of cells a fragment may have.
pub const MAX_CELLS: u64 = 10_000;

/// Inclusive 1-based index range, written `a` or `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub lo: u64,
    pub hi: u64,
}

impl Span {
    fn len(&self) -> u64 {
        self.hi - self.lo + 1
    }
}

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
            None => (num(s)?, num(s)?),
        };
        if lo == 0 || lo > hi {
            return Err(format!("{s:?} is not a non-empty 1-based range"));
        }
        Ok(Span { lo, hi })
    }
}

pub fn check_size(rows: &Span, cols: &Span) -> Result<()> {
    let cells = rows.len().saturating_mul(cols.len());
    if cells > MAX_CELLS {
        return Err(tmatrix::Error::Range {
            what: format!("fragment of {cells} cells"),
            limit: MAX_CELLS.to_string(),
        }
        .into());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Cell {
    pub n: u64,
    #[serde(with = "tmatrix::decimal")]
    pub value: u128,
    /// Any of `D` (defining), `L` (leading), `H` (active-set member),
    /// `C` (critical).
    pub markers: String,
}

#[derive(Debug, Serialize)]
pub struct GridRow {
    pub k: u64,
    pub p_k: u64,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Serialize)]
pub struct Grid {
    pub annotate: Option<u64>,
    pub rows: Vec<GridRow>,
}

pub fn build(tm: &TMatrix, rows: &Span, cols: &Span, annotate: Option<u64>) -> Result<Grid> {
    let hs = annotate.map(|m| build_active_set(tm, m)).transpose()?;
    let mut out = Vec::with_capacity(rows.len() as usize);
    for k in rows.lo..=rows.hi {
        let mut cells = Vec::with_capacity(cols.len() as usize);
        for n in cols.lo..=cols.hi {
            let el = tm.classify(MatrixIndex { k, n })?;
            let mut markers = String::new();
            if el.is_defining {
                markers.push('D');
            }
            if el.is_leading {
                markers.push('L');
            }
            if let Some(hs) = hs.as_ref().filter(|hs| hs.k1 == k) {
                if hs.members.binary_search(&el.value).is_ok() {
                    markers.push('H');
                } else if hs.critical == el.value {
                    markers.push('C');
                }
            }
            cells.push(Cell { n, value: el.value, markers });
        }
        out.push(GridRow {
            k,
            p_k: tm.row_prime(k)?,
            cells,
        });
    }
    if out.is_empty() {
        return Err(CliError::Usage("empty fragment".into()));
    }
    Ok(Grid { annotate, rows: out })
}

impl Grid {
    pub fn render(&self, w: &mut dyn Write) -> std::io::Result<()> {
        let text = |c: &Cell| {
            if c.markers.is_empty() {
                c.value.to_string()
            } else {
                format!("{}[{}]", c.value, c.markers)
            }
        };
        let first = &self.rows[0].cells;
        let mut width = vec![0usize; first.len()];
        for (i, c) in first.iter().enumerate() {
            width[i] = c.n.to_string().len().max(tmatrix::wheel(c.n).to_string().len());
        }
        for r in &self.rows {
            for (i, c) in r.cells.iter().enumerate() {
                width[i] = width[i].max(text(c).len());
            }
        }
        let label = self
            .rows
            .iter()
            .map(|r| format!("{} ({})", r.k, r.p_k).len())
            .max()
            .unwrap_or(0)
            .max("k (p) \\ f(n)".len());

        write!(w, "{:>label$}", "n")?;
        for (i, c) in first.iter().enumerate() {
            write!(w, "  {:>1$}", c.n, width[i])?;
        }
        writeln!(w)?;
        write!(w, "{:>label$}", "k (p) \\ f(n)")?;
        for (i, c) in first.iter().enumerate() {
            write!(w, "  {:>1$}", tmatrix::wheel(c.n), width[i])?;
        }
        writeln!(w)?;
        for r in &self.rows {
            write!(w, "{:>label$}", format!("{} ({})", r.k, r.p_k))?;
            for (i, c) in r.cells.iter().enumerate() {
                write!(w, "  {:>1$}", text(c), width[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
