//! Convergence history files.
//!
//! Whitespace-separated text with a header row and six columns
//!
//! ```text
//! iteration J grad_norm residual step mode
//! 0 2.75e-4 2.02e-2 1.5e-3 9e-1 gradient
//! ...
//! # termination: max-iterations
//! ```
//!
//! Lines starting with `#` are comments. The writer flushes after every
//! record so a running optimization can be followed with `tail -f`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::driver::{IterationRecord, StepMode};
use crate::{Error, Result};

pub const HEADER: [&str; 6] = ["iteration", "J", "grad_norm", "residual", "step", "mode"];

/// One line of a history file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryRow {
    pub k: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub residual: f64,
    pub step: f64,
    pub mode: StepMode,
}

impl From<&IterationRecord> for HistoryRow {
    fn from(r: &IterationRecord) -> Self {
        HistoryRow { k: r.k, objective: r.objective, grad_norm: r.grad_norm, residual: r.residual, step: r.step, mode: r.mode }
    }
}

pub struct HistoryWriter<W: Write> {
    w: W,
}

impl HistoryWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> HistoryWriter<W> {
    /// Writes the header row.
    pub fn new(mut w: W) -> Result<Self> {
        writeln!(w, "{}", HEADER.join(" "))?;
        w.flush()?;
        Ok(HistoryWriter { w })
    }

    pub fn push(&mut self, row: &HistoryRow) -> Result<()> {
        writeln!(
            self.w,
            "{} {:e} {:e} {:e} {:e} {}",
            row.k,
            row.objective,
            row.grad_norm,
            row.residual,
            row.step,
            row.mode.name()
        )?;
        self.w.flush()?;
        Ok(())
    }

    /// Appends one `# ` comment line per entry of `text` (split on newlines).
    pub fn comment(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            writeln!(self.w, "# {line}")?;
        }
        self.w.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.w
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub rows: Vec<HistoryRow>,
    /// Comment lines without the leading `#` and one optional space.
    pub comments: Vec<String>,
}

impl History {
    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut out = History::default();
        let mut header_seen = false;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(c) = t.strip_prefix('#') {
                out.comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                continue;
            }
            let cols: Vec<&str> = t.split_whitespace().collect();
            if !header_seen {
                if cols != HEADER {
                    return Err(Error::Parse { line: lineno, msg: format!("expected header `{}`", HEADER.join(" ")) });
                }
                header_seen = true;
                continue;
            }
            if cols.len() != 6 {
                return Err(Error::Parse { line: lineno, msg: format!("expected 6 columns, found {}", cols.len()) });
            }
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("not a number: {s}") })
            };
            let k = cols[0].parse().map_err(|_| Error::Parse { line: lineno, msg: format!("not an iteration index: {}", cols[0]) })?;
            if let Some(prev) = out.rows.last() {
                if k <= prev.k {
                    return Err(Error::Parse { line: lineno, msg: format!("iteration {k} does not increase") });
                }
            }
            out.rows.push(HistoryRow {
                k,
                objective: num(cols[1])?,
                grad_norm: num(cols[2])?,
                residual: num(cols[3])?,
                step: num(cols[4])?,
                mode: StepMode::from_name(cols[5])
                    .ok_or_else(|| Error::Parse { line: lineno, msg: format!("unknown mode: {}", cols[5]) })?,
            });
        }
        if !header_seen {
            return Err(Error::Parse { line: 0, msg: "missing header".into() });
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.residual).collect()
    }
}
