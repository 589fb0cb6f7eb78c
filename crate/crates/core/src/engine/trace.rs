use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A maximal stretch of identical joint actions (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub row: usize,
    pub col: usize,
    pub len: u64,
}

/// Run-length-encoded joint action sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    runs: Vec<Run>,
    total_t: u64,
}

pub const TRACE_CSV_HEADER: &str = "row_action,col_action,length";

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one step.
    pub fn push(&mut self, row: usize, col: usize) {
        self.push_run(row, col, 1);
    }

    /// Appends `len` identical steps, merging with the last run if equal.
    pub fn push_run(&mut self, row: usize, col: usize, len: u64) {
        if len == 0 {
            return;
        }
        self.total_t += len;
        if let Some(last) = self.runs.last_mut() {
            if last.row == row && last.col == col {
                last.len += len;
                return;
            }
        }
        self.runs.push(Run { row, col, len });
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn total_t(&self) -> u64 {
        self.total_t
    }

    pub fn is_empty(&self) -> bool {
        self.total_t == 0
    }

    pub fn last(&self) -> Option<(usize, usize)> {
        self.runs.last().map(|r| (r.row, r.col))
    }

    /// First `t` steps of this trace.
    pub fn prefix(&self, t: u64) -> Trace {
        let mut out = Trace::new();
        let mut left = t;
        for r in &self.runs {
            if left == 0 {
                break;
            }
            let take = r.len.min(left);
            out.push_run(r.row, r.col, take);
            left -= take;
        }
        out
    }

    /// Every step as `(row, col)`; intended for short traces only.
    pub fn steps(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.runs
            .iter()
            .flat_map(|r| std::iter::repeat_n((r.row, r.col), r.len as usize))
    }

    /// Checks the run invariants: positive lengths, adjacent runs differ,
    /// lengths sum to `total_t`.
    pub fn validate(&self) -> Result<()> {
        let mut sum = 0u64;
        for (i, r) in self.runs.iter().enumerate() {
            if r.len == 0 {
                return Err(Error::Trace(format!("run {} has zero length", i + 1)));
            }
            if i > 0 && (self.runs[i - 1].row, self.runs[i - 1].col) == (r.row, r.col) {
                return Err(Error::Trace(format!("runs {} and {} are not maximal", i, i + 1)));
            }
            sum += r.len;
        }
        if sum != self.total_t {
            return Err(Error::Trace(format!("run lengths sum to {sum}, expected {}", self.total_t)));
        }
        Ok(())
    }

    /// Writes the CSV form with 1-based actions.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for r in &self.runs {
            writeln!(out, "{},{},{}", r.row + 1, r.col + 1, r.len)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Trace> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Trace("empty trace file".into()))?;
        if header.trim_end_matches('\r') != TRACE_CSV_HEADER {
            return Err(Error::Trace(format!("bad header `{header}`")));
        }
        let mut trace = Trace::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let lineno = i + 2;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Trace(format!("line {lineno}: expected 3 fields")));
            }
            let num = |s: &str| -> Result<u64> {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Trace(format!("line {lineno}: invalid number `{s}`")))
            };
            let (row, col, len) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
            if row == 0 || col == 0 || len == 0 {
                return Err(Error::Trace(format!(
                    "line {lineno}: actions are 1-based and lengths positive"
                )));
            }
            trace.push_run(row as usize - 1, col as usize - 1, len);
        }
        Ok(trace)
    }

    pub fn read_csv_file(path: &std::path::Path) -> Result<Trace> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }

    /// Fails if any action index is outside a `rows × cols` game.
    pub fn check_bounds(&self, rows: usize, cols: usize) -> Result<()> {
        match self.runs.iter().find(|r| r.row >= rows || r.col >= cols) {
            Some(r) => Err(Error::Trace(format!(
                "action ({}, {}) outside a {rows}x{cols} game",
                r.row + 1,
                r.col + 1
            ))),
            None => Ok(()),
        }
    }
}
