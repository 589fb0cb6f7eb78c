//! The `.fpg` text format:
//!
//! ```text
//! fpg 1
//! <m> <n>
//! <m lines of n tokens: row-player matrix>
//! <m lines of n tokens: column-player matrix>
//! ```
//!
//! Tokens are signed integers or `p/q` with `q > 0`. Lines starting with `#`
//! (and blank lines) are skipped.

use std::io::{BufRead, Write};
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::game::{fmt_rational, BimatrixGame, Player, Rational};

const MAGIC: &str = "fpg 1";

pub fn write_game<W: Write>(game: &BimatrixGame, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "{} {}", game.rows(), game.cols())?;
    for player in [Player::Row, Player::Col] {
        for row in game.matrix(player) {
            let line: Vec<String> = row.iter().map(fmt_rational).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

pub fn write_game_file(game: &BimatrixGame, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_game(game, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_game_file(path: &Path) -> Result<BimatrixGame> {
    let f = std::fs::File::open(path)?;
    read_game(std::io::BufReader::new(f))
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Parses `[-+]digits` or `[-+]digits/digits` with a positive denominator.
pub fn parse_rational(token: &str) -> std::result::Result<Rational, String> {
    let digits = |s: &str, signed: bool| -> std::result::Result<BigInt, String> {
        let body = if signed {
            s.strip_prefix(['-', '+']).unwrap_or(s)
        } else {
            s
        };
        if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("invalid number token `{token}`"));
        }
        s.parse::<BigInt>()
            .map_err(|_| format!("invalid number token `{token}`"))
    };
    match token.split_once('/') {
        None => Ok(Rational::from_integer(digits(token, true)?)),
        Some((p, q)) => {
            let num = digits(p, true)?;
            let den = digits(q, false)?;
            if den.is_zero() {
                return Err(format!("zero denominator in token `{token}`"));
            }
            debug_assert!(den.is_positive());
            Ok(Rational::new(num, den))
        }
    }
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next content line with its 1-based line number.
    fn next_content(&mut self) -> Result<Option<(usize, String)>> {
        for line in self.inner.by_ref() {
            self.number += 1;
            let line = line?;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Ok(Some((self.number, trimmed.to_string())));
        }
        Ok(None)
    }
}

/// Whitespace-separated tokens paired with their 1-based starting column.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

pub fn read_game<R: BufRead>(input: R) -> Result<BimatrixGame> {
    let mut lines = Lines {
        inner: input.lines(),
        number: 0,
    };
    let (ln, magic) = lines
        .next_content()?
        .ok_or_else(|| parse_err(1, 1, "missing `fpg 1` header"))?;
    if magic.trim() != MAGIC {
        return Err(parse_err(ln, 1, format!("expected `{MAGIC}`, found `{}`", magic.trim())));
    }
    let (ln, dims) = lines
        .next_content()?
        .ok_or_else(|| parse_err(ln + 1, 1, "missing dimension line"))?;
    let dims_tok = tokens(&dims);
    if dims_tok.len() != 2 {
        return Err(parse_err(ln, 1, "dimension line must be `<m> <n>`"));
    }
    let mut size = [0usize; 2];
    for (slot, (col, tok)) in size.iter_mut().zip(&dims_tok) {
        *slot = tok
            .parse::<usize>()
            .ok()
            .filter(|v| *v > 0)
            .ok_or_else(|| parse_err(ln, *col, format!("invalid dimension `{tok}`")))?;
    }
    let [m, n] = size;
    let mut matrices = Vec::with_capacity(2);
    for which in ["row-player", "column-player"] {
        let mut mat = Vec::with_capacity(m);
        for r in 0..m {
            let (ln, line) = lines.next_content()?.ok_or_else(|| {
                parse_err(
                    lines.number + 1,
                    1,
                    format!("{which} matrix ends after {r} of {m} rows"),
                )
            })?;
            let toks = tokens(&line);
            if toks.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "line {ln}: {which} row {} has {} entries, expected {n}",
                    r + 1,
                    toks.len()
                )));
            }
            let row = toks
                .into_iter()
                .map(|(col, tok)| parse_rational(tok).map_err(|msg| parse_err(ln, col, msg)))
                .collect::<Result<Vec<_>>>()?;
            mat.push(row);
        }
        matrices.push(mat);
    }
    if let Some((ln, _)) = lines.next_content()? {
        return Err(parse_err(ln, 1, "unexpected content after column-player matrix"));
    }
    let col = matrices.pop().expect("two matrices");
    let row = matrices.pop().expect("two matrices");
    BimatrixGame::new(row, col)
}
