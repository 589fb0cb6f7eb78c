//! Exact-rational bimatrix games, mixed strategies, best responses and regret.
//!
//! Every quantity here is an exact [`Rational`]; nothing is rounded. Ties in
//! best responses are reported as full argmax sets and never broken here.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical exact rational (reduced, positive denominator).
pub type Rational = num_rational::BigRational;

/// Shorthand for building a rational from small integers.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Formats as `p/q`, or `p` when the denominator is one.
pub fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Lossy float mirror for reports.
pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    Row,
    Col,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::Row => Player::Col,
            Player::Col => Player::Row,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Row => write!(f, "row"),
            Player::Col => write!(f, "col"),
        }
    }
}

/// A probability vector over one player's strategies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedStrategy {
    probs: Vec<Rational>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<Rational>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidMix("empty probability vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| p.is_negative()) {
            return Err(Error::InvalidMix(format!(
                "negative probability {}",
                fmt_rational(p)
            )));
        }
        let total: Rational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidMix(format!(
                "probabilities sum to {}",
                fmt_rational(&total)
            )));
        }
        Ok(MixedStrategy { probs })
    }

    pub fn pure(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::IndexOutOfBounds { index, len });
        }
        let mut probs = vec![Rational::zero(); len];
        probs[index] = Rational::one();
        Ok(MixedStrategy { probs })
    }

    /// Uniform over the given (distinct) indices.
    pub fn uniform_over(len: usize, support: &[usize]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidMix("empty support".into()));
        }
        let mut probs = vec![Rational::zero(); len];
        let w = rat(1, support.len() as i64);
        for &i in support {
            if i >= len {
                return Err(Error::IndexOutOfBounds { index: i, len });
            }
            if !probs[i].is_zero() {
                return Err(Error::InvalidMix(format!("duplicate support index {i}")));
            }
            probs[i] = w.clone();
        }
        Ok(MixedStrategy { probs })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        let all: Vec<usize> = (0..len).collect();
        Self::uniform_over(len, &all)
    }

    /// Empirical distribution `counts[i] / sum(counts)`.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidMix("all counts are zero".into()));
        }
        let total = BigInt::from(total);
        let probs = counts
            .iter()
            .map(|&c| Rational::new(BigInt::from(c), total.clone()))
            .collect();
        Ok(MixedStrategy { probs })
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(i, _)| i)
    }
}

/// Regret of one player's mix against the opponent's mix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Regret {
    pub raw: Rational,
    /// `raw` divided by the player's payoff range width (0 for constant payoffs).
    pub normalized: Rational,
}

/// Two-player normal-form game with exact rational payoffs.
///
/// Matrices are stored row-major; entry `(i, j)` is the payoff when the row
/// player picks `i` and the column player picks `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BimatrixGame {
    rows: usize,
    cols: usize,
    row_payoffs: Vec<Rational>,
    col_payoffs: Vec<Rational>,
    ranges: [(Rational, Rational); 2],
}

fn flatten(m: Vec<Vec<Rational>>, what: &str) -> Result<(usize, usize, Vec<Rational>)> {
    let rows = m.len();
    if rows == 0 || m[0].is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let cols = m[0].len();
    if let Some((i, r)) = m.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(Error::DimensionMismatch(format!(
            "{what} row {} has {} entries, expected {cols}",
            i + 1,
            r.len()
        )));
    }
    Ok((rows, cols, m.into_iter().flatten().collect()))
}

fn min_max(v: &[Rational]) -> (Rational, Rational) {
    let mut lo = v[0].clone();
    let mut hi = v[0].clone();
    for x in &v[1..] {
        if *x < lo {
            lo = x.clone();
        }
        if *x > hi {
            hi = x.clone();
        }
    }
    (lo, hi)
}

impl BimatrixGame {
    /// Validates dimensions and caches each player's payoff range.
    pub fn new(row: Vec<Vec<Rational>>, col: Vec<Vec<Rational>>) -> Result<Self> {
        let (m, n, row_payoffs) = flatten(row, "row-player matrix")?;
        let (m2, n2, col_payoffs) = flatten(col, "column-player matrix")?;
        if (m, n) != (m2, n2) {
            return Err(Error::DimensionMismatch(format!(
                "row-player matrix is {m}x{n} but column-player matrix is {m2}x{n2}"
            )));
        }
        let ranges = [min_max(&row_payoffs), min_max(&col_payoffs)];
        Ok(BimatrixGame {
            rows: m,
            cols: n,
            row_payoffs,
            col_payoffs,
            ranges,
        })
    }

    /// Builds a symmetric game `(R, Rᵀ)`.
    pub fn symmetric(row: Vec<Vec<Rational>>) -> Result<Self> {
        let n = row.len();
        if row.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(
                "symmetric game needs a square matrix".into(),
            ));
        }
        let col = (0..n)
            .map(|i| (0..n).map(|j| row[j][i].clone()).collect())
            .collect();
        Self::new(row, col)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn strategy_count(&self, player: Player) -> usize {
        match player {
            Player::Row => self.rows,
            Player::Col => self.cols,
        }
    }

    /// Payoff to `player` at the cell (row strategy `i`, column strategy `j`).
    pub fn payoff(&self, player: Player, i: usize, j: usize) -> &Rational {
        let idx = i * self.cols + j;
        match player {
            Player::Row => &self.row_payoffs[idx],
            Player::Col => &self.col_payoffs[idx],
        }
    }

    /// Payoff to `player` when it plays `own` and the opponent plays `opp`.
    pub fn payoff_from(&self, player: Player, own: usize, opp: usize) -> &Rational {
        match player {
            Player::Row => self.payoff(player, own, opp),
            Player::Col => self.payoff(player, opp, own),
        }
    }

    pub fn matrix(&self, player: Player) -> Vec<Vec<Rational>> {
        let flat = match player {
            Player::Row => &self.row_payoffs,
            Player::Col => &self.col_payoffs,
        };
        flat.chunks(self.cols).map(|r| r.to_vec()).collect()
    }

    /// Cached `(min, max)` of the player's payoffs.
    pub fn payoff_range(&self, player: Player) -> &(Rational, Rational) {
        match player {
            Player::Row => &self.ranges[0],
            Player::Col => &self.ranges[1],
        }
    }

    pub fn range_width(&self, player: Player) -> Rational {
        let (lo, hi) = self.payoff_range(player);
        hi - lo
    }

    /// True when every payoff of both players lies in `[0, 1]`.
    pub fn is_unit_range(&self) -> bool {
        self.ranges
            .iter()
            .all(|(lo, hi)| !lo.is_negative() && *hi <= Rational::one())
    }

    fn check_mix(&self, player: Player, mix: &MixedStrategy) -> Result<()> {
        let expected = self.strategy_count(player);
        if mix.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: mix.len(),
            });
        }
        Ok(())
    }

    /// Payoff of each of `player`'s pure strategies against `opp_mix`.
    pub fn payoff_vector(&self, player: Player, opp_mix: &MixedStrategy) -> Result<Vec<Rational>> {
        self.check_mix(player.other(), opp_mix)?;
        let own = self.strategy_count(player);
        let mut out = vec![Rational::zero(); own];
        for opp in opp_mix.support() {
            let w = &opp_mix.probs()[opp];
            for (s, slot) in out.iter_mut().enumerate() {
                let u = self.payoff_from(player, s, opp);
                if !u.is_zero() {
                    *slot += w * u;
                }
            }
        }
        Ok(out)
    }

    /// Bilinear expected payoff `u_player(row_mix, col_mix)`.
    pub fn expected_payoff(
        &self,
        player: Player,
        row_mix: &MixedStrategy,
        col_mix: &MixedStrategy,
    ) -> Result<Rational> {
        self.check_mix(Player::Row, row_mix)?;
        self.check_mix(Player::Col, col_mix)?;
        let mut total = Rational::zero();
        for i in row_mix.support() {
            for j in col_mix.support() {
                let u = self.payoff(player, i, j);
                if !u.is_zero() {
                    total += &row_mix.probs()[i] * &col_mix.probs()[j] * u;
                }
            }
        }
        Ok(total)
    }

    /// All strategies attaining the exact maximum payoff, ascending.
    pub fn best_response_set(&self, player: Player, opp_mix: &MixedStrategy) -> Result<Vec<usize>> {
        let v = self.payoff_vector(player, opp_mix)?;
        Ok(argmax_set(&v))
    }

    pub fn regret(
        &self,
        player: Player,
        own_mix: &MixedStrategy,
        opp_mix: &MixedStrategy,
    ) -> Result<Regret> {
        self.check_mix(player, own_mix)?;
        let v = self.payoff_vector(player, opp_mix)?;
        let best = v.iter().max().cloned().unwrap_or_else(Rational::zero);
        let achieved: Rational = own_mix
            .support()
            .map(|s| &own_mix.probs()[s] * &v[s])
            .sum();
        let raw = best - achieved;
        let width = self.range_width(player);
        let normalized = if width.is_zero() {
            Rational::zero()
        } else {
            &raw / &width
        };
        Ok(Regret { raw, normalized })
    }

    /// Affinely maps each player's payoffs onto `[0, 1]` using its own range.
    pub fn normalize_to_unit(&self) -> BimatrixGame {
        let map = |flat: &[Rational], (lo, hi): &(Rational, Rational)| -> Vec<Rational> {
            let width = hi - lo;
            if width.is_zero() {
                vec![Rational::zero(); flat.len()]
            } else {
                flat.iter().map(|x| (x - lo) / &width).collect()
            }
        };
        let row_payoffs = map(&self.row_payoffs, &self.ranges[0]);
        let col_payoffs = map(&self.col_payoffs, &self.ranges[1]);
        let ranges = [min_max(&row_payoffs), min_max(&col_payoffs)];
        BimatrixGame {
            rows: self.rows,
            cols: self.cols,
            row_payoffs,
            col_payoffs,
            ranges,
        }
    }

    /// Pure profiles where neither player has a strictly better deviation.
    pub fn pure_nash_equilibria(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let r = self.payoff(Player::Row, i, j);
                let c = self.payoff(Player::Col, i, j);
                let row_ok = (0..self.rows).all(|k| self.payoff(Player::Row, k, j) <= r);
                let col_ok = (0..self.cols).all(|k| self.payoff(Player::Col, i, k) <= c);
                if row_ok && col_ok {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Indices attaining the maximum of `v`, ascending. Empty only for empty input.
pub fn argmax_set<T: Ord>(v: &[T]) -> Vec<usize> {
    let Some(best) = v.iter().max() else {
        return Vec::new();
    };
    v.iter()
        .enumerate()
        .filter(|(_, x)| *x == best)
        .map(|(i, _)| i)
        .collect()
}
