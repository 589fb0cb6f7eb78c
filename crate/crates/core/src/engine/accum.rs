//! Integer-scaled cumulative payoffs.
//!
//! Each player's matrix is multiplied by the LCM of its entry denominators so
//! that cumulative payoffs are plain integers. `i64` is used while a static
//! bound proves it cannot overflow; otherwise the accumulators are promoted to
//! arbitrary precision.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::game::{BimatrixGame, Player, Rational};

/// One player's payoffs scaled to integers, indexed `[opponent action][own action]`.
#[derive(Debug, Clone)]
pub struct ScaledMatrix {
    pub scale: BigInt,
    pub wide: Vec<Vec<BigInt>>,
    pub narrow: Option<Vec<Vec<i64>>>,
    pub max_abs: BigInt,
}

impl ScaledMatrix {
    pub fn new(game: &BimatrixGame, player: Player) -> Self {
        let own = game.strategy_count(player);
        let opp = game.strategy_count(player.other());
        let mut scale = BigInt::one();
        for o in 0..opp {
            for s in 0..own {
                scale = scale.lcm(game.payoff_from(player, s, o).denom());
            }
        }
        let scaled = |r: &Rational| -> BigInt { (r * &scale).to_integer() };
        let wide: Vec<Vec<BigInt>> = (0..opp)
            .map(|o| (0..own).map(|s| scaled(game.payoff_from(player, s, o))).collect())
            .collect();
        let max_abs = wide
            .iter()
            .flatten()
            .map(|x| x.abs())
            .max()
            .unwrap_or_else(BigInt::zero);
        let narrow = wide
            .iter()
            .map(|v| v.iter().map(|x| x.to_i64()).collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>();
        ScaledMatrix {
            scale,
            wide,
            narrow,
            max_abs,
        }
    }
}

/// Cumulative scaled payoffs of every own strategy against the opponent's
/// history so far.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Accumulators {
    Narrow { row: Vec<i64>, col: Vec<i64> },
    Wide { row: Vec<BigInt>, col: Vec<BigInt> },
}

/// Tie-aware argmax over one accumulator vector.
pub(crate) struct Argmax {
    pub first: usize,
    pub last: usize,
    pub count: usize,
    /// Whether the given incumbent attains the maximum.
    pub incumbent_is_max: bool,
}

fn argmax<T: Ord>(v: &[T], incumbent: usize) -> Argmax {
    let mut best = &v[0];
    let mut first = 0;
    let mut last = 0;
    let mut count = 1;
    for (i, x) in v.iter().enumerate().skip(1) {
        match x.cmp(best) {
            std::cmp::Ordering::Greater => {
                best = x;
                first = i;
                last = i;
                count = 1;
            }
            std::cmp::Ordering::Equal => {
                last = i;
                count += 1;
            }
            std::cmp::Ordering::Less => {}
        }
    }
    Argmax {
        first,
        last,
        count,
        incumbent_is_max: v[incumbent] == *best,
    }
}

impl Accumulators {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Accumulators::Narrow {
            row: vec![0; rows],
            col: vec![0; cols],
        }
    }

    pub fn is_narrow(&self) -> bool {
        matches!(self, Accumulators::Narrow { .. })
    }

    pub fn promote(&mut self) {
        if let Accumulators::Narrow { row, col } = self {
            let w = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect();
            *self = Accumulators::Wide {
                row: w(row),
                col: w(col),
            };
        }
    }

    pub fn get(&self, player: Player) -> Vec<BigInt> {
        match (self, player) {
            (Accumulators::Narrow { row, .. }, Player::Row) => row.iter().map(|&x| x.into()).collect(),
            (Accumulators::Narrow { col, .. }, Player::Col) => col.iter().map(|&x| x.into()).collect(),
            (Accumulators::Wide { row, .. }, Player::Row) => row.clone(),
            (Accumulators::Wide { col, .. }, Player::Col) => col.clone(),
        }
    }

    pub fn len(&self, player: Player) -> usize {
        match (self, player) {
            (Accumulators::Narrow { row, .. }, Player::Row) => row.len(),
            (Accumulators::Narrow { col, .. }, Player::Col) => col.len(),
            (Accumulators::Wide { row, .. }, Player::Row) => row.len(),
            (Accumulators::Wide { col, .. }, Player::Col) => col.len(),
        }
    }

    pub fn max_abs(&self) -> BigInt {
        match self {
            Accumulators::Narrow { row, col } => row
                .iter()
                .chain(col)
                .map(|x| BigInt::from(x.unsigned_abs()))
                .max()
                .unwrap_or_default(),
            Accumulators::Wide { row, col } => {
                row.iter().chain(col).map(|x| x.abs()).max().unwrap_or_default()
            }
        }
    }

    pub(crate) fn argmax(&self, player: Player, incumbent: usize) -> Argmax {
        match (self, player) {
            (Accumulators::Narrow { row, .. }, Player::Row) => argmax(row, incumbent),
            (Accumulators::Narrow { col, .. }, Player::Col) => argmax(col, incumbent),
            (Accumulators::Wide { row, .. }, Player::Row) => argmax(row, incumbent),
            (Accumulators::Wide { col, .. }, Player::Col) => argmax(col, incumbent),
        }
    }

    /// Adds the opponent's action `opp` (times `times`) to `player`'s
    /// accumulator. Returns `false` on `i64` overflow, leaving the vector
    /// partially updated; callers treat that as fatal.
    pub(crate) fn add(&mut self, player: Player, m: &ScaledMatrix, opp: usize, times: u64) -> bool {
        match self {
            Accumulators::Narrow { row, col } => {
                let acc = if player == Player::Row { row } else { col };
                let delta = &m.narrow.as_ref().expect("narrow scaled matrix")[opp];
                let Ok(times) = i64::try_from(times) else {
                    return false;
                };
                for (a, d) in acc.iter_mut().zip(delta) {
                    let Some(step) = d.checked_mul(times) else {
                        return false;
                    };
                    match a.checked_add(step) {
                        Some(v) => *a = v,
                        None => return false,
                    }
                }
                true
            }
            Accumulators::Wide { row, col } => {
                let acc = if player == Player::Row { row } else { col };
                let times = BigInt::from(times);
                for (a, d) in acc.iter_mut().zip(&m.wide[opp]) {
                    *a += d * &times;
                }
                true
            }
        }
    }
}
