//! Reference fictitious play: every step recomputes each player's payoff
//! vector from the raw counts in checked rational arithmetic. No scaling, no
//! incremental state beyond the action counts.

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, ToPrimitive, Zero};

use super::{FpConfig, Trace};
use crate::error::{Error, Result};
use crate::game::{argmax_set, BimatrixGame, Player};

type Small = Ratio<i128>;

fn to_small(game: &BimatrixGame, player: Player) -> Result<Vec<Vec<Small>>> {
    game.matrix(player)
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|x| {
                    let n = x.numer().to_i128();
                    let d = x.denom().to_i128();
                    match (n, d) {
                        (Some(n), Some(d)) => Ok(Small::new(n, d)),
                        _ => Err(Error::Overflow { step: 0 }),
                    }
                })
                .collect()
        })
        .collect()
}

/// Payoff of each own strategy against the opponent's raw counts.
fn payoffs(
    matrix: &[Vec<Small>],
    player: Player,
    opp_counts: &[u64],
    step: u64,
) -> Result<Vec<Small>> {
    let own = match player {
        Player::Row => matrix.len(),
        Player::Col => matrix[0].len(),
    };
    let overflow = || Error::Overflow { step };
    let mut out = Vec::with_capacity(own);
    #[allow(clippy::needless_range_loop)]
    for s in 0..own {
        let mut total = Small::zero();
        for (o, &c) in opp_counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let u = match player {
                Player::Row => &matrix[s][o],
                Player::Col => &matrix[o][s],
            };
            if u.is_zero() {
                continue;
            }
            let term = u
                .checked_mul(&Small::from_integer(c as i128))
                .ok_or_else(overflow)?;
            total = total.checked_add(&term).ok_or_else(overflow)?;
        }
        out.push(total);
    }
    Ok(out)
}

/// Fictitious play for `steps` steps computed naively; ground truth for
/// differential tests of [`super::Engine`].
pub fn oracle_run(game: &BimatrixGame, config: FpConfig, steps: u64) -> Result<Trace> {
    if config.initial_row >= game.rows() {
        return Err(Error::IndexOutOfBounds {
            index: config.initial_row,
            len: game.rows(),
        });
    }
    if config.initial_col >= game.cols() {
        return Err(Error::IndexOutOfBounds {
            index: config.initial_col,
            len: game.cols(),
        });
    }
    let r = to_small(game, Player::Row)?;
    let c = to_small(game, Player::Col)?;
    let mut counts_row = vec![0u64; game.rows()];
    let mut counts_col = vec![0u64; game.cols()];
    let (mut a, mut b) = (config.initial_row, config.initial_col);
    let mut trace = Trace::new();
    if steps == 0 {
        return Ok(trace);
    }
    counts_row[a] += 1;
    counts_col[b] += 1;
    trace.push(a, b);
    for t in 2..=steps {
        let row_best = argmax_set(&payoffs(&r, Player::Row, &counts_col, t)?);
        let col_best = argmax_set(&payoffs(&c, Player::Col, &counts_row, t)?);
        a = config.tie_rule.pick(&row_best, a);
        b = config.tie_rule.pick(&col_best, b);
        counts_row[a] += 1;
        counts_col[b] += 1;
        trace.push(a, b);
    }
    Ok(trace)
}
