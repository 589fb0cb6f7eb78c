//! Certification of fictitious-play runs on `G_n` and regret trajectories.
//!
//! Strategy indices are 0-based in this API; reports print them 1-based.
//! Analyses read run-length traces and never expand them step by step.

mod replay;
mod report;

pub use replay::{epsilon_direct, epsilon_trajectory, sample_times, Replay};
pub use report::{analyze, AnalysisReport, BlockJson, Check, CheckStatus, ExactValue, RegretValue};

pub use crate::engine::EpsilonPoint;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::game::{fmt_rational, int, BimatrixGame, MixedStrategy, Player, Rational};
use crate::generators::GnParams;

/// A maximal run of one shared action in a symmetric trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Block {
    pub action: usize,
    pub start_t: u64,
    pub length: u64,
}

impl Block {
    pub fn end_t(&self) -> u64 {
        self.start_t + self.length - 1
    }
}

/// Blocks of a trace in which both players always play the same action.
pub fn extract_blocks(trace: &Trace) -> Result<Vec<Block>> {
    let mut blocks = Vec::with_capacity(trace.runs().len());
    let mut t = 1;
    for r in trace.runs() {
        if r.row != r.col {
            return Err(Error::Analysis(format!(
                "trace is not symmetric at t={t}: row plays {}, column plays {}",
                r.row + 1,
                r.col + 1
            )));
        }
        blocks.push(Block {
            action: r.row,
            start_t: t,
            length: r.len,
        });
        t += r.len;
    }
    Ok(blocks)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub pass: bool,
    pub violations: Vec<String>,
}

/// Circular successor within the last block `{2n, .., 4n-1}` (0-based).
fn block_succ(n: usize, s: usize) -> usize {
    if s == 4 * n - 1 {
        2 * n
    } else {
        s + 1
    }
}

fn block_pred(n: usize, s: usize) -> usize {
    if s == 2 * n {
        4 * n - 1
    } else {
        s - 1
    }
}

/// Checks the ascending block structure of a `G_n` run: start at strategy 1,
/// every transition is `+1` or the wrap `4n -> 2n+1`, strategies `1..n` are
/// each one block of length 1, and strategies `1..2n` are never revisited.
pub fn check_ascending_structure(blocks: &[Block], n: usize) -> StructureReport {
    let size = 4 * n;
    let mut violations = Vec::new();
    match blocks.first() {
        None => violations.push("no blocks".to_string()),
        Some(b) if b.action != 0 => {
            violations.push(format!("first block plays {}, expected 1", b.action + 1))
        }
        _ => {}
    }
    for w in blocks.windows(2) {
        let (a, b) = (w[0].action, w[1].action);
        let ok = (a + 1 < size && b == a + 1) || (a == size - 1 && b == 2 * n);
        if !ok {
            violations.push(format!("transition {} -> {} at t={}", a + 1, b + 1, w[1].start_t));
        }
    }
    let mut seen = vec![0usize; size];
    for b in blocks {
        if b.action < size {
            seen[b.action] += 1;
        } else {
            violations.push(format!("action {} outside a {size}-strategy game", b.action + 1));
        }
    }
    for (a, &count) in seen.iter().enumerate().take(2 * n) {
        if count > 1 {
            violations.push(format!("strategy {} reappears ({count} blocks)", a + 1));
        }
    }
    for b in blocks.iter().filter(|b| b.action < n && b.length != 1) {
        violations.push(format!(
            "strategy {} played {} consecutive times, expected once",
            b.action + 1,
            b.length
        ));
    }
    StructureReport {
        pass: violations.is_empty(),
        violations,
    }
}

/// The first ascending pass through all `4n` strategies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FirstPassReport {
    pub n: usize,
    /// Last step of the first block of strategy `4n`.
    pub t_star: u64,
    /// `last_play[i]`: last step at which strategy `i` is played in the first pass.
    pub last_play: Vec<u64>,
    /// `ell_at_t_star[i]`: number of plays of strategy `i` by step `t_star`.
    pub ell_at_t_star: Vec<u64>,
}

pub fn first_pass(blocks: &[Block], n: usize) -> Result<FirstPassReport> {
    let size = 4 * n;
    if blocks.len() <= size {
        return Err(Error::Analysis(format!(
            "first pass incomplete: {} blocks, need more than {size} to close the block of strategy {size}",
            blocks.len()
        )));
    }
    if let Some((i, b)) = blocks.iter().take(size).enumerate().find(|(i, b)| b.action != *i) {
        return Err(Error::Analysis(format!(
            "block {} plays strategy {}, expected {}",
            i + 1,
            b.action + 1,
            i + 1
        )));
    }
    let first = &blocks[..size];
    Ok(FirstPassReport {
        n,
        t_star: first[size - 1].end_t(),
        last_play: first.iter().map(Block::end_t).collect(),
        ell_at_t_star: first.iter().map(|b| b.length).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceCheck {
    /// 0-based strategy.
    pub strategy: usize,
    pub count: u64,
    pub lower: Rational,
    pub upper: Rational,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceReport {
    pub pass: bool,
    pub checks: Vec<RecurrenceCheck>,
    /// `rho^(3n-1)`, the chained lower bound on the count of strategy `4n-1`.
    pub chain_bound: Rational,
    pub chain_count: u64,
    pub chain_ok: bool,
}

impl RecurrenceReport {
    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.ok)
            .map(|c| {
                format!(
                    "strategy {}: count {} outside [{}, {}]",
                    c.strategy + 1,
                    c.count,
                    fmt_rational(&c.lower),
                    fmt_rational(&c.upper)
                )
            })
            .collect();
        if !self.chain_ok {
            out.push(format!(
                "count {} of strategy 4n-1 below rho^(3n-1) = {}",
                self.chain_count,
                fmt_rational(&self.chain_bound)
            ));
        }
        out
    }
}

/// Checks the first-pass count recurrences exactly:
///
/// - for `n+1 <= i <= 3n`: `rho*l(i-1) <= l(i) <= 1 + rho*l(i-1)`;
/// - for `3n+1 <= i <= 4n-1`: `rho*l(i-1) <= l(i) <= 1 + rho*l(i-1) + rb*l(i-n)`;
///
/// (1-based `i`), plus the chained bound `l(4n-1) >= rho^(3n-1)`. Counts are
/// taken at `t*`, which equals their value at each `t_i` since a strategy is
/// not replayed before `t*`.
pub fn check_count_recurrences(report: &FirstPassReport, params: &GnParams) -> RecurrenceReport {
    let n = params.n;
    let ell = |i: usize| int(report.ell_at_t_star[i - 1] as i64);
    let mut checks = Vec::new();
    for i in n + 1..=4 * n - 1 {
        let base = &params.rho * ell(i - 1);
        let mut upper = Rational::one() + &base;
        if i > 3 * n {
            upper += &params.rb * ell(i - n);
        }
        let count = report.ell_at_t_star[i - 1];
        let c = int(count as i64);
        checks.push(RecurrenceCheck {
            strategy: i - 1,
            count,
            ok: base <= c && c <= upper,
            lower: base,
            upper,
        });
    }
    let chain_bound = params.rho_pow(3 * n - 1);
    let chain_count = report.ell_at_t_star[4 * n - 2];
    let chain_ok = int(chain_count as i64) >= chain_bound;
    RecurrenceReport {
        pass: chain_ok && checks.iter().all(|c| c.ok),
        checks,
        chain_bound,
        chain_count,
        chain_ok,
    }
}

/// Ratios `p(i)/p(i-1)` over the last block, circularly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioProfile {
    pub current_action: usize,
    /// Minimum over `i` other than the current action and its successor.
    pub min_ratio: Rational,
    pub min_at: usize,
    /// Maximum over all `i` in the block.
    pub max_ratio: Rational,
    pub max_at: usize,
    /// `alpha` (= `1 + 1/k` under the k-coupling).
    pub lower_bound: Rational,
    /// `1 + 3(alpha - 1)` (= `1 + 3/k`).
    pub upper_bound: Rational,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

pub fn ratio_profile(counts: &[u64], params: &GnParams, current_action: usize) -> Result<RatioProfile> {
    let n = params.n;
    if counts.len() != 4 * n {
        return Err(Error::LengthMismatch {
            expected: 4 * n,
            got: counts.len(),
        });
    }
    if !(2 * n..4 * n).contains(&current_action) {
        return Err(Error::Analysis(format!(
            "current action {} is outside the last block",
            current_action + 1
        )));
    }
    if let Some(z) = (2 * n..4 * n).find(|&i| counts[i] == 0) {
        return Err(Error::Analysis(format!("strategy {} has zero count", z + 1)));
    }
    let excluded = [current_action, block_succ(n, current_action)];
    let ratio = |i: usize| Rational::new(BigInt::from(counts[i]), BigInt::from(counts[block_pred(n, i)]));
    let mut min: Option<(Rational, usize)> = None;
    let mut max: Option<(Rational, usize)> = None;
    for i in 2 * n..4 * n {
        let r = ratio(i);
        if max.as_ref().is_none_or(|(m, _)| r > *m) {
            max = Some((r.clone(), i));
        }
        if !excluded.contains(&i) && min.as_ref().is_none_or(|(m, _)| r < *m) {
            min = Some((r, i));
        }
    }
    let (min_ratio, min_at) = min.expect("block has at least 4 strategies");
    let (max_ratio, max_at) = max.expect("non-empty block");
    let lower_bound = params.alpha.clone();
    let upper_bound = Rational::one() + int(3) * (&params.alpha - Rational::one());
    Ok(RatioProfile {
        current_action,
        lower_ok: min_ratio >= lower_bound,
        upper_ok: max_ratio <= upper_bound,
        min_ratio,
        min_at,
        max_ratio,
        max_at,
        lower_bound,
        upper_bound,
    })
}

/// Empirical mass on strategies `0..cutoff`.
pub fn tail_mass(counts: &[u64], cutoff: usize) -> Rational {
    let t: u64 = counts.iter().sum();
    if t == 0 {
        return Rational::zero();
    }
    let head: u64 = counts.iter().take(cutoff).sum();
    Rational::new(BigInt::from(head), BigInt::from(t))
}

/// Measurements over all blocks after `t*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleReport {
    /// Completed passes over strategies `2n+1..4n` after `t*`.
    pub complete_cycles: u64,
    /// Steps at which ratios were sampled (every block start and end from `t*`).
    pub samples: usize,
    pub ratio_min: Rational,
    pub ratio_min_t: u64,
    pub ratio_max: Rational,
    pub ratio_max_t: u64,
    pub lower_bound: Rational,
    pub upper_bound: Rational,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub tail_at_t_star: Rational,
    pub tail_final: Rational,
    pub tail_non_increasing: bool,
    /// Counts of strategies `1..2n` never change after `t*`.
    pub prefix_frozen: bool,
}

/// Samples ratio profiles and tail mass at the start and end of every block
/// from `t*` on. Within a block only the current strategy's count grows, so
/// the excluded-pair minimum is constant per block and the maximum is attained
/// at one of its endpoints; these samples therefore cover every `t >= t*`.
pub fn certify_cycles(blocks: &[Block], fp: &FirstPassReport, params: &GnParams) -> Result<CycleReport> {
    let n = params.n;
    let size = 4 * n;
    let mut counts = fp.ell_at_t_star.clone();
    let frozen: Vec<u64> = counts[..2 * n].to_vec();
    let mut samples = 0usize;
    let mut min: Option<(Rational, u64)> = None;
    let mut max: Option<(Rational, u64)> = None;
    let mut lower_ok = true;
    let mut upper_ok = true;
    let mut tail_prev = tail_mass(&counts, 2 * n);
    let tail_at_t_star = tail_prev.clone();
    let mut tail_non_increasing = true;
    let mut prefix_frozen = true;

    let mut observe = |counts: &[u64], action: usize, t: u64| -> Result<()> {
        let p = ratio_profile(counts, params, action)?;
        samples += 1;
        lower_ok &= p.lower_ok;
        upper_ok &= p.upper_ok;
        if min.as_ref().is_none_or(|(m, _)| p.min_ratio < *m) {
            min = Some((p.min_ratio.clone(), t));
        }
        if max.as_ref().is_none_or(|(m, _)| p.max_ratio > *m) {
            max = Some((p.max_ratio, t));
        }
        Ok(())
    };

    observe(&counts, size - 1, fp.t_star)?;
    for b in &blocks[size..] {
        if b.action < 2 * n {
            prefix_frozen = false;
            break;
        }
        counts[b.action] += 1;
        observe(&counts, b.action, b.start_t)?;
        let tail = tail_mass(&counts, 2 * n);
        tail_non_increasing &= tail <= tail_prev;
        tail_prev = tail;
        counts[b.action] += b.length - 1;
        observe(&counts, b.action, b.end_t())?;
        let tail = tail_mass(&counts, 2 * n);
        tail_non_increasing &= tail <= tail_prev;
        tail_prev = tail;
    }
    prefix_frozen &= counts[..2 * n] == frozen[..];
    let completed_after = blocks.len().saturating_sub(size + 1) as u64;
    let (ratio_min, ratio_min_t) = min.expect("t* is always sampled");
    let (ratio_max, ratio_max_t) = max.expect("t* is always sampled");
    Ok(CycleReport {
        complete_cycles: completed_after / (2 * n) as u64,
        samples,
        ratio_min,
        ratio_min_t,
        ratio_max,
        ratio_max_t,
        lower_bound: params.alpha.clone(),
        upper_bound: Rational::one() + int(3) * (&params.alpha - Rational::one()),
        lower_ok,
        upper_ok,
        tail_at_t_star,
        tail_final: tail_prev,
        tail_non_increasing,
        prefix_frozen,
    })
}

/// Lower bound on the normalized regret at step `t <= n` of a `G_n` run,
/// where the current action is `i = t`: `1/alpha - (beta/alpha)(i-1)/(2i)`.
pub fn early_phase_bound(params: &GnParams, i: u64) -> Rational {
    let i = int(i as i64);
    params.alpha.recip() - (&params.beta / &params.alpha) * (&i - Rational::one()) / (int(2) * &i)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformBlockNe {
    pub is_ne: bool,
    /// Payoff of the uniform-block profile (same for both players).
    pub value: Rational,
    /// `(1 + alpha + (n-1) beta) / (2n)` when the game is a recognized `G_n`.
    pub closed_form: Option<Rational>,
    pub pure_equilibria: Vec<(usize, usize)>,
    /// Every diagonal cell `(i, i)` with `i >= n` has a strictly profitable
    /// deviation to the block successor of `i`.
    pub diagonal_deviations: bool,
}

/// Verifies that the uniform mix over strategies `2n+1..4n` is an exact
/// equilibrium of a `4n × 4n` game and that no pure equilibrium exists.
pub fn check_uniform_block_ne(game: &BimatrixGame) -> Result<UniformBlockNe> {
    let size = game.rows();
    if size != game.cols() || !size.is_multiple_of(4) || size < 8 {
        return Err(Error::Analysis(format!(
            "expected a 4n x 4n game, got {}x{}",
            game.rows(),
            game.cols()
        )));
    }
    let n = size / 4;
    let block: Vec<usize> = (2 * n..size).collect();
    let u = MixedStrategy::uniform_over(size, &block)?;
    let row = game.regret(Player::Row, &u, &u)?;
    let col = game.regret(Player::Col, &u, &u)?;
    let value = game.expected_payoff(Player::Row, &u, &u)?;
    let closed_form = crate::generators::recognize_gn(game).map(|p| {
        (Rational::one() + &p.alpha + int(n as i64 - 1) * &p.beta) / int(2 * n as i64)
    });
    let diagonal_deviations = (n..size).all(|i| {
        let succ = if i == size - 1 { 2 * n } else { i + 1 };
        game.payoff(Player::Row, succ, i) > game.payoff(Player::Row, i, i)
    });
    Ok(UniformBlockNe {
        is_ne: row.raw.is_zero() && col.raw.is_zero(),
        value,
        closed_form,
        pure_equilibria: game.pure_nash_equilibria(),
        diagonal_deviations,
    })
}
