//! Last-occurrence scores of action sequences and the worst-case regret
//! guarantee of fictitious play on `[0, 1]` games.
//!
//! Positions are 1-based. Sequence entries are arbitrary labels.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::analysis::{sample_times, Replay};
use crate::engine::{EpsilonSchedule, Trace};
use crate::error::{Error, Result};
use crate::game::{fmt_rational, int, BimatrixGame, Player, Rational};

/// `f[k]`: the last position holding the value at position `k`.
pub fn last_occurrences(seq: &[usize]) -> Vec<u64> {
    let mut last = HashMap::new();
    for (i, v) in seq.iter().enumerate() {
        last.insert(*v, i as u64 + 1);
    }
    seq.iter().map(|v| last[v]).collect()
}

/// `S(a) = sum_k f[k]`.
pub fn sum_s(seq: &[usize]) -> u64 {
    last_occurrences(seq).iter().sum()
}

/// `1 + 1/t - S/t^2` for a sequence of length `t`.
pub fn msbound_from_s(s: u64, t: u64) -> Rational {
    let t = int(t as i64);
    Rational::one() + t.recip() - int(s as i64) / (&t * &t)
}

pub fn msbound(seq: &[usize]) -> Rational {
    msbound_from_s(sum_s(seq), seq.len() as u64)
}

/// Distinct values ordered by ascending last occurrence, each repeated as
/// often as it occurs.
pub fn transform(seq: &[usize]) -> Vec<usize> {
    let mut last: HashMap<usize, usize> = HashMap::new();
    let mut count: HashMap<usize, usize> = HashMap::new();
    for (i, v) in seq.iter().enumerate() {
        last.insert(*v, i);
        *count.entry(*v).or_default() += 1;
    }
    let mut values: Vec<usize> = last.keys().copied().collect();
    values.sort_by_key(|v| last[v]);
    values
        .into_iter()
        .flat_map(|v| std::iter::repeat_n(v, count[&v]))
        .collect()
}

/// `S` of the block sequence with block lengths `c`.
pub fn block_s(c: &[u64]) -> u64 {
    let mut end = 0;
    c.iter()
        .map(|&len| {
            end += len;
            len * end
        })
        .sum()
}

/// `1/2 + 1/t - 1/(2n)`, defined when `n | t`.
pub fn epsilon_star(n: u64, t: u64) -> Result<Rational> {
    if n == 0 || t == 0 {
        return Err(Error::InvalidParameter("n and t must be positive".into()));
    }
    if !t.is_multiple_of(n) {
        let below = t - t % n;
        let above = below + n;
        let nearest = if below > 0 && t - below <= above - t {
            below
        } else {
            above
        };
        return Err(Error::NotDivisible { n, t, nearest });
    }
    Ok(rational_half() + int(t as i64).recip() - int(2 * n as i64).recip())
}

/// `1/2 - 1/(2n)`, the limit of [`epsilon_star`] as `t` grows.
pub fn epsilon_star_limit(n: u64) -> Rational {
    rational_half() - int(2 * n as i64).recip()
}

fn rational_half() -> Rational {
    Rational::new(BigInt::one(), BigInt::from(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    BlockCompositions,
    AllSequences,
}

pub const BLOCK_MAX_T: u64 = 40;
pub const BLOCK_MAX_N: u64 = 8;
pub const EXHAUSTIVE_MAX_T: u64 = 10;
pub const EXHAUSTIVE_MAX_N: u64 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MinSResult {
    pub t: u64,
    pub n: u64,
    pub mode: SearchMode,
    pub min_s: u64,
    /// Sorted. In all-sequences mode these are the block lengths of minimizers
    /// relabeled by first appearance.
    pub argmin_compositions: Vec<Vec<u64>>,
    /// All-sequences mode: number of minimizing sequences before relabeling.
    pub minimizer_sequences: Option<u64>,
    /// All-sequences mode: distinct-value counts seen among minimizers.
    pub distinct_values: Option<Vec<usize>>,
    /// All-sequences mode: every minimizer is in block form.
    pub all_block_form: Option<bool>,
}

impl MinSResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,n,min_S,composition\n");
        for c in &self.argmin_compositions {
            let parts: Vec<String> = c.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "{},{},{},{}", self.t, self.n, self.min_s, parts.join(" "));
        }
        out
    }
}

/// Exact minimum of `S` over sequences of length `t` with `n` values:
/// over block sequences with exactly `n` non-empty blocks, or over all `n^t`
/// sequences.
pub fn brute_force_min_s(t: u64, n: u64, mode: SearchMode) -> Result<MinSResult> {
    match mode {
        SearchMode::BlockCompositions => {
            if n == 0 || n > BLOCK_MAX_N || t < n || t > BLOCK_MAX_T {
                return Err(Error::LimitExceeded(format!(
                    "block search needs 1 <= n <= {BLOCK_MAX_N} and n <= t <= {BLOCK_MAX_T} (got t={t}, n={n})"
                )));
            }
            let mut best = u64::MAX;
            let mut argmin = Vec::new();
            let mut parts = Vec::with_capacity(n as usize);
            compositions(t, n, 0, 0, &mut parts, &mut |c, s| {
                if s < best {
                    best = s;
                    argmin.clear();
                }
                if s == best {
                    argmin.push(c.to_vec());
                }
            });
            argmin.sort();
            Ok(MinSResult {
                t,
                n,
                mode,
                min_s: best,
                argmin_compositions: argmin,
                minimizer_sequences: None,
                distinct_values: None,
                all_block_form: None,
            })
        }
        SearchMode::AllSequences => {
            if n == 0 || t == 0 || n > EXHAUSTIVE_MAX_N || t > EXHAUSTIVE_MAX_T {
                return Err(Error::LimitExceeded(format!(
                    "exhaustive search needs 1 <= n <= {EXHAUSTIVE_MAX_N} and 1 <= t <= {EXHAUSTIVE_MAX_T} (got t={t}, n={n})"
                )));
            }
            exhaustive(t as usize, n as usize)
        }
    }
}

/// Calls `visit(parts, S)` for every composition of `remaining + used` into
/// `n` positive parts, extending `parts`.
fn compositions(
    remaining: u64,
    n: u64,
    end: u64,
    s: u64,
    parts: &mut Vec<u64>,
    visit: &mut dyn FnMut(&[u64], u64),
) {
    let left = n - parts.len() as u64;
    if left == 1 {
        parts.push(remaining);
        visit(parts, s + remaining * (end + remaining));
        parts.pop();
        return;
    }
    for c in 1..=remaining - (left - 1) {
        parts.push(c);
        compositions(remaining - c, n, end + c, s + c * (end + c), parts, visit);
        parts.pop();
    }
}

fn relabel(seq: &[usize]) -> Vec<usize> {
    let mut map: HashMap<usize, usize> = HashMap::new();
    seq.iter()
        .map(|v| {
            let next = map.len();
            *map.entry(*v).or_insert(next)
        })
        .collect()
}

/// Block lengths of a sequence already in block form, or `None`.
fn block_form(seq: &[usize]) -> Option<Vec<u64>> {
    let mut lens: Vec<u64> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut prev = None;
    for &v in seq {
        if prev == Some(v) {
            *lens.last_mut().expect("previous block") += 1;
        } else {
            if !seen.insert(v) {
                return None;
            }
            lens.push(1);
            prev = Some(v);
        }
    }
    Some(lens)
}

fn exhaustive(t: usize, n: usize) -> Result<MinSResult> {
    let mut seq = vec![0usize; t];
    let mut best = u64::MAX;
    let mut minimizers: Vec<Vec<usize>> = Vec::new();
    loop {
        let s = sum_s(&seq);
        if s < best {
            best = s;
            minimizers.clear();
        }
        if s == best {
            minimizers.push(seq.clone());
        }
        // odometer over n^t
        let mut i = 0;
        while i < t && seq[i] == n - 1 {
            seq[i] = 0;
            i += 1;
        }
        if i == t {
            break;
        }
        seq[i] += 1;
    }
    let canonical: BTreeSet<Vec<usize>> = minimizers.iter().map(|s| relabel(s)).collect();
    let mut compositions = Vec::new();
    let mut all_block_form = true;
    for c in &canonical {
        match block_form(c) {
            Some(lens) => compositions.push(lens),
            None => all_block_form = false,
        }
    }
    compositions.sort();
    let distinct: BTreeSet<usize> = canonical
        .iter()
        .map(|s| s.iter().collect::<BTreeSet<_>>().len())
        .collect();
    Ok(MinSResult {
        t: t as u64,
        n: n as u64,
        mode: SearchMode::AllSequences,
        min_s: best,
        argmin_compositions: compositions,
        minimizer_sequences: Some(minimizers.len() as u64),
        distinct_values: Some(distinct.into_iter().collect()),
        all_block_form: Some(all_block_form),
    })
}

/// Incremental `S` of a growing sequence: `S_t = sum_v count_v * last_v`.
#[derive(Debug, Clone)]
pub struct RunningScore {
    counts: Vec<u64>,
    last: Vec<u64>,
    t: u64,
}

impl RunningScore {
    pub fn new(alphabet: usize) -> Self {
        RunningScore {
            counts: vec![0; alphabet],
            last: vec![0; alphabet],
            t: 0,
        }
    }

    pub fn push_run(&mut self, value: usize, len: u64) {
        self.t += len;
        self.counts[value] += len;
        self.last[value] = self.t;
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn s(&self) -> u64 {
        self.counts.iter().zip(&self.last).map(|(c, l)| c * l).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundFailure {
    pub t: u64,
    pub player: Player,
    pub bound: &'static str,
    pub epsilon: String,
    pub limit: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundCertificate {
    pub pass: bool,
    pub samples: u64,
    pub msbound_checks: u64,
    pub epsilon_star_checks: u64,
    /// Smallest `bound - epsilon` over all checks, with where it occurred.
    pub worst_margin: Rational,
    pub worst_t: u64,
    pub worst_player: Player,
    pub failures: Vec<BoundFailure>,
}

const MAX_FAILURE_RECORDS: usize = 64;

/// Checks every sampled `t` of `trace` against `1 + 1/t - S_t/t^2` computed
/// from each player's own action sequence, and every `t` divisible by a
/// player's strategy count against [`epsilon_star`]. Regret is raw (the game
/// must have all payoffs in `[0, 1]`).
pub fn certify_trace_bound(
    game: &BimatrixGame,
    trace: &Trace,
    schedule: EpsilonSchedule,
) -> Result<BoundCertificate> {
    let unit = |x: &Rational| *x >= Rational::zero() && *x <= Rational::one();
    for p in [Player::Row, Player::Col] {
        if !game.matrix(p).iter().flatten().all(unit) {
            return Err(Error::InvalidParameter(format!(
                "{p} payoffs leave [0, 1]; normalize the game first"
            )));
        }
    }
    trace.check_bounds(game.rows(), game.cols())?;
    let total = trace.total_t();
    let (m_row, m_col) = (game.rows() as u64, game.cols() as u64);
    let mut times: BTreeSet<u64> = sample_times(trace, schedule).into_iter().collect();
    for m in [m_row, m_col] {
        times.extend((m..=total).step_by(m as usize));
    }

    let mut replay = Replay::new(game, trace)?;
    let mut score_row = RunningScore::new(game.rows());
    let mut score_col = RunningScore::new(game.cols());
    let mut runs = trace.runs().iter();
    let mut current: Option<(usize, usize, u64)> = None;

    let mut cert = BoundCertificate {
        pass: true,
        samples: 0,
        msbound_checks: 0,
        epsilon_star_checks: 0,
        worst_margin: int(2),
        worst_t: 0,
        worst_player: Player::Row,
        failures: Vec::new(),
    };
    let check = |cert: &mut BoundCertificate, t: u64, player: Player, eps: &Rational, limit: Rational, name: &'static str| {
        let margin = &limit - eps;
        if margin < cert.worst_margin {
            cert.worst_margin = margin.clone();
            cert.worst_t = t;
            cert.worst_player = player;
        }
        if margin < Rational::zero() {
            cert.pass = false;
            if cert.failures.len() < MAX_FAILURE_RECORDS {
                cert.failures.push(BoundFailure {
                    t,
                    player,
                    bound: name,
                    epsilon: fmt_rational(eps),
                    limit: fmt_rational(&limit),
                });
            }
        }
    };

    for t in times {
        // feed whole or partial runs into the running scores up to t
        while score_row.t() < t {
            let (row, col, left) = match current.take() {
                Some(c) => c,
                None => {
                    let r = runs.next().expect("sample times lie within the trace");
                    (r.row, r.col, r.len)
                }
            };
            let take = left.min(t - score_row.t());
            score_row.push_run(row, take);
            score_col.push_run(col, take);
            if take < left {
                current = Some((row, col, left - take));
            }
        }
        replay.advance_to(t)?;
        let eps = replay.epsilon();
        cert.samples += 1;
        for (player, score, m) in [
            (Player::Row, &score_row, m_row),
            (Player::Col, &score_col, m_col),
        ] {
            let e = match player {
                Player::Row => &eps.row.raw,
                Player::Col => &eps.col.raw,
            };
            check(&mut cert, t, player, e, msbound_from_s(score.s(), t), "msbound");
            cert.msbound_checks += 1;
            if t % m == 0 {
                check(&mut cert, t, player, e, epsilon_star(m, t)?, "epsilon_star");
                cert.epsilon_star_checks += 1;
            }
        }
    }
    Ok(cert)
}
