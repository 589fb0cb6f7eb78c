//! Exact regrets along a recorded trace without re-running best responses.

use crate::engine::{regret_from_accumulators, Accumulators, EpsilonPoint, EpsilonSchedule, Run, ScaledMatrix, Trace};
use crate::error::{Error, Result};
use crate::game::{BimatrixGame, MixedStrategy, Player};

/// Cumulative state of a trace prefix, advanced run by run.
pub struct Replay<'a> {
    game: &'a BimatrixGame,
    row_matrix: ScaledMatrix,
    col_matrix: ScaledMatrix,
    acc: Accumulators,
    counts_row: Vec<u64>,
    counts_col: Vec<u64>,
    t: u64,
    runs: &'a [Run],
    run_idx: usize,
    /// Steps of `runs[run_idx]` already applied.
    used: u64,
}

impl<'a> Replay<'a> {
    pub fn new(game: &'a BimatrixGame, trace: &'a Trace) -> Result<Self> {
        trace.check_bounds(game.rows(), game.cols())?;
        let mut acc = Accumulators::zeros(game.rows(), game.cols());
        acc.promote();
        Ok(Replay {
            game,
            row_matrix: ScaledMatrix::new(game, Player::Row),
            col_matrix: ScaledMatrix::new(game, Player::Col),
            acc,
            counts_row: vec![0; game.rows()],
            counts_col: vec![0; game.cols()],
            t: 0,
            runs: trace.runs(),
            run_idx: 0,
            used: 0,
        })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn counts(&self, player: Player) -> &[u64] {
        match player {
            Player::Row => &self.counts_row,
            Player::Col => &self.counts_col,
        }
    }

    /// Applies steps until `t == target`, or errors if the trace is shorter.
    pub fn advance_to(&mut self, target: u64) -> Result<()> {
        while self.t < target {
            let Some(run) = self.runs.get(self.run_idx) else {
                return Err(Error::Trace(format!(
                    "trace ends at t={} before requested t={target}",
                    self.t
                )));
            };
            let take = (run.len - self.used).min(target - self.t);
            self.acc.add(Player::Row, &self.row_matrix, run.col, take);
            self.acc.add(Player::Col, &self.col_matrix, run.row, take);
            self.counts_row[run.row] += take;
            self.counts_col[run.col] += take;
            self.t += take;
            self.used += take;
            if self.used == run.len {
                self.run_idx += 1;
                self.used = 0;
            }
        }
        Ok(())
    }

    pub fn epsilon(&self) -> EpsilonPoint {
        let regret = |player: Player, m: &ScaledMatrix| {
            regret_from_accumulators(
                self.game,
                player,
                &self.acc.get(player),
                self.counts(player),
                self.t,
                &m.scale,
            )
        };
        EpsilonPoint {
            t: self.t,
            row: regret(Player::Row, &self.row_matrix),
            col: regret(Player::Col, &self.col_matrix),
        }
    }
}

/// The steps at which `schedule` samples a run of this trace: run ends and the
/// final step for block schedules, powers of two for power schedules.
pub fn sample_times(trace: &Trace, schedule: EpsilonSchedule) -> Vec<u64> {
    let total = trace.total_t();
    let mut out = Vec::new();
    if schedule == EpsilonSchedule::EveryStep {
        return (1..=total).collect();
    }
    if schedule.at_boundaries() {
        let mut t = 0;
        for r in trace.runs() {
            t += r.len;
            out.push(t);
        }
    }
    if schedule.at_step(1) {
        let mut p = 1u64;
        while p <= total {
            out.push(p);
            match p.checked_mul(2) {
                Some(q) => p = q,
                None => break,
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Exact regrets of both players at each sampled step of `trace`.
pub fn epsilon_trajectory(
    game: &BimatrixGame,
    trace: &Trace,
    schedule: EpsilonSchedule,
) -> Result<Vec<EpsilonPoint>> {
    let mut replay = Replay::new(game, trace)?;
    let times = sample_times(trace, schedule);
    let mut out = Vec::with_capacity(times.len());
    for t in times {
        replay.advance_to(t)?;
        out.push(replay.epsilon());
    }
    Ok(out)
}

/// Regrets computed from the empirical mixes through the core game API.
pub fn epsilon_direct(game: &BimatrixGame, counts_row: &[u64], counts_col: &[u64]) -> Result<EpsilonPoint> {
    let x = MixedStrategy::from_counts(counts_row)?;
    let y = MixedStrategy::from_counts(counts_col)?;
    let t: u64 = counts_row.iter().sum();
    Ok(EpsilonPoint {
        t,
        row: game.regret(Player::Row, &x, &y)?,
        col: game.regret(Player::Col, &y, &x)?,
    })
}
