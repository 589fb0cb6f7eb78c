//! The analysis JSON emitted for a (game, trace) pair.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::Serialize;

use super::{
    certify_cycles, check_ascending_structure, check_count_recurrences, check_uniform_block_ne,
    epsilon_trajectory, extract_blocks, first_pass, tail_mass, Block,
};
use crate::engine::{EpsilonPoint, EpsilonSchedule, Trace};
use crate::error::{Error, Result};
use crate::game::{fmt_rational, to_f64, BimatrixGame, Rational, Regret};
use crate::generators::recognize_gn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Structure,
    Recurrences,
    Ratios,
    Tailmass,
    Ne,
}

impl Check {
    pub const ALL: [Check; 5] = [
        Check::Structure,
        Check::Recurrences,
        Check::Ratios,
        Check::Tailmass,
        Check::Ne,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Structure => "structure",
            Check::Recurrences => "recurrences",
            Check::Ratios => "ratios",
            Check::Tailmass => "tailmass",
            Check::Ne => "ne",
        }
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown check `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Measured,
}

impl CheckStatus {
    fn of(ok: bool) -> Self {
        if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }
}

/// An exact rational with its float mirror.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactValue {
    pub exact: String,
    pub float: f64,
}

impl From<&Rational> for ExactValue {
    fn from(r: &Rational) -> Self {
        ExactValue {
            exact: fmt_rational(r),
            float: to_f64(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretValue {
    pub raw: ExactValue,
    pub normalized: ExactValue,
}

impl From<&Regret> for RegretValue {
    fn from(r: &Regret) -> Self {
        RegretValue {
            raw: (&r.raw).into(),
            normalized: (&r.normalized).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockJson {
    /// 1-based strategy.
    pub action: usize,
    pub start: u64,
    pub len: u64,
}

impl From<&Block> for BlockJson {
    fn from(b: &Block) -> Self {
        BlockJson {
            action: b.action + 1,
            start: b.start_t,
            len: b.length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub t: u64,
    pub t_star: Option<u64>,
    pub epsilon_row: RegretValue,
    pub epsilon_col: RegretValue,
    /// Smallest larger-of-both normalized regret over sampled `t >= t*`.
    pub epsilon_floor_after_t_star: Option<ExactValue>,
    pub blocks: Vec<BlockJson>,
    pub complete_cycles: Option<u64>,
    pub ratio_min: Option<ExactValue>,
    pub ratio_max: Option<ExactValue>,
    pub tail_mass: Option<ExactValue>,
    pub checks: BTreeMap<String, CheckStatus>,
    pub violations: Vec<String>,
}

/// Analyzes a recorded run. `G_n`-specific checks require the game to be a
/// recognizable `G_n` and the trace to be symmetric; an empty `checks` list
/// selects all of them for `G_n` games and none otherwise.
pub fn analyze(
    game: &BimatrixGame,
    trace: &Trace,
    checks: &[Check],
    schedule: EpsilonSchedule,
) -> Result<AnalysisReport> {
    if trace.is_empty() {
        return Err(Error::Analysis("empty trace".into()));
    }
    let params = recognize_gn(game);
    let mut checks: Vec<Check> = if checks.is_empty() && params.is_some() {
        Check::ALL.to_vec()
    } else {
        checks.to_vec()
    };
    checks.sort_unstable();
    checks.dedup();

    let epsilon = epsilon_trajectory(game, trace, schedule)?;
    let last = match epsilon.last() {
        Some(p) if p.t == trace.total_t() => p.clone(),
        _ => epsilon_trajectory(game, trace, EpsilonSchedule::Blocks)?
            .pop()
            .expect("non-empty trace"),
    };

    let mut report = AnalysisReport {
        t: trace.total_t(),
        t_star: None,
        epsilon_row: (&last.row).into(),
        epsilon_col: (&last.col).into(),
        epsilon_floor_after_t_star: None,
        blocks: Vec::new(),
        complete_cycles: None,
        ratio_min: None,
        ratio_max: None,
        tail_mass: None,
        checks: BTreeMap::new(),
        violations: Vec::new(),
    };
    if checks.is_empty() {
        return Ok(report);
    }
    let params = params.ok_or_else(|| {
        Error::Analysis("the requested checks apply only to G_n games".into())
    })?;
    let n = params.n;
    let blocks = extract_blocks(trace)?;
    report.blocks = blocks.iter().map(BlockJson::from).collect();

    let structure = check_ascending_structure(&blocks, n);
    let fp = first_pass(&blocks, n);
    let cycles = match &fp {
        Ok(fp) if structure.pass => Some(certify_cycles(&blocks, fp, &params)?),
        _ => None,
    };
    if let Ok(fp) = &fp {
        report.t_star = Some(fp.t_star);
        report.epsilon_floor_after_t_star = epsilon
            .iter()
            .filter(|p| p.t >= fp.t_star)
            .map(|p: &EpsilonPoint| p.max_normalized().clone())
            .min()
            .as_ref()
            .map(ExactValue::from);
    }
    if let Some(c) = &cycles {
        report.complete_cycles = Some(c.complete_cycles);
        report.ratio_min = Some((&c.ratio_min).into());
        report.ratio_max = Some((&c.ratio_max).into());
        report.tail_mass = Some((&c.tail_final).into());
    } else {
        report.tail_mass = Some((&tail_mass(&counts_of(&blocks, 4 * n), 2 * n)).into());
    }

    let mut status = |c: Check, s: CheckStatus| {
        report.checks.insert(c.name().to_string(), s);
    };
    let mut violations = Vec::new();
    let fp_error = fp.as_ref().err().map(|e| e.to_string());
    for c in checks {
        match c {
            Check::Structure => {
                let ok = structure.pass && cycles.as_ref().is_none_or(|c| c.prefix_frozen);
                violations.extend(structure.violations.iter().cloned());
                status(c, CheckStatus::of(ok));
            }
            Check::Recurrences => match &fp {
                Ok(fp) => {
                    let rec = check_count_recurrences(fp, &params);
                    violations.extend(rec.violations());
                    status(c, CheckStatus::of(rec.pass));
                }
                Err(_) => {
                    violations.extend(fp_error.clone());
                    status(c, CheckStatus::Fail);
                }
            },
            Check::Ratios => match &cycles {
                Some(cy) => {
                    if !cy.lower_ok {
                        violations.push(format!(
                            "ratio {} below {}",
                            fmt_rational(&cy.ratio_min),
                            fmt_rational(&cy.lower_bound)
                        ));
                    }
                    status(c, CheckStatus::of(cy.lower_ok));
                }
                None => {
                    violations.push("ratios need a completed first pass".into());
                    status(c, CheckStatus::Fail);
                }
            },
            Check::Tailmass => match &cycles {
                Some(cy) => status(c, CheckStatus::of(cy.tail_non_increasing)),
                None => {
                    violations.push("tail mass monotonicity needs a completed first pass".into());
                    status(c, CheckStatus::Fail);
                }
            },
            Check::Ne => {
                let ne = check_uniform_block_ne(game)?;
                let ok = ne.is_ne && ne.pure_equilibria.is_empty() && ne.diagonal_deviations;
                status(c, CheckStatus::of(ok));
            }
        }
    }
    // the 1 + 3/k ceiling is a measurement, not a pass criterion
    if report.checks.contains_key("ratios") && report.ratio_max.is_some() {
        report
            .checks
            .insert("ratio_upper".to_string(), CheckStatus::Measured);
    }
    report.violations = violations;
    Ok(report)
}

fn counts_of(blocks: &[Block], size: usize) -> Vec<u64> {
    let mut counts = vec![0; size];
    for b in blocks {
        counts[b.action] += b.length;
    }
    counts
}
