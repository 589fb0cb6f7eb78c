//! Parallel parameter sweeps over `G_n`.
//!
//! Tasks are ordered n-major, then by k as given. Results are collected in
//! task order, so the output directory does not depend on `--jobs`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use fplab::analysis::{analyze, AnalysisReport, CheckStatus};
use fplab::engine::{run_game, EpsilonSchedule, FpConfig};
use fplab::game::{fmt_rational, Rational};
use fplab::generators::{build_gn, gn_params, parse_rational, GnBanner};

use crate::{CliError, CliResult, SweepArgs};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTask {
    pub n: usize,
    pub k: Rational,
}

#[derive(Debug, Serialize)]
pub struct SweepResult {
    pub params: GnBanner,
    pub steps: u64,
    pub tie_count: u64,
    pub report: AnalysisReport,
}

pub fn tasks(n_list: &[usize], k_list: &[Rational]) -> Vec<SweepTask> {
    n_list
        .iter()
        .flat_map(|&n| k_list.iter().map(move |k| SweepTask { n, k: k.clone() }))
        .collect()
}

pub fn run_task(task: &SweepTask, steps: u64) -> fplab::Result<SweepResult> {
    let params = gn_params(task.n, &task.k)?;
    let game = build_gn(&params);
    let (trace, _, state) = run_game(&game, FpConfig::default(), steps)?;
    let report = analyze(&game, &trace, &[], EpsilonSchedule::BlocksAndPowers)?;
    Ok(SweepResult {
        params: (&params).into(),
        steps,
        tie_count: state.tie_steps,
        report,
    })
}

/// File name of one task's report.
pub fn report_name(task: &SweepTask) -> String {
    format!("gn_n{}_k{}.json", task.n, fmt_rational(&task.k).replace('/', "_"))
}

const CHECK_COLUMNS: [&str; 5] = ["structure", "recurrences", "ratios", "tailmass", "ne"];

fn index_csv(tasks: &[SweepTask], results: &[SweepResult]) -> String {
    let mut out = String::from("n,k,steps,t_star,complete_cycles,tie_count,epsilon_row,epsilon_col");
    for c in CHECK_COLUMNS {
        out.push(',');
        out.push_str(c);
    }
    out.push_str(",report\n");
    for (task, r) in tasks.iter().zip(results) {
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            task.n,
            fmt_rational(&task.k),
            r.steps,
            opt(r.report.t_star),
            opt(r.report.complete_cycles),
            r.tie_count,
            r.report.epsilon_row.normalized.exact,
            r.report.epsilon_col.normalized.exact
        );
        for c in CHECK_COLUMNS {
            let s = match r.report.checks.get(c) {
                Some(CheckStatus::Pass) => "pass",
                Some(CheckStatus::Fail) => "fail",
                Some(CheckStatus::Measured) => "measured",
                None => "",
            };
            out.push(',');
            out.push_str(s);
        }
        let _ = writeln!(out, ",{}", report_name(task));
    }
    out
}

/// Runs every task on a pool of `jobs` threads and writes one JSON report per
/// task plus `index.csv` into `dir`.
pub fn sweep(tasks: &[SweepTask], steps: u64, jobs: usize, dir: &Path) -> CliResult<Vec<SweepResult>> {
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    if tasks.is_empty() {
        return Err(CliError::Usage("empty sweep".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let results: Vec<fplab::Result<SweepResult>> =
        pool.install(|| tasks.par_iter().map(|t| run_task(t, steps)).collect());
    let results = results.into_iter().collect::<fplab::Result<Vec<_>>>()?;
    std::fs::create_dir_all(dir)?;
    for (task, r) in tasks.iter().zip(&results) {
        let json = serde_json::to_string_pretty(r).map_err(|e| CliError::Usage(e.to_string()))?;
        std::fs::write(dir.join(report_name(task)), json + "\n")?;
    }
    std::fs::write(dir.join("index.csv"), index_csv(tasks, &results))?;
    Ok(results)
}

pub fn cmd_sweep(a: &SweepArgs) -> CliResult<()> {
    let ks = a
        .k_list
        .iter()
        .map(|k| parse_rational(k).map_err(|e| CliError::Usage(format!("--k-list: {e}"))))
        .collect::<CliResult<Vec<_>>>()?;
    let tasks = tasks(&a.n_list, &ks);
    let results = sweep(&tasks, a.steps, a.jobs, &a.out)?;
    let failed = results
        .iter()
        .filter(|r| r.report.checks.values().any(|s| *s == CheckStatus::Fail))
        .count();
    println!(
        "{} configurations written to {}; {failed} with failing checks",
        results.len(),
        a.out.display()
    );
    Ok(())
}
