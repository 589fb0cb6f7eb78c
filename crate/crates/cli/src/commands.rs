//! `gen`, `run`, `analyze` and `bounds`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use fplab::analysis::{analyze as analyze_run, Check, CheckStatus, ExactValue, RegretValue};
use fplab::bounds::{brute_force_min_s, certify_trace_bound, epsilon_star, BoundFailure, SearchMode};
use fplab::engine::{Engine, EpsilonPoint, FpConfig, Recorder, Snapshot, Trace};
use fplab::game::{fmt_rational, to_f64, BimatrixGame, Player};
use fplab::generators::{
    build_gn, build_matching_pennies, build_random, build_shapley, gn_params, parse_rational,
    read_game_file, write_game_file, GnParams,
};

use crate::{AnalyzeArgs, BoundsArgs, CliError, CliResult, Family, GenArgs, RunArgs, EXPAND_MAX_STEPS};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn rational_arg(flag: &str, s: &str) -> CliResult<fplab::Rational> {
    parse_rational(s).map_err(|e| usage(format!("--{flag}: {e}")))
}

/// Opens `path` for writing, with `-` meaning stdout.
pub fn open_out(path: &Path) -> CliResult<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufWriter::new(std::io::stdout().lock())))
    } else {
        let f = File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = open_out(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| usage(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn gn_params_from(n: Option<usize>, k: Option<&str>, alpha: Option<&str>, beta: Option<&str>) -> CliResult<GnParams> {
    let n = n.ok_or_else(|| usage("--family gn needs --n"))?;
    match (alpha, beta, k) {
        (Some(a), Some(b), _) => {
            let (params, warning) =
                GnParams::with_payoffs(n, rational_arg("alpha", a)?, rational_arg("beta", b)?)?;
            if let Some(w) = warning {
                eprintln!("warning: {w}");
            }
            Ok(params)
        }
        (_, _, Some(k)) => Ok(gn_params(n, &rational_arg("k", k)?)?),
        _ => Err(usage("--family gn needs --k or --alpha/--beta")),
    }
}

fn parse_size(s: &str) -> CliResult<(usize, usize)> {
    let (m, n) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("--size `{s}`: expected MxN")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("--size `{s}`: expected MxN")))
    };
    Ok((parse(m)?, parse(n)?))
}

pub fn gen(a: &GenArgs) -> CliResult<()> {
    let (game, banner) = match a.family {
        Family::Gn => {
            let p = gn_params_from(a.n, a.k.as_deref(), a.alpha.as_deref(), a.beta.as_deref())?;
            let g = build_gn(&p);
            let banner = format!("G_n {}x{} {}", g.rows(), g.cols(), p.summary());
            (g, banner)
        }
        Family::Shapley => (build_shapley(), "shapley 3x3".to_string()),
        Family::Mp => (build_matching_pennies(), "matching-pennies 2x2".to_string()),
        Family::Random => {
            let (m, n) = parse_size(&a.size)?;
            let g = build_random(a.seed, m, n, a.denom_bits)?;
            (g, format!("random {m}x{n} seed={} denom_bits={}", a.seed, a.denom_bits))
        }
    };
    write_game_file(&game, &a.out)?;
    println!("{banner}");
    Ok(())
}

/// 1-based `R,C` to 0-based indices.
pub fn parse_start(s: &str) -> CliResult<(usize, usize)> {
    let bad = || usage(format!("--start `{s}`: expected R,C with 1-based indices"));
    let (r, c) = s.split_once(',').ok_or_else(bad)?;
    let r: usize = r.trim().parse().map_err(|_| bad())?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    if r == 0 || c == 0 {
        return Err(bad());
    }
    Ok((r - 1, c - 1))
}

#[derive(Debug, Serialize)]
pub struct RunStats {
    pub t: u64,
    pub rows: usize,
    pub cols: usize,
    pub tie_break: String,
    pub start: [usize; 2],
    pub eps_schedule: String,
    pub tie_count: u64,
    pub first_tie_steps: Vec<u64>,
    pub runs: usize,
    pub final_profile: [usize; 2],
    pub accumulators: &'static str,
    pub epsilon_row: RegretValue,
    pub epsilon_col: RegretValue,
    pub epsilon_samples: usize,
}

pub fn write_epsilon_csv(path: &Path, points: &[EpsilonPoint]) -> CliResult<()> {
    let mut out = open_out(path)?;
    writeln!(out, "t,row_raw,row_normalized,col_raw,col_normalized")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.t,
            to_f64(&p.row.raw),
            to_f64(&p.row.normalized),
            to_f64(&p.col.raw),
            to_f64(&p.col.normalized)
        )?;
    }
    out.flush()?;
    Ok(())
}

fn write_expanded(path: &Path, trace: &Trace) -> CliResult<()> {
    let mut out = open_out(path)?;
    writeln!(out, "t,row_action,col_action")?;
    for (i, (r, c)) in trace.steps().enumerate() {
        writeln!(out, "{},{},{}", i + 1, r + 1, c + 1)?;
    }
    out.flush()?;
    Ok(())
}

pub fn run(a: &RunArgs) -> CliResult<()> {
    if a.expand.is_some() && a.steps > EXPAND_MAX_STEPS {
        return Err(usage(format!(
            "--expand is limited to {EXPAND_MAX_STEPS} steps (got {})",
            a.steps
        )));
    }
    let game = read_game_file(&a.game)?;
    let mut engine = match &a.resume {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            Engine::restore(&game, &Snapshot::from_bytes(bytes))?
        }
        None => {
            let (initial_row, initial_col) = parse_start(&a.start)?;
            if initial_row >= game.rows() || initial_col >= game.cols() {
                return Err(usage(format!(
                    "--start {}: game is {}x{}",
                    a.start,
                    game.rows(),
                    game.cols()
                )));
            }
            let config = FpConfig {
                tie_rule: a.tie_break.into(),
                initial_row,
                initial_col,
                epsilon_schedule: a.eps_schedule.into(),
            };
            Engine::init(&game, config)?
        }
    };
    let mut recorder = Recorder::new();
    engine.run(a.steps, &mut recorder)?;

    if let Some(path) = &a.trace_out {
        let mut out = open_out(path)?;
        engine.trace().write_csv(&mut out)?;
        out.flush()?;
    }
    if let Some(path) = &a.expand {
        write_expanded(path, engine.trace())?;
    }
    if let Some(path) = &a.eps_out {
        write_epsilon_csv(path, &recorder.epsilon)?;
    }
    if let Some(path) = &a.checkpoint_out {
        std::fs::write(path, engine.checkpoint().as_bytes())?;
    }
    let stats = run_stats(&engine, &recorder);
    match &a.stats_out {
        Some(path) => write_json(path, &stats)?,
        None => println!(
            "t={} ties={} eps_row={} eps_col={}",
            stats.t, stats.tie_count, stats.epsilon_row.normalized.exact, stats.epsilon_col.normalized.exact
        ),
    }
    Ok(())
}

pub fn run_stats(engine: &Engine<'_>, recorder: &Recorder) -> RunStats {
    let state = engine.state();
    let config = engine.config();
    let eps = engine.epsilon_point();
    let first = engine.trace().runs().first().map_or([0, 0], |r| [r.row + 1, r.col + 1]);
    RunStats {
        t: state.t,
        rows: engine.game().rows(),
        cols: engine.game().cols(),
        tie_break: format!("{:?}", config.tie_rule),
        start: first,
        eps_schedule: format!("{:?}", config.epsilon_schedule),
        tie_count: state.tie_steps,
        first_tie_steps: recorder.steps_with_ties.clone(),
        runs: engine.trace().runs().len(),
        final_profile: [state.last_row + 1, state.last_col + 1],
        accumulators: if engine.uses_wide_accumulators() { "bigint" } else { "i64" },
        epsilon_row: (&eps.row).into(),
        epsilon_col: (&eps.col).into(),
        epsilon_samples: recorder.epsilon.len(),
    }
}

fn read_trace(path: &Path) -> CliResult<Trace> {
    Ok(Trace::read_csv_file(path)?)
}

pub fn analyze(a: &AnalyzeArgs) -> CliResult<()> {
    let game = read_game_file(&a.game)?;
    let trace = read_trace(&a.trace)?;
    let checks = a
        .checks
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Check>().map_err(usage))
        .collect::<CliResult<Vec<_>>>()?;
    let report = analyze_run(&game, &trace, &checks, a.eps_schedule.into())?;
    write_json(&a.report, &report)?;
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|(_, s)| **s == CheckStatus::Fail)
        .map(|(k, _)| k.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("checks failed: {}", failed.join(", "))))
    }
}

#[derive(Debug, Serialize)]
struct CertifyJson {
    pass: bool,
    samples: u64,
    msbound_checks: u64,
    epsilon_star_checks: u64,
    worst_margin: ExactValue,
    worst_t: u64,
    worst_player: Player,
    failures: Vec<BoundFailure>,
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("--{flag} is required")))
}

pub fn bounds(a: &BoundsArgs) -> CliResult<()> {
    let out_path = a.out.clone().unwrap_or_else(|| "-".into());
    if a.epsilon_star {
        let (t, n) = (need(a.t, "t")?, need(a.n, "n")?);
        let eps = epsilon_star(n, t).map_err(|e| match e {
            fplab::Error::NotDivisible { n, t, nearest } => usage(format!(
                "t={t} is not divisible by n={n}; nearest valid t is {nearest}"
            )),
            other => other.into(),
        })?;
        let mut out = open_out(&out_path)?;
        writeln!(out, "{} ({})", fmt_rational(&eps), to_f64(&eps))?;
        out.flush()?;
        return Ok(());
    }
    if a.min_s {
        let (t, n) = (need(a.t, "t")?, need(a.n, "n")?);
        let mode = if a.exhaustive {
            SearchMode::AllSequences
        } else {
            SearchMode::BlockCompositions
        };
        let r = brute_force_min_s(t, n, mode)?;
        let mut out = open_out(&out_path)?;
        write!(out, "{}", r.to_csv())?;
        out.flush()?;
        if let (Some(d), Some(b), Some(count)) = (&r.distinct_values, r.all_block_form, r.minimizer_sequences) {
            eprintln!("minimizing sequences: {count}; distinct values used: {d:?}; all in block form: {b}");
        }
        return Ok(());
    }
    let game_path = a.game.as_ref().ok_or_else(|| usage("--certify needs --game"))?;
    let trace_path = a.trace.as_ref().ok_or_else(|| usage("--certify needs --trace"))?;
    let mut game: BimatrixGame = read_game_file(game_path)?;
    if a.normalize {
        game = game.normalize_to_unit();
    }
    let trace = read_trace(trace_path)?;
    let c = certify_trace_bound(&game, &trace, a.eps_schedule.into())?;
    let json = CertifyJson {
        pass: c.pass,
        samples: c.samples,
        msbound_checks: c.msbound_checks,
        epsilon_star_checks: c.epsilon_star_checks,
        worst_margin: (&c.worst_margin).into(),
        worst_t: c.worst_t,
        worst_player: c.worst_player,
        failures: c.failures,
    };
    write_json(&out_path, &json)?;
    if json.pass {
        Ok(())
    } else {
        Err(CliError::Verification("trace violates the regret bound".into()))
    }
}
