//! The five commands. Each returns a JSON document and an exit code.

use std::time::{Duration, Instant, SystemTime};

use pfperiods_core::frobenius::{check_wronskian, SeriesError};
use pfperiods_core::operator::{describe, OperatorError};
use pfperiods_core::pipeline::{monodromy_stage, StageTimings};
use pfperiods_core::transport::TransportError;
use pfperiods_core::{
    build_operator, factor_period_matrix, solve_period_matrix, verify_conjecture, FrobeniusSolution,
    FuchsianOperator, PipelineConfig, PipelineError, SolveError, SolveOptions,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::cache::{CacheError, CacheEvent, SeriesCache};
use crate::config::{Command, ConfigError, RunConfig};
use crate::report;
use crate::targets::{evaluate, CheckOutcome, Computed, Status, TargetError, TargetFile};

pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const RECOGNITION: i32 = 3;
    pub const RANK_ONE: i32 = 4;
    pub const PRECISION: i32 = 5;
    /// The run completed but a check failed.
    pub const VERIFICATION: i32 = 6;
}

/// Checked through this order by `series`.
pub const WRONSKIAN_ORDER: usize = 50;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Targets(#[from] TargetError),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Pipeline(e.into())
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        CliError::Pipeline(e.into())
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        CliError::Pipeline(e.into())
    }
}

fn transport_code(e: &TransportError) -> i32 {
    match e {
        TransportError::PrecisionMismatch { .. } | TransportError::InsufficientTerms { .. } | TransportError::Singular { .. } => {
            exit::PRECISION
        }
        _ => exit::OTHER,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Operator(_) => exit::USAGE,
            CliError::Cache(CacheError::Transport(t)) => transport_code(t),
            CliError::Pipeline(PipelineError::Transport(t)) => transport_code(t),
            CliError::Pipeline(PipelineError::Solve(SolveError::NotRankOne { .. })) => exit::RANK_ONE,
            CliError::Pipeline(PipelineError::Solve(SolveError::Dimension { .. })) => exit::OTHER,
            CliError::Pipeline(PipelineError::Solve(_)) => exit::RECOGNITION,
            _ => exit::OTHER,
        }
    }
}

/// An error together with the run parameters it happened under.
#[derive(Debug, Error)]
#[error("n={n} digits={digits} guard={guard} base={base} radius={radius}: {source}")]
pub struct RunFailure {
    pub n: u32,
    pub digits: u32,
    pub guard: u32,
    pub base: String,
    pub radius: String,
    pub source: CliError,
}

impl RunFailure {
    fn new(cfg: &RunConfig, n: u32, source: CliError) -> Self {
        Self {
            n,
            digits: cfg.ctx.digits,
            guard: cfg.ctx.guard,
            base: cfg.loop_spec.base.clone(),
            radius: cfg.loop_spec.radius.clone(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

#[derive(Debug)]
pub struct Output {
    pub document: Value,
    pub exit_code: i32,
}

impl Output {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.document).expect("report serializes");
        s.push('\n');
        s
    }
}

fn pipeline_config(cfg: &RunConfig) -> PipelineConfig {
    PipelineConfig { ctx: cfg.ctx, loop_spec: cfg.loop_spec.clone(), options: SolveOptions::default() }
}

fn ms(d: Duration) -> u64 {
    d.as_millis() as u64
}

fn timings_json(t: &StageTimings) -> Value {
    json!({ "series": ms(t.series), "monodromy": ms(t.monodromy), "solve": ms(t.solve), "factor": ms(t.factor) })
}

fn events_json(events: &[CacheEvent]) -> Vec<String> {
    events.iter().map(ToString::to_string).collect()
}

/// Everything computed for one `n`; later stages are `None` when not requested.
struct Stages {
    op: FuchsianOperator,
    sol: FrobeniusSolution,
    events: Vec<CacheEvent>,
    monodromy: Option<pfperiods_core::MonodromyResult>,
    period: Option<pfperiods_core::PeriodMatrix>,
    factorization: Option<pfperiods_core::ZetaFactorization>,
    conjecture: Option<pfperiods_core::ConjectureReport>,
    timings: StageTimings,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Depth {
    Monodromy,
    Solve,
    Conjecture,
}

fn compute(cfg: &RunConfig, n: u32, depth: Depth) -> Result<Stages, CliError> {
    let op = build_operator(i64::from(n))?;
    let cache = SeriesCache::new(&cfg.cache_dir);
    let pcfg = pipeline_config(cfg);
    let mut timings = StageTimings::default();
    let t = Instant::now();
    let base = cfg.loop_spec.base_point()?;
    let (mut sol, events) = cache.series_for(&op, &base, &cfg.ctx)?;
    timings.series += t.elapsed();
    let before = sol.order();
    let mono = monodromy_stage(&op, &mut sol, &pcfg, &mut timings)?;
    if sol.order() != before {
        cache.store(&sol)?;
    }
    let mut st = Stages {
        op,
        sol,
        events,
        monodromy: None,
        period: None,
        factorization: None,
        conjecture: None,
        timings,
    };
    if depth >= Depth::Solve {
        let t = Instant::now();
        let period = solve_period_matrix(&mono, n, &pcfg.options)?;
        st.timings.solve = t.elapsed();
        let t = Instant::now();
        let fac = factor_period_matrix(&period, &pcfg.options.height_bound)?;
        if depth >= Depth::Conjecture {
            st.conjecture = Some(verify_conjecture(&fac));
        }
        st.timings.factor = t.elapsed();
        st.period = Some(period);
        st.factorization = Some(fac);
    }
    st.monodromy = Some(mono);
    Ok(st)
}

fn load_targets(cfg: &RunConfig) -> Result<TargetFile, CliError> {
    Ok(TargetFile::load(cfg.targets.as_deref())?)
}

fn check_outcomes(targets: &TargetFile, st: &Stages) -> Result<Vec<CheckOutcome>, CliError> {
    let Some(target) = targets.for_n(st.op.n()) else {
        return Ok(Vec::new());
    };
    let got = Computed {
        series: Some(&st.sol),
        monodromy: st.monodromy.as_ref(),
        period: st.period.as_ref(),
        factorization: st.factorization.as_ref(),
    };
    Ok(evaluate(target, &got)?)
}

fn tally(outcomes: &[CheckOutcome]) -> Value {
    let count = |s: Status| outcomes.iter().filter(|o| o.status == s).count();
    json!({ "pass": count(Status::Pass), "fail": count(Status::Fail), "skipped": count(Status::Skipped) })
}

pub fn cmd_series(cfg: &RunConfig) -> Result<Output, CliError> {
    let started = SystemTime::now();
    let op = build_operator(i64::from(cfg.n))?;
    let cache = SeriesCache::new(&cfg.cache_dir);
    let t = Instant::now();
    let (sol, events) = match cfg.terms {
        Some(k) => cache.series_exact(&op, k)?,
        None => cache.series_for(&op, &cfg.loop_spec.base_point()?, &cfg.ctx)?,
    };
    let series_ms = ms(t.elapsed());
    let order = WRONSKIAN_ORDER.min(sol.order());
    let t = Instant::now();
    let wronskian = check_wronskian(&sol, order);
    let wronskian_ms = ms(t.elapsed());
    let leading: Vec<Vec<String>> = sol.rows().iter().map(|r| r.iter().take(6).map(ToString::to_string).collect()).collect();
    let result = json!({
        "parameters": report::parameters(cfg, cfg.n),
        "operator": describe(&op),
        "terms": sol.order(),
        "record": SeriesCache::record_name(cfg.n, sol.order()),
        "wronskian": {
            "order": order,
            "pass": wronskian.is_ok(),
            "first_mismatch": wronskian.err(),
        },
        "leading_coefficients": leading,
    });
    let meta = report::metadata(started, events_json(&events), json!({ "series": series_ms, "wronskian": wronskian_ms }));
    let code = if wronskian.is_ok() { exit::OK } else { exit::VERIFICATION };
    Ok(Output { document: report::envelope("series", result, meta), exit_code: code })
}

pub fn cmd_monodromy(cfg: &RunConfig) -> Result<Output, CliError> {
    let started = SystemTime::now();
    let st = compute(cfg, cfg.n, Depth::Monodromy)?;
    let mono = st.monodromy.as_ref().expect("monodromy stage ran");
    let result = json!({
        "parameters": report::parameters(cfg, cfg.n),
        "monodromy": report::monodromy(mono, st.sol.order(), cfg.loop_spec.counterclockwise),
    });
    let meta = report::metadata(started, events_json(&st.events), timings_json(&st.timings));
    Ok(Output { document: report::envelope("monodromy", result, meta), exit_code: exit::OK })
}

fn solve_result(cfg: &RunConfig, st: &Stages) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("parameters".into(), report::parameters(cfg, st.op.n()));
    m.insert(
        "monodromy".into(),
        report::monodromy(st.monodromy.as_ref().expect("monodromy stage ran"), st.sol.order(), cfg.loop_spec.counterclockwise),
    );
    m.insert("period".into(), report::period(st.period.as_ref().expect("solve stage ran")));
    m.insert("factorization".into(), report::factorization(st.factorization.as_ref().expect("solve stage ran")));
    m
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Output, CliError> {
    let started = SystemTime::now();
    let st = compute(cfg, cfg.n, Depth::Solve)?;
    let result = Value::Object(solve_result(cfg, &st));
    let meta = report::metadata(started, events_json(&st.events), timings_json(&st.timings));
    Ok(Output { document: report::envelope("solve", result, meta), exit_code: exit::OK })
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Output, CliError> {
    let started = SystemTime::now();
    let targets = load_targets(cfg)?;
    let st = compute(cfg, cfg.n, Depth::Conjecture)?;
    let conj = st.conjecture.as_ref().expect("conjecture stage ran");
    let outcomes = check_outcomes(&targets, &st)?;
    let targets_ok = outcomes.iter().all(|o| o.status != Status::Fail);
    let mut result = solve_result(cfg, &st);
    result.insert("conjecture".into(), report::conjecture(conj));
    result.insert(
        "targets".into(),
        json!({ "summary": tally(&outcomes), "checks": serde_json::to_value(&outcomes).expect("outcomes serialize") }),
    );
    result.insert("pass".into(), json!(conj.pass && targets_ok));
    let meta = report::metadata(started, events_json(&st.events), timings_json(&st.timings));
    let code = if conj.pass && targets_ok { exit::OK } else { exit::VERIFICATION };
    Ok(Output { document: report::envelope("verify", Value::Object(result), meta), exit_code: code })
}

/// One row of `report`, and its exit code.
fn report_row(cfg: &RunConfig, targets: &TargetFile, n: u32) -> (Value, Value, Vec<String>, i32) {
    let st = match compute(cfg, n, Depth::Conjecture) {
        Ok(st) => st,
        Err(e) => {
            let f = RunFailure::new(cfg, n, e);
            let code = f.exit_code();
            return (json!({ "n": n, "error": f.to_string(), "exit_code": code }), Value::Null, Vec::new(), code);
        }
    };
    let fac = st.factorization.as_ref().expect("solve stage ran");
    let conj = st.conjecture.as_ref().expect("conjecture stage ran");
    let outcomes = match check_outcomes(targets, &st) {
        Ok(o) => o,
        Err(e) => {
            let code = e.exit_code();
            return (json!({ "n": n, "error": e.to_string(), "exit_code": code }), Value::Null, Vec::new(), code);
        }
    };
    let targets_ok = outcomes.iter().all(|o| o.status != Status::Fail);
    let r: Map<String, Value> = fac.r.iter().map(|(k, v)| (k.to_string(), json!(v.to_string()))).collect();
    let failed: Vec<Value> = conj.entries.iter().filter(|e| !e.pass).map(|e| json!(e.j)).collect();
    let row = json!({
        "n": n,
        "r": r,
        "p_zeta_first_column": fac.column.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "conjecture_pass": conj.pass,
        "conjecture_failures": failed,
        "targets": tally(&outcomes),
        "pass": conj.pass && targets_ok,
    });
    let code = if conj.pass && targets_ok { exit::OK } else { exit::VERIFICATION };
    (row, timings_json(&st.timings), events_json(&st.events), code)
}

pub fn cmd_report(cfg: &RunConfig) -> Result<Output, CliError> {
    let started = SystemTime::now();
    let targets = load_targets(cfg)?;
    let rows: Vec<(Value, Value, Vec<String>, i32)> =
        (cfg.n..=cfg.to).into_par_iter().map(|n| report_row(cfg, &targets, n)).collect();
    let code = rows.iter().map(|r| r.3).find(|&c| c != exit::OK).unwrap_or(exit::OK);
    let mut runtimes = Map::new();
    let mut events = Vec::new();
    for (n, (_, t, ev, _)) in (cfg.n..=cfg.to).zip(&rows) {
        runtimes.insert(n.to_string(), t.clone());
        events.extend(ev.iter().map(|e| format!("n={n}: {e}")));
    }
    let result = json!({
        "parameters": { "from": cfg.n, "to": cfg.to, "digits": cfg.ctx.digits, "guard": cfg.ctx.guard,
                        "base": cfg.loop_spec.base, "radius": cfg.loop_spec.radius },
        "rows": rows.into_iter().map(|r| r.0).collect::<Vec<_>>(),
        "pass": code == exit::OK,
    });
    let meta = report::metadata(started, events, Value::Object(runtimes));
    Ok(Output { document: report::envelope("report", result, meta), exit_code: code })
}

pub fn execute(cfg: &RunConfig) -> Result<Output, RunFailure> {
    let res = match cfg.command {
        Command::Series => cmd_series(cfg),
        Command::Monodromy => cmd_monodromy(cfg),
        Command::Solve => cmd_solve(cfg),
        Command::Verify => cmd_verify(cfg),
        Command::Report => cmd_report(cfg),
    };
    res.map_err(|e| RunFailure::new(cfg, cfg.n, e))
}

/// Runs the command and writes its JSON to `--out` or stdout.
pub fn run(cfg: &RunConfig) -> Result<Output, RunFailure> {
    let out = execute(cfg)?;
    let text = out.to_json();
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|source| {
            RunFailure::new(cfg, cfg.n, CliError::Output { path: path.display().to_string(), source })
        })?,
        None => print!("{text}"),
    }
    Ok(out)
}
