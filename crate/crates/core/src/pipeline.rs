//! Series, monodromy, period matrix, factorization and conjecture check in one call.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::frobenius::{FrobeniusSolution, SeriesError};
use crate::numeric::PrecisionContext;
use crate::operator::FuchsianOperator;
use crate::period::{
    factor_period_matrix, solve_period_matrix, verify_conjecture, ConjectureReport, PeriodMatrix, SolveError,
    SolveOptions, ZetaFactorization,
};
use crate::transport::{ensure_terms, loop_monodromy, LoopSpec, MonodromyResult, TransportError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub ctx: PrecisionContext,
    pub loop_spec: LoopSpec,
    pub options: SolveOptions,
}

impl PipelineConfig {
    pub fn new(digits: u32) -> Self {
        Self { ctx: PrecisionContext::new(digits), loop_spec: LoopSpec::default(), options: SolveOptions::default() }
    }
}

#[derive(Clone, Debug, Default)]
pub struct StageTimings {
    pub series: Duration,
    pub monodromy: Duration,
    pub solve: Duration,
    pub factor: Duration,
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub n: u32,
    pub terms: usize,
    pub monodromy: MonodromyResult,
    pub period: PeriodMatrix,
    pub factorization: ZetaFactorization,
    pub conjecture: ConjectureReport,
    pub timings: StageTimings,
}

/// Extends `sol` as needed and computes the monodromy about `φ = 1`.
pub fn monodromy_stage(
    op: &FuchsianOperator,
    sol: &mut FrobeniusSolution,
    cfg: &PipelineConfig,
    timings: &mut StageTimings,
) -> Result<MonodromyResult, PipelineError> {
    let t = Instant::now();
    let base = cfg.loop_spec.base_point()?;
    ensure_terms(op, sol, &base, &cfg.ctx)?;
    timings.series += t.elapsed();
    let t = Instant::now();
    let mono = loop_monodromy(op, sol, &cfg.loop_spec, &cfg.ctx)?;
    timings.monodromy += t.elapsed();
    Ok(mono)
}

pub fn run_pipeline(
    op: &FuchsianOperator,
    sol: &mut FrobeniusSolution,
    cfg: &PipelineConfig,
) -> Result<PipelineRun, PipelineError> {
    let mut timings = StageTimings::default();
    let monodromy = monodromy_stage(op, sol, cfg, &mut timings)?;
    let t = Instant::now();
    let period = solve_period_matrix(&monodromy, op.n(), &cfg.options)?;
    timings.solve = t.elapsed();
    let t = Instant::now();
    let factorization = factor_period_matrix(&period, &cfg.options.height_bound)?;
    let conjecture = verify_conjecture(&factorization);
    timings.factor = t.elapsed();
    Ok(PipelineRun { n: op.n(), terms: sol.order(), monodromy, period, factorization, conjecture, timings })
}
