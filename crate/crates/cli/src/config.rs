//! Command-line arguments and their validation.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use pfperiods_core::transport::{LoopSpec, DEFAULT_R_MAX};
use pfperiods_core::{ExactPoint, PrecisionContext};
use rug::Rational;
use serde::Serialize;
use thiserror::Error;

pub const CACHE_ENV: &str = "PFPERIODS_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = "pfperiods-cache";
pub const MIN_DIGITS: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Compute or extend the cached Frobenius series.
    Series,
    /// Monodromy matrix about φ = 1.
    Monodromy,
    /// Period matrix, factorization and τ table.
    Solve,
    /// Odd-sum-partition check and comparison with the expected-value table.
    Verify,
    /// One row per n over a range.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Series => "series",
            Command::Monodromy => "monodromy",
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pfperiods", version, about = "Periods of the Fermat pencil of Calabi-Yau n-folds")]
pub struct Args {
    pub command: Command,
    /// Dimension of the Calabi-Yau (first n of the range for `report`).
    #[arg(long)]
    pub n: i64,
    /// Last n for `report`.
    #[arg(long)]
    pub to: Option<i64>,
    #[arg(long, default_value_t = 100)]
    pub digits: u32,
    /// Guard digits (default ceil(0.6 * digits)).
    #[arg(long)]
    pub guard: Option<u32>,
    /// Series truncation order K.
    #[arg(long)]
    pub terms: Option<usize>,
    /// Base point of the loop, e.g. `1/10` or `3/20+1/10i`.
    #[arg(long, default_value = "1/10")]
    pub base: String,
    /// Radius of the circle about φ = 1.
    #[arg(long, default_value = "1/2")]
    pub radius: String,
    #[arg(long, default_value_t = pfperiods_core::transport::DEFAULT_MIN_CLEARANCE)]
    pub min_clearance: f64,
    #[arg(long, env = CACHE_ENV)]
    pub cache_dir: Option<PathBuf>,
    /// Output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Expected-value table (defaults to the bundled one).
    #[arg(long)]
    pub targets: Option<PathBuf>,
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid --{field}: {message}")]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

fn bad(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError { field, message: message.into() }
}

/// A validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub n: u32,
    pub to: u32,
    pub ctx: PrecisionContext,
    pub terms: Option<usize>,
    pub loop_spec: LoopSpec,
    pub cache_dir: PathBuf,
    pub out: Option<PathBuf>,
    pub targets: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_args(args: Args) -> Result<Self, ConfigError> {
        if args.n < 1 {
            return Err(bad("n", format!("must be a positive integer, got {}", args.n)));
        }
        let n = args.n as u32;
        let to = match (args.command, args.to) {
            (Command::Report, Some(t)) if t < args.n => return Err(bad("to", format!("must be at least --n ({})", args.n))),
            (Command::Report, Some(t)) => t as u32,
            (_, Some(_)) => return Err(bad("to", "only valid for the report command")),
            (_, None) => n,
        };
        if args.digits < MIN_DIGITS {
            return Err(bad("digits", format!("must be at least {MIN_DIGITS}, got {}", args.digits)));
        }
        let ctx = match args.guard {
            Some(0) => return Err(bad("guard", "must be positive")),
            Some(g) => PrecisionContext::with_guard(args.digits, g),
            None => PrecisionContext::new(args.digits),
        };
        if args.terms == Some(0) {
            return Err(bad("terms", "must be at least 1"));
        }
        if args.terms.is_some() && args.command != Command::Series {
            return Err(bad("terms", "only valid for the series command (other commands size the series themselves)"));
        }
        let base: ExactPoint = args.base.parse().map_err(|e| bad("base", format!("{e}")))?;
        let abs = base.abs_f64();
        if abs == 0.0 || abs > DEFAULT_R_MAX {
            return Err(bad("base", format!("|base| = {abs} must lie in (0, {DEFAULT_R_MAX}]")));
        }
        let radius: Rational = args.radius.parse().map_err(|_| bad("radius", format!("cannot parse {:?} as a rational", args.radius)))?;
        if radius <= 0 || radius >= 1 {
            return Err(bad("radius", "must lie strictly between 0 and 1"));
        }
        if !(args.min_clearance > 0.0 && args.min_clearance < radius.to_f64()) {
            return Err(bad("min-clearance", "must be positive and smaller than the radius"));
        }
        let loop_spec = LoopSpec { base: args.base, radius: args.radius, min_clearance: args.min_clearance, ..LoopSpec::default() };
        loop_spec.path().map_err(|e| bad("base", format!("{e}")))?;
        Ok(Self {
            command: args.command,
            n,
            to,
            ctx,
            terms: args.terms,
            loop_spec,
            cache_dir: args.cache_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR)),
            out: args.out,
            targets: args.targets,
        })
    }
}
