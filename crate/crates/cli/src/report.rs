//! JSON rendering. Big numbers are decimal strings, never binary floats;
//! everything that varies between identical runs sits under `metadata`.

use std::time::{SystemTime, UNIX_EPOCH};

use pfperiods_core::numeric::{format_decimal, log10_abs};
use pfperiods_core::period::{ConjectureReport, PeriodMatrix, ZetaFactorization};
use pfperiods_core::{CMatrix, MonodromyResult, PrecisionContext};
use rug::float::Round;
use rug::{Complex, Float};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;

pub const SCHEMA: u32 = 1;

/// `x` to `digits` significant digits. Values below `10^{floor}` print as
/// `0`. The value is first rounded 20 digits further out, so an exact
/// integer computed as `2.999…` still prints as `3.000…`, and a
/// lower-precision rendering stays a prefix of a higher-precision one.
pub fn decimal(x: &Float, digits: u32, floor: f64) -> String {
    if x.is_zero() || log10_abs(x) < floor {
        return "0".into();
    }
    let mut y = x.clone();
    let sig = f64::from(digits + 20) * std::f64::consts::LOG2_10;
    y.set_prec_round((sig.ceil() as u32).min(x.prec()).max(2), Round::Nearest);
    format_decimal(&y, digits as usize)
}

pub fn complex(z: &Complex, digits: u32, floor: f64) -> Value {
    json!({ "re": decimal(z.real(), digits, floor), "im": decimal(z.imag(), digits, floor) })
}

pub fn exponent(x: f64) -> Value {
    if x.is_finite() {
        json!(format!("{x:.1}"))
    } else if x < 0.0 {
        json!("-inf")
    } else {
        json!("inf")
    }
}

/// Smallest magnitude still reported for a matrix with entries up to `max`.
pub fn matrix_floor(m: &CMatrix, ctx: &PrecisionContext) -> f64 {
    log10_abs(&m.max_abs()).max(0.0) - f64::from(ctx.digits)
}

pub fn matrix(m: &CMatrix, ctx: &PrecisionContext) -> Value {
    let floor = matrix_floor(m, ctx);
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array((0..m.cols()).map(|j| complex(&m[(i, j)], ctx.digits, floor)).collect()))
            .collect(),
    )
}

pub fn parameters(cfg: &RunConfig, n: u32) -> Value {
    json!({
        "n": n,
        "digits": cfg.ctx.digits,
        "guard": cfg.ctx.guard,
        "base": cfg.loop_spec.base,
        "radius": cfg.loop_spec.radius,
        "min_clearance": format!("{}", cfg.loop_spec.min_clearance),
    })
}

pub fn monodromy(m: &MonodromyResult, terms: usize, counterclockwise: bool) -> Value {
    let ctx = &m.ctx;
    let nil = m.nilpotent_part();
    json!({
        "digits": ctx.digits,
        "series_terms": terms,
        "loop": { "about": 1, "orientation": if counterclockwise { "counterclockwise" } else { "clockwise" } },
        "t1_minus_id": matrix(&nil, ctx),
        "max_error_log10": exponent(m.max_error_log10()),
        "rank1_residual_log10": exponent(m.rank1_residual_log10),
        "condition_log10": exponent(m.condition_log10),
    })
}

pub fn period(p: &PeriodMatrix) -> Value {
    let ctx = &p.ctx;
    let a: Vec<Value> = (1..p.a.len())
        .map(|j| {
            json!({
                "j": j,
                "symbolic": p.a[j].to_string(),
                "value": complex(&p.a_values[j].refined, ctx.digits, -f64::from(ctx.digits)),
            })
        })
        .collect();
    let steps: Vec<Value> = p
        .steps
        .iter()
        .map(|s| {
            let r = &s.recognition;
            json!({
                "j": s.j,
                "basis": r.basis.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "coefficients": r.coefficients.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "residual_log10": exponent(r.residual_log10),
                "refined_residual_log10": exponent(r.refined_residual_log10),
                "threshold_log10": exponent(r.threshold_log10),
            })
        })
        .collect();
    let conj = &p.conjugated;
    let rows: Vec<Vec<String>> = (0..conj.dim()).map(|i| (0..conj.dim()).map(|k| conj[(i, k)].to_string()).collect()).collect();
    json!({
        "pivot_combination": p.combination,
        "a": a,
        "recognition": steps,
        "p_t1_p_inverse": rows,
        "rationality_residual_log10": exponent(p.rationality_residual_log10),
    })
}

pub fn factorization(f: &ZetaFactorization) -> Value {
    let column: Vec<Value> = f.column.iter().enumerate().map(|(j, e)| json!({ "j": j, "symbolic": e.to_string() })).collect();
    let tau: Map<String, Value> = f.tau.iter().map(|(k, e)| (k.to_string(), json!(e.to_string()))).collect();
    let r: Map<String, Value> = f.r.iter().map(|(k, v)| (k.to_string(), json!(v.to_string()))).collect();
    json!({
        "p_zeta_first_column": column,
        "tau": tau,
        "r": r,
        "pascal_deviation_log10": exponent(f.pascal_deviation_log10),
        "closure_residual_log10": exponent(f.closure_residual_log10),
    })
}

pub fn conjecture(c: &ConjectureReport) -> Value {
    let entries: Vec<Value> = c
        .entries
        .iter()
        .map(|e| {
            json!({
                "j": e.j,
                "kind": e.kind,
                "partitions": e.partitions.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "recognized": e.recognized.to_string(),
                "predicted": e.predicted.to_string(),
                "symbolic_match": e.symbolic_match,
                "residual_log10": exponent(e.residual_log10),
                "pass": e.pass,
            })
        })
        .collect();
    json!({ "entries": entries, "tolerance_log10": exponent(c.tolerance_log10), "pass": c.pass })
}

pub fn metadata(started: SystemTime, cache: Vec<String>, timings: Value) -> Value {
    let now = SystemTime::now();
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "generated_unix": now.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "elapsed_ms": now.duration_since(started).map(|d| d.as_millis() as u64).unwrap_or(0),
        "cache": cache,
        "timings_ms": timings,
    })
}

pub fn envelope(command: &str, result: Value, metadata: Value) -> Value {
    json!({ "schema": SCHEMA, "command": command, "result": result, "metadata": metadata })
}

/// The document without `metadata`, for comparing runs.
pub fn without_metadata(doc: &Value) -> Value {
    let mut d = doc.clone();
    if let Some(m) = d.as_object_mut() {
        m.remove("metadata");
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_snaps_near_integers_and_zero() {
        let prec = 500;
        let three = Float::with_val(prec, 3) - Float::with_val(prec, Float::parse("1e-130").unwrap());
        assert_eq!(decimal(&three, 10, -100.0), "3.000000000");
        let tiny = Float::with_val(prec, Float::parse("1e-130").unwrap());
        assert_eq!(decimal(&tiny, 10, -100.0), "0");
        let x = Float::with_val(prec, Float::parse("0.82545410681158738284700").unwrap());
        let short = decimal(&x, 12, -100.0);
        assert!(decimal(&x, 20, -100.0).starts_with(&short));
    }
}
