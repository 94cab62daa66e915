//! Fixtures shared by the benchmarks.

use pfperiods_core::transport::ensure_terms;
use pfperiods_core::*;

/// Operator and a series long enough for a loop at `digits`.
pub fn prepared(n: u32, digits: u32) -> (FuchsianOperator, FrobeniusSolution, PrecisionContext, LoopSpec) {
    let op = build_operator(i64::from(n)).expect("n >= 1");
    let mut sol = frobenius_series(&op, 50).expect("series");
    let ctx = PrecisionContext::new(digits);
    let spec = LoopSpec::default();
    ensure_terms(&op, &mut sol, &spec.base_point().expect("default base"), &ctx).expect("terms");
    (op, sol, ctx, spec)
}
