//! Periods of the Fermat pencil of Calabi-Yau `n`-folds: exact Frobenius
//! series, numerical monodromy around `φ = 1`, and recognition of the
//! period matrix in terms of `log(n+2)` and odd zeta values.

pub mod constants;
pub mod convention;
pub mod exact;
pub mod frobenius;
pub mod lattice;
pub mod numeric;
pub mod operator;
pub mod period;
pub mod pipeline;
pub mod recognition;
pub mod symbolic;
pub mod transport;

pub use constants::{eval_constant, ConstantLabel};
pub use convention::{f_log, p_log, PeriodConvention};
pub use frobenius::{closed_form_ratio, frobenius_series, wronskian_series, FrobeniusSolution};
pub use numeric::{CMatrix, ExactPoint, PrecisionContext};
pub use operator::{build_operator, t0_matrix, FuchsianOperator};
pub use period::{
    conjecture_entry, factor_period_matrix, solve_period_matrix, verify_conjecture, ConjectureReport, PeriodMatrix,
    SolveError, SolveOptions, ZetaFactorization,
};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, PipelineRun};
pub use recognition::{
    build_weight_basis, find_integer_relation, recognize_in_basis, recognize_rational, LabeledConstant, Measured,
    RecognitionError, RecognitionResult,
};
pub use symbolic::{odd_sum_partitions, Monomial, OddSumPartition, ZetaExpr};
pub use transport::{loop_monodromy, LoopSpec, MonodromyResult, TransportError};
