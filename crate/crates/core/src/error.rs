//! Error type shared across the engine.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("index out of range in {context}: index {index}, bound {bound}")]
    IndexOutOfRange {
        context: String,
        index: usize,
        bound: usize,
    },

    #[error("chart box is degenerate on axis {axis}: lower bound must be strictly below upper")]
    InvalidChartBox { axis: usize },

    #[error("unknown Lie algebra preset '{0}'")]
    UnknownPreset(String),

    #[error("Lie algebra check failed: {0}")]
    AlgebraCheck(String),

    #[error("unsupported value-kind combination: {0}")]
    ValueKindMismatch(String),

    #[error("forms are over different backgrounds or algebras: {0}")]
    BackgroundMismatch(String),

    #[error("metric is degenerate: {0}")]
    DegenerateMetric(String),

    #[error("inner part of the metric is degenerate along basis direction {direction}")]
    InnerDegenerate { direction: usize },

    #[error("matrix inverse check failed: max residual {residual:.3e} exceeds {tolerance:.3e}")]
    InverseCheckFailed { residual: f64, tolerance: f64 },

    #[error("value left the algebra span: projection residual {residual:.3e} exceeds {tolerance:.3e}")]
    SpanProjectionFailed { residual: f64, tolerance: f64 },

    #[error("overlap ({i},{j}) is not registered in the atlas")]
    UnknownOverlap { i: usize, j: usize },

    #[error("chart {0} is not registered in the atlas")]
    UnknownChart(usize),

    #[error("atlas is inconsistent: {0}")]
    AtlasCheck(String),

    #[error("operation requires a matrix realization of the algebra")]
    MissingRealization,

    #[error("operation requires the gl(p) elementary-matrix basis")]
    MissingTrace,

    #[error("configuration error: {0}")]
    Config(String),
}
