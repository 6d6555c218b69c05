use thiserror::Error;

/// Errors raised by the fitting, selection and benchmarking routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmfrError {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("data length {len} does not match {rows}x{cols}")]
    BadLength { rows: usize, cols: usize, len: usize },
    #[error("predictor column {0} is constant")]
    ConstantColumn(usize),
    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("inner solver stopped after {iterations} sweeps with KKT residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("baseline matrix has rank {rank}, fewer than the {requested} factors requested")]
    RankDeficientBaseline { rank: usize, requested: usize },
    #[error("no factor count in 1..={r} produced full-rank factor and loading matrices; the l1 penalties are likely too large")]
    NoValidFactorCount { r: usize },
    #[error("cannot split {n} rows into {k} folds")]
    InvalidFolds { n: usize, k: usize },
    #[error("every candidate in the penalty grid was infeasible")]
    NoFeasibleCandidate,
    #[error("metric is undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("linear system is singular")]
    SingularSystem,
    #[error("fitted model collapsed below {0} components; try a smaller component count or smaller penalties")]
    RankCollapse(usize),
    #[error("component {0} lies in the span of the preceding components")]
    DependentComponents(usize),
}

pub type Result<T> = std::result::Result<T, SmfrError>;

pub(crate) fn shape_err(
    context: &'static str,
    expected: impl Into<String>,
    found: impl Into<String>,
) -> SmfrError {
    SmfrError::ShapeMismatch {
        context,
        expected: expected.into(),
        found: found.into(),
    }
}
