use thiserror::Error;

pub type Result<T, E = SetarError> = std::result::Result<T, E>;

/// Broad failure class, used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum SetarError {
    #[error("series `{0}` is too short for the requested lag")]
    SeriesTooShort(String),
    #[error("covariate `{name}` is not aligned with series `{id}`")]
    CovariateMisaligned { name: String, id: String },
    #[error("covariate `{name}` has unseen category `{value}`")]
    UnknownCategory { name: String, value: String },
    #[error("future covariate values are missing for forecast step {0}")]
    MissingFutureCovariates(usize),
    #[error("duplicate series id `{0}`")]
    DuplicateSeriesId(String),
    #[error("series `{id}` has a non-finite value at index {index}")]
    NonFiniteValue { id: String, index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("normal equations are singular")]
    SingularSystem,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set has {rows} rows, at least {needed} are required")]
    TooFewRows { rows: usize, needed: usize },
    #[error("no candidate split yields two valid children")]
    NoValidSplit,
    #[error("column has a single distinct value")]
    DegenerateColumn,
    #[error("insufficient residual degrees of freedom (n = {n}, predictors = {predictors})")]
    InsufficientDf { n: usize, predictors: usize },
    #[error("continued fraction did not converge (a = {a}, b = {b}, x = {x})")]
    NonConvergence { a: f64, b: f64, x: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("MASE scaling term is zero")]
    ZeroDenominator,
    #[error("no actual values for series `{0}`")]
    MissingActuals(String),
    #[error("series {0} diverged")]
    DivergedSeries(usize),
    #[error("tree {index} failed to train: {source}")]
    ForestMember {
        index: usize,
        #[source]
        source: Box<SetarError>,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SetarError {
    pub fn category(&self) -> ErrorCategory {
        use SetarError::*;
        match self {
            SingularSystem | NonConvergence { .. } | DivergedSeries(_) | ZeroDenominator
            | NoValidSplit | InsufficientDf { .. } => ErrorCategory::Numerical,
            InvalidConfig(_) => ErrorCategory::Usage,
            ForestMember { source, .. } => source.category(),
            _ => ErrorCategory::Data,
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn tag(&self) -> &'static str {
        use SetarError::*;
        match self {
            SeriesTooShort(_) => "series-too-short",
            CovariateMisaligned { .. } => "covariate-misaligned",
            UnknownCategory { .. } => "unknown-category",
            MissingFutureCovariates(_) => "missing-future-covariates",
            DuplicateSeriesId(_) => "duplicate-series-id",
            NonFiniteValue { .. } => "non-finite-value",
            DimensionMismatch { .. } => "dimension-mismatch",
            SingularSystem => "singular-system",
            EmptyTrainingSet => "empty-training-set",
            TooFewRows { .. } => "too-few-rows",
            NoValidSplit => "no-valid-split",
            DegenerateColumn => "degenerate-column",
            InsufficientDf { .. } => "insufficient-df",
            NonConvergence { .. } => "non-convergence",
            LengthMismatch { .. } => "length-mismatch",
            ZeroDenominator => "zero-denominator",
            MissingActuals(_) => "missing-actuals",
            DivergedSeries(_) => "diverged-series",
            ForestMember { source, .. } => source.tag(),
            InvalidConfig(_) => "invalid-config",
            Parse { .. } => "parse",
            ModelFormat(_) => "model-format",
            Io(_) => "io",
            Csv(_) => "csv",
        }
    }
}
