use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Variants that concern a particular record or configuration entry carry its
/// identifier so callers can point the user at the offending input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid value in row {row}: {reason}")]
    InvalidValue { row: String, reason: String },

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("empty input")]
    EmptyInput,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate risk set: no events in any group")]
    DegenerateRiskSet,

    #[error("{what} did not converge after {iterations} iterations: {reason}")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        reason: String,
    },

    #[error("an arm is empty or has no events after excluding switchers")]
    EmptyArmAfterExclusion,

    #[error("no events remain after censoring switchers")]
    NoEventsAfterRecoding,

    #[error("switching is perfectly predicted by covariates: {0}")]
    PerfectPrediction(String),

    #[error("no acceleration parameter for switch level {0}")]
    MissingLevelParameter(u32),

    #[error("g-estimation minimum lies on the grid boundary at psi = {boundary:?}")]
    NoSolutionInRange { boundary: Vec<f64> },

    #[error("stratified g-estimation supports at most 3 extra levels, got {0}")]
    LevelCountExceeded(usize),

    #[error("stratified method requires levels: dataset declares no extra switch levels")]
    StratifiedRequiresLevels,

    #[error("insufficient training data: {have} rows, need at least {need}")]
    InsufficientTraining { have: usize, need: usize },

    #[error("feature mismatch: forest expects {expected} features, row has {got}")]
    FeatureMismatch { expected: usize, got: usize },

    #[error("calibration failure: {0}")]
    CalibrationFailure(String),

    #[error("all replicates failed")]
    AllReplicatesFailed,
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn row(row: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidValue {
            row: row.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 2 config, 3 data, 4 method non-convergence. Code 5 (partial sweep
    /// failure) is decided by the sweep driver, not by a single error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::NonConvergence { .. }
            | Error::NoSolutionInRange { .. }
            | Error::PerfectPrediction(_) => 4,
            _ => 3,
        }
    }

    /// Short machine-readable tag used in per-replicate audit files.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema(_) => "schema",
            Error::InvalidValue { .. } => "invalid_value",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::EmptyInput => "empty_input",
            Error::InvalidInput(_) => "invalid_input",
            Error::DegenerateRiskSet => "degenerate_risk_set",
            Error::NonConvergence { .. } => "non_convergence",
            Error::EmptyArmAfterExclusion => "empty_arm_after_exclusion",
            Error::NoEventsAfterRecoding => "no_events_after_recoding",
            Error::PerfectPrediction(_) => "perfect_prediction",
            Error::MissingLevelParameter(_) => "missing_level_parameter",
            Error::NoSolutionInRange { .. } => "no_solution_in_range",
            Error::LevelCountExceeded(_) => "level_count_exceeded",
            Error::StratifiedRequiresLevels => "stratified_requires_levels",
            Error::InsufficientTraining { .. } => "insufficient_training",
            Error::FeatureMismatch { .. } => "feature_mismatch",
            Error::CalibrationFailure(_) => "calibration_failure",
            Error::AllReplicatesFailed => "all_replicates_failed",
        }
    }
}
