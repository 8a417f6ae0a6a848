use std::fmt;

/// Errors produced by the library.
///
/// Variants are grouped by how a caller should react: configuration and
/// dimension errors indicate programmer mistakes in the inputs, data errors
/// indicate unusable files or datasets, and degeneracy errors indicate that a
/// numerical procedure cannot proceed on the given data (singular covariance,
/// starved generation, ...). The CLI maps these groups onto exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid parameter value (out of its documented range).
    InvalidParameter(String),
    /// Matrix/vector dimensions do not agree.
    Dimension(String),
    /// Not enough records/columns for the requested operation.
    InsufficientData(String),
    /// A matrix required to be symmetric positive definite is not.
    NotPositiveDefinite(String),
    /// Argument outside the mathematical domain of a function.
    Domain(String),
    /// Data is too degenerate for the estimator or test (zero variance, ...).
    DegenerateData(String),
    /// Two routes to the same quantity disagree beyond tolerance.
    InternalConsistency(String),
    /// sigma^2 calibration failed (bracket not found, target unreachable).
    Calibration(String),
    /// Malformed configuration or mapping-table input.
    Config(String),
    /// Filesystem error, with path context.
    Io { path: String, message: String },
    /// Malformed file content, with path and 1-based line number.
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(m) => write!(f, "invalid parameter: {m}"),
            Error::Dimension(m) => write!(f, "dimension error: {m}"),
            Error::InsufficientData(m) => write!(f, "insufficient data: {m}"),
            Error::NotPositiveDefinite(m) => write!(f, "matrix not positive definite: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::DegenerateData(m) => write!(f, "degenerate data: {m}"),
            Error::InternalConsistency(m) => write!(f, "internal consistency check failed: {m}"),
            Error::Calibration(m) => write!(f, "calibration failed: {m}"),
            Error::Config(m) => write!(f, "configuration error: {m}"),
            Error::Io { path, message } => write!(f, "io error on {path}: {message}"),
            Error::Parse {
                path,
                line,
                message,
            } => write!(f, "parse error at {path}:{line}: {message}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// True for errors caused by numerically degenerate data rather than by
    /// bad inputs or bad files.
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite(_)
                | Error::DegenerateData(_)
                | Error::InsufficientData(_)
                | Error::InternalConsistency(_)
                | Error::Domain(_)
        )
    }
}
