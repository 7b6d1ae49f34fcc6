use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Variants split into two families: validation errors (bad input shape or
/// configuration) and numerical failures (degenerate geometry, singular
/// matrices). [`Error::is_numerical`] tells them apart; the CLI maps the two
/// families onto different exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in curve '{id}' at row {row}, column {col}")]
    NonFiniteValue { id: String, row: usize, col: usize },
    #[error("curve '{0}' does not match the ensemble grid or dimension")]
    GridMismatch(String),
    #[error("duplicate curve id '{0}'")]
    DuplicateId(String),
    #[error("too few curves: n = {n} with p = {p} (need at least p + 2)")]
    TooFewCurves { n: usize, p: usize },
    #[error("unknown curve id '{0}'")]
    UnknownId(String),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("unsupported dimension p = {0}")]
    UnsupportedDimension(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("time grid is not uniform")]
    NonUniformGrid,
    #[error("series too short: k = {0}")]
    TooShort(usize),
    #[error("all (or too many) WO values are zero: {positive} of {total} positive")]
    AllZeroWo { positive: usize, total: usize },
    #[error("every curve but {survivors} was flagged; need at least {needed} to rank")]
    AllCurvesFlagged { survivors: usize, needed: usize },
    #[error("no common time interval across tracks")]
    NoCommonInterval,
    #[error("malformed input at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("time values of track '{0}' are not strictly increasing")]
    NonMonotoneTime(String),
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("invalid Matérn cross-covariance parameters: {0}")]
    InvalidCrossParams(String),
    #[error("degenerate cross-section: {0}")]
    DegenerateSection(String),
    #[error("MCD subset covariance is singular (exact fit at {center:?})")]
    SingularSubsetCov { center: Vec<f64> },
    #[error("matrix is not positive definite after maximal jitter")]
    NotPositiveDefinite,
    #[error("smoothing spline fit for track '{0}' is ill-conditioned")]
    IllConditionedFit(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures that come from the numerics rather than from the input format.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSection(_)
                | Error::SingularSubsetCov { .. }
                | Error::NotPositiveDefinite
                | Error::IllConditionedFit(_)
                | Error::AllZeroWo { .. }
                | Error::AllCurvesFlagged { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
