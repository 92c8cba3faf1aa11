use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports. Degenerate numerical situations are
/// errors, never sentinel values.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate power base: {base_mw} MW")]
    DegenerateBase { base_mw: f64 },

    #[error("degenerate slope: |rocof| = {rocof} Hz/s is not above the floor {floor} Hz/s")]
    DegenerateSlope { rocof: f64, floor: f64 },

    #[error("network solve diverged at t = {time} s after {iterations} iterations (residual {residual:e})")]
    NetworkSolveDiverged {
        time: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("trace grid mismatch on channel `{channel}`: {reason}")]
    TraceGridMismatch { channel: String, reason: String },

    #[error("no COI weight given for channel `{0}`")]
    WeightMissing(String),

    #[error("window holds {found} usable samples, at least 2 are required")]
    WindowTooSparse { found: usize },

    #[error("window [{start}, {end}] s lies outside the trace span [{trace_start}, {trace_end}] s")]
    WindowOutOfRange {
        start: f64,
        end: f64,
        trace_start: f64,
        trace_end: f64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-uniform sampling grid: {0}")]
    Grid(String),

    #[error("invalid value at line {line}, column {column}: {message}")]
    Value {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("validation error in `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics (degenerate slopes or bases, a
    /// diverging network solve) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateBase { .. } | Error::DegenerateSlope { .. } | Error::NetworkSolveDiverged { .. }
        )
    }
}
