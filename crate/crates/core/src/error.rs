use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the signal-processing core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the domain where a special function is defined or
    /// implemented.
    Domain(&'static str),
    /// Invalid frame configuration.
    FrameConfig(&'static str),
    /// Signal shorter than one analysis frame.
    SignalTooShort { len: usize, frame_len: usize },
    /// Two operands disagree on a dimension.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// Invalid scene geometry or scene description.
    Scene(&'static str),
    /// Invalid post-filter configuration.
    Config(&'static str),
    /// A metric could not be evaluated (e.g. no active reference frames).
    Metric(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::FrameConfig(msg) => write!(f, "invalid frame configuration: {msg}"),
            Error::SignalTooShort { len, frame_len } => write!(
                f,
                "signal of {len} samples is shorter than one frame ({frame_len} samples)"
            ),
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected {expected}, found {found}"),
            Error::Scene(msg) => write!(f, "invalid scene: {msg}"),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Metric(msg) => write!(f, "metric error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
