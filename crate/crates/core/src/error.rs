use thiserror::Error;

/// Errors raised by model validation, measure evaluation and the operators.
///
/// State indices carried by variants are 0-based; user-facing surfaces
/// (JSON, CLI, C API) translate to 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("generator must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("generator needs at least 2 states, got {0}")]
    TooFewStates(usize),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("diagonal entry of state {state} must be strictly negative, got {value}")]
    ZeroDiagonal { state: usize, value: f64 },
    #[error("off-diagonal entry ({row}, {col}) is negative: {value}")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("column {col} sums to {defect:e}, beyond the repair tolerance")]
    ColumnSumDefect { col: usize, defect: f64 },
    #[error("generator is reducible: state {unreachable} is not reachable from state {from}")]
    Reducible { from: usize, unreachable: usize },
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("time must be strictly positive")]
    NonPositiveTime,
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("state {state} out of range for {n} states")]
    StateOutOfRange { state: usize, n: usize },
    #[error("invalid cylinder: {0}")]
    InvalidCylinder(String),
    #[error("invalid time point: {0}")]
    InvalidTime(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite potential value at state {0}")]
    NonFinitePotential(usize),
    #[error("future coordinate at offset {offset} is not pinned by the conditioning path")]
    UndecidableFuture { offset: String },
    #[error("top eigenvalue is not real and simple: {0}")]
    DegenerateSpectrum(String),
    #[error("overflow while propagating the weighted semigroup")]
    Overflow,
    #[error("literal evaluation requires a time-0 anchor")]
    AnchorRequired,
    #[error("time {t} lies beyond the horizon {horizon}")]
    TimeBeyondHorizon { t: f64, horizon: f64 },
    #[error("cylinder anchors state {found} but the bridge starts at {expected}")]
    AnchorMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("model file: {0}")]
    Model(String),
}

impl Error {
    /// Stable machine-readable name, used in CLI error lists and reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonSquare { .. } => "NonSquare",
            Error::TooFewStates(_) => "TooFewStates",
            Error::NonFinite { .. } => "NonFinite",
            Error::ZeroDiagonal { .. } => "ZeroDiagonal",
            Error::NegativeOffDiagonal { .. } => "NegativeOffDiagonal",
            Error::ColumnSumDefect { .. } => "ColumnSumDefect",
            Error::Reducible { .. } => "Reducible",
            Error::NegativeTime(_) => "NegativeTime",
            Error::NonPositiveTime => "NonPositiveTime",
            Error::SolveFailure(_) => "SolveFailure",
            Error::StateOutOfRange { .. } => "StateOutOfRange",
            Error::InvalidCylinder(_) => "InvalidCylinder",
            Error::InvalidTime(_) => "InvalidTime",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonFinitePotential(_) => "NonFinitePotential",
            Error::UndecidableFuture { .. } => "UndecidableFuture",
            Error::DegenerateSpectrum(_) => "DegenerateSpectrum",
            Error::Overflow => "Overflow",
            Error::AnchorRequired => "AnchorRequired",
            Error::TimeBeyondHorizon { .. } => "TimeBeyondHorizon",
            Error::AnchorMismatch { .. } => "AnchorMismatch",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Model(_) => "Model",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
