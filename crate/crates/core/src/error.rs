use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("non-finite value at line {line}")]
    NonFiniteValue { line: usize },
    #[error("duplicate timestamp {timestamp_ms} for {machine_id}/{channel}")]
    DuplicateTimestamp {
        machine_id: String,
        channel: String,
        timestamp_ms: i64,
    },
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error("series too short: need {needed} samples, have {have}")]
    SeriesTooShort { needed: usize, have: usize },
    #[error("invalid window width {0}: must be a power of two >= 8")]
    InvalidWidth(usize),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("channels of machine {0} are not sampled at identical timestamps")]
    MisalignedChannels(String),

    #[error("empty input")]
    EmptyInput,
    #[error("zero total power: spectral entropy undefined")]
    ZeroPower,
    #[error("standard deviation is zero: kurtosis undefined")]
    SigmaZero,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("DegenerateLabels: training data contains a single class")]
    DegenerateLabels,
    #[error("InsufficientData: {samples} samples for {params} parameters")]
    InsufficientData { samples: usize, params: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid label {0}: expected -1 or +1")]
    InvalidLabel(i32),

    #[error("NoConvergence: SMO exhausted {iterations} iterations (violation gap {gap:.3e}, dual objective {dual_objective:.6e})")]
    NoConvergence {
        iterations: usize,
        gap: f64,
        dual_objective: f64,
    },
    #[error("NonFiniteLoss at epoch {epoch} (last finite loss {last_finite:?})")]
    NonFiniteLoss {
        epoch: usize,
        last_finite: Option<f64>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Solver or optimizer failures, as opposed to bad input data.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::NonFiniteLoss { .. })
    }
}
