use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular state: radius {radius:e} is below the singularity threshold")]
    SingularState { radius: f64 },

    #[error("singular state at index {index}: radius {radius:e} is below the singularity threshold")]
    SingularAt { index: usize, radius: f64 },

    #[error("non-integer step count: (t_end - t_start)/h = {ratio}")]
    NonIntegerStepCount { ratio: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("abscissa must be nonzero")]
    ZeroAbscissa,

    #[error("inconsistent tableau: c2 = {c2} differs from a21 = {a21}")]
    InconsistentTableau { c2: String, a21: String },

    #[error("rational arithmetic overflow")]
    RationalOverflow,

    #[error("cannot parse {0:?} as a rational number")]
    ParseRational(String),

    #[error("value {0} is out of range for a 64-bit fraction")]
    OutOfRange(f64),

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("unknown config key {0:?}")]
    UnknownConfigKey(String),

    #[error("invalid value {value:?} for config key {key:?}: {reason}")]
    InvalidConfigValue {
        key: String,
        value: String,
        reason: String,
    },

    #[error("malformed dataset: {0}")]
    MalformedDataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Attaches a row/step index to a singularity error.
    pub fn at(self, index: usize) -> Self {
        match self {
            Error::SingularState { radius } => Error::SingularAt { index, radius },
            other => other,
        }
    }
}
