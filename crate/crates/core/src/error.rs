use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite feature value")]
    NonFinite,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("ensemble for identity {0} is empty")]
    EmptyEnsemble(String),

    #[error("tail has {found} samples, at least {required} required")]
    InsufficientTail { found: usize, required: usize },

    #[error("degenerate tail: samples have no spread")]
    DegenerateTail,

    #[error("invalid tail sample {0}: must be positive and finite")]
    InvalidTailSample(f64),

    #[error("no other ensembles to draw negatives from (excluding {0})")]
    EmptyNegativePool(String),

    #[error("diversity needs at least two classifiers")]
    NotApplicable,

    #[error("unknown identity {0}")]
    UnknownIdentity(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Data-side failures (malformed or incomplete inputs) as opposed to
    /// configuration or runtime problems.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Data(_) | Error::DimensionMismatch { .. } | Error::NonFinite
        )
    }
}
