use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {value} for feature `{feature}`")]
    NonFinite { feature: String, value: String },

    #[error("unknown category `{value}` for feature `{feature}`")]
    UnknownCategory { feature: String, value: String },

    #[error("missing value for feature `{0}`")]
    MissingValue(String),

    #[error("value for feature `{feature}` has the wrong kind: expected {expected}")]
    WrongKind { feature: String, expected: &'static str },

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("model has not been trained")]
    Untrained,

    #[error("empty dataset")]
    EmptyData,

    #[error("both classes must be present: {0}")]
    SingleClass(String),

    #[error("schema fingerprint mismatch: model was built for {model}, data schema is {data}")]
    SchemaMismatch { model: String, data: String },

    #[error("no provenance text for raw bit {0}")]
    ProvenanceGap(usize),

    #[error("cohort target unreachable: wanted positive fraction {target}, achieved {achieved} after {draws} draws")]
    UnreachableFraction {
        target: f64,
        achieved: f64,
        draws: usize,
    },

    #[error("invalid label `{0}` (expected 0 or 1)")]
    InvalidLabel(String),

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn at_record(self, index: usize) -> Self {
        Error::Record {
            index,
            source: Box::new(self),
        }
    }
}
