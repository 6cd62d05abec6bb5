use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate record for patient {patient_id}, timepoint {timepoint}, region {region}")]
    DuplicateRecord {
        line: usize,
        patient_id: String,
        timepoint: String,
        region: String,
    },

    #[error("patient {0} does not have both timepoints")]
    IncompletePatient(String),

    #[error("group {0} has no patients")]
    EmptyGroup(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("k = {k} exceeds node count {d}")]
    KTooLarge { k: usize, d: usize },

    #[error("index {index} out of range for {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("node indices must be sorted and distinct")]
    UnsortedIndices,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid point (lambda = {lambda}, k = {k}): {source}")]
    GridPoint {
        lambda: f64,
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("eigen-solver failed to converge")]
    NoConvergence,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
