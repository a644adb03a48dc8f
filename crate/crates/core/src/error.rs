use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("configuration length {found} does not match site count {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid bitstring {0:?}")]
    InvalidBitstring(String),

    #[error("missing reference energy for species {0:?}")]
    MissingReference(String),

    #[error("site count {sites} over enumeration cap of {cap}")]
    OverEnumerationCap { sites: usize, cap: usize },

    #[error("temperature must be positive, got {0} K")]
    NonPositiveTemperature(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular design matrix")]
    SingularDesign,

    #[error("non-positive pair strength {0} eV: no real nearest-neighbour distance")]
    NonPositivePairStrength(f64),

    #[error("pair strength is absent: the dataset does not constrain it")]
    MissingPairStrength,

    #[error("no records")]
    NoRecords,

    #[error("no valid records in sample set")]
    NoValidRecords,

    #[error("distribution does not sum to one (sum = {0})")]
    NotNormalized(f64),

    #[error("support length mismatch: {0} vs {1}")]
    SupportMismatch(usize, usize),

    #[error("lattice must be periodic")]
    NotPeriodic,

    #[error("layout and lattice are inconsistent: {0}")]
    InconsistentLayout(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
