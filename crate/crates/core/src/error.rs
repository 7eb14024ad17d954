use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("contraction ratio {which} = {value} is not in (0, 1)")]
    NotContractive { which: &'static str, value: f64 },
    #[error("alpha = {alpha} must be strictly smaller than beta = {beta}")]
    OrderViolation { alpha: f64, beta: f64 },
    #[error("translation of map {map} leaves the unit square")]
    TranslationOutOfBox { map: usize },
    #[error("open rectangles of maps {0} and {1} overlap")]
    RectangleOverlap(usize, usize),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("index {index} out of range for an alphabet of size {m}")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("empty word")]
    EmptyWord,
    #[error("operands belong to different number fields")]
    FieldMismatch,
    #[error("invalid minimal polynomial: {0}")]
    InvalidMinpoly(String),
    #[error("root isolation failed: {0}")]
    RootIsolation(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("could not reach {bits} bits of precision")]
    PrecisionUnreachable { bits: u32 },
    #[error("budget exceeded: {what} needs {needed}, limit {limit}")]
    BudgetExceeded { what: String, needed: u128, limit: u128 },
    #[error("bin count must be positive")]
    ZeroBins,
    #[error("moment order q = {0} must be positive")]
    NonpositiveQ(f64),
    #[error("need at least {needed} depths, got {got}")]
    TooFewDepths { needed: usize, got: usize },
    #[error("degenerate regression: {0}")]
    DegenerateFit(String),
    #[error("no q values in the tail window [{lo}, {hi}]")]
    InsufficientTail { lo: f64, hi: f64 },
    #[error("insufficient scales: {0}")]
    InsufficientScales(String),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("conflicting evidence: {0}")]
    ConflictingEvidence(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
