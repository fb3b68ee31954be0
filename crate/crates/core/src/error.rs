use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter `{name}` = {value} is outside its support [{lo}, {hi}]")]
    OutOfRange {
        name: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("csv error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("empty validation set")]
    EmptyValidation,

    #[error("csv schema mismatch: {0}")]
    Schema(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Characteristic length too large for the lamina's fracture energy.
    #[error("layer `{layer}` is not admissible: G_f - U0*L_c = {margin} must be positive")]
    Admissibility { layer: String, margin: f64 },

    #[error("effective stress is singular: d{component} = 1 (mark the point failed instead)")]
    Singularity { component: &'static str },

    #[error("cohesive law is ill-posed: failure separation {delta_f} <= initiation separation {delta_0}")]
    CohesiveParameterization { delta_0: f64, delta_f: f64 },

    #[error("mode mix undefined: all energy release rates are zero")]
    UndefinedModeMix,

    #[error("non-finite value at {point}: {message}")]
    NumericalFailure { point: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("model document: {0}")]
    ModelFormat(String),

    #[error("model format version {found} is not supported (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("config: {0}")]
    Config(String),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let row = err.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            row,
            column: String::from("-"),
            message: err.to_string(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::ModelFormat(err.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(err: toml::de::Error) -> Self {
        Error::Config(err.to_string())
    }
}
