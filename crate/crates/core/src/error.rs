use thiserror::Error;

/// Error type shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("block widths must be positive, got {0}")]
    NonPositiveWidth(String),

    #[error("block widths must sum to 1 exactly, got {0}")]
    WidthSumNotOne(String),

    #[error("value matrix must be symmetric: entry ({i},{j}) = {a} but ({j},{i}) = {b}")]
    AsymmetricValues { i: usize, j: usize, a: f64, b: f64 },

    #[error("block value ({i},{j}) = {value} outside [0,1]")]
    ValueOutOfRange { i: usize, j: usize, value: f64 },

    #[error("value matrix has {rows} rows but {widths} widths")]
    ShapeMismatch { rows: usize, widths: usize },

    #[error("labeling index {index} out of range for {blocks} blocks")]
    InvalidLabeling { index: usize, blocks: usize },

    #[error("labeling length {got} does not match vertex count {expected}")]
    LabelingLength { got: usize, expected: usize },

    #[error("coarse widths are not a coarsening of the graphon's widths")]
    IncompatibleCoarsening,

    #[error("{what} exceeds capacity limit ({limit})")]
    Capacity { what: String, limit: String },

    #[error("graph file: {0}")]
    GraphFormat(String),

    #[error("graphon file: {0}")]
    GraphonFormat(String),

    #[error("{0}")]
    Domain(String),

    #[error("target {t} exceeds the maximal density {t_max}; the tail event is impossible")]
    Infeasible { t: f64, t_max: f64 },

    #[error("no witness found on the epsilon grid: {0}")]
    WitnessNotFound(String),

    #[error("conditioning too weak: only {accepted} acceptances out of {samples} (rate {rate:.3e})")]
    InsufficientConditioning {
        accepted: usize,
        samples: usize,
        rate: f64,
    },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit-code class used by the command-line front end:
    /// capacity errors are distinguished from domain/validation errors.
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }
}
