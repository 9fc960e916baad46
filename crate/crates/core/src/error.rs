use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected length {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("non-finite value at row {row}, column `{column}`")]
    NonFinite { row: usize, column: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("column `{0}` is constant (zero standard deviation)")]
    DegenerateColumn(String),

    #[error("input `{0}` has zero variance")]
    DegenerateVariance(String),

    #[error("insufficient sample: need at least {needed} observations, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("conditioning correlation has magnitude 1; partial correlation undefined")]
    DegenerateConditioning,

    #[error("correlations ({r_zy}, {r_za}, {r_ya}) are mutually inconsistent")]
    InconsistentCorrelations { r_zy: f64, r_za: f64, r_ya: f64 },

    #[error("singular system: columns {columns:?} are collinear with the rest of the design")]
    SingularSystem { columns: Vec<String> },

    #[error("weak or absent instrument: |corr(z, a)| = {corr:e}")]
    WeakInstrument { corr: f64 },

    #[error("positivity violation: no observation with treatment {treatment} at confounder level {level}")]
    PositivityViolation { treatment: u8, level: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("replicate {replicate} (seed {seed:#018x}) failed: {source}")]
    Replicate {
        replicate: usize,
        seed: u64,
        source: Box<Error>,
    },
}
