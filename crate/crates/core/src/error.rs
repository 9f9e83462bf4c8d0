use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // model construction
    #[error("liability matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("system must contain at least the sink node")]
    EmptySystem,
    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("negative liability L[{row}][{col}] = {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("nonzero self-liability on diagonal at node {index}")]
    NonzeroDiagonal { index: usize },
    #[error("sink row must be zero, found L[sink][{col}] = {value}")]
    NonzeroSinkRow { col: usize, value: f64 },
    #[error("negative {what} at node {index}: {value}")]
    NegativeAssets {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("pre-shock assets of the sink must be positive, got {0}")]
    NonPositiveSinkAssets(f64),
    #[error("{what} at index {index} is {value}, outside {range}")]
    InvalidRate {
        what: &'static str,
        index: usize,
        value: f64,
        range: &'static str,
    },

    // solvers
    #[error("linear system is numerically singular (pivot {pivot:e})")]
    SingularSystem { pivot: f64 },
    #[error("default set still changing after {iterations} outer iterations")]
    NoConvergence { iterations: usize },
    #[error(
        "clearing-map iteration did not converge after {iterations} steps (last step {step:e})"
    )]
    OracleNoConvergence { iterations: usize, step: f64 },
    #[error("division by zero: o + Cl vanishes for bank {index}")]
    DivisionByZero { index: usize },

    // spectral
    #[error("test vector must be nonzero")]
    ZeroVector,
    #[error("test vector has a negative entry at index {index}")]
    NegativeTestVector { index: usize },
    #[error("matrix has a negative entry at ({row}, {col})")]
    NegativeMatrix { row: usize, col: usize },
    #[error("power iteration stalled after {iterations} iterations (bracket width {width:e})")]
    PowerIterationStall { iterations: usize, width: f64 },
    #[error("attenuation {rate} times spectral radius {radius} is not below 1")]
    SpectralCondition { rate: f64, radius: f64 },

    // shocks
    #[error("bank {bank} has claims (Cl) = {claims} not below its liabilities {liabilities}")]
    PreconditionViolated {
        bank: usize,
        claims: f64,
        liabilities: f64,
    },
    #[error("interpolation m at index {index} is {value}, must lie in (0, 1)")]
    InvalidInterpolation { index: usize, value: f64 },
    #[error("no k <= {max_steps} defaults every node; banks still solvent: {solvent:?}")]
    SearchExhausted {
        max_steps: usize,
        solvent: Vec<usize>,
    },
    #[error("clearing vector departs from the self-consistent candidate by {gap:e}")]
    SelfConsistencyFailed { gap: f64 },
    #[error("banks left solvent after clearing: {solvent:?}")]
    NotAllDefaulted { solvent: Vec<usize> },

    // equivalence
    #[error("bank {bank} has {creditors} creditors, exactly one required")]
    NotSingleCreditor { bank: usize, creditors: usize },

    // io
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for inputs that fail the shock-construction preconditions.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::PreconditionViolated { .. } | Error::InvalidInterpolation { .. }
        )
    }
}
