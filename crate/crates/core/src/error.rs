use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {lhs:?} vs {rhs:?}")]
    ShapeMismatch { lhs: (usize, usize), rhs: (usize, usize) },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("prior constraints unsatisfiable after {attempts} rejection draws")]
    UnsatisfiablePrior { attempts: usize },

    #[error("degenerate population: {0}")]
    DegeneratePopulation(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("invalid threshold schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "threshold too tight at level {level} ({stage}): particle {particle} exceeded {attempts} attempts"
    )]
    AttemptCap {
        level: usize,
        stage: &'static str,
        particle: usize,
        attempts: u64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("raw moment {index:?} of the reference set is {value:e}, too close to zero")]
    VanishingMoment { index: Vec<usize>, value: f64 },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
