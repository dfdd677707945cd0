use crate::fock::Statistics;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("Hilbert-space dimension {requested} exceeds the cap of {cap}")]
    DimensionCap { requested: u128, cap: usize },

    #[error("{name} = {value} is outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("matrix of size {n} exceeds the limit of {max} for {what}")]
    SizeLimit {
        what: &'static str,
        n: usize,
        max: usize,
    },

    #[error("states live in different Fock bases")]
    BasisMismatch,

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("amplitude matrix is not symmetric (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("particle number mismatch: expected {expected}, found {found}")]
    ParticleNumber { expected: u32, found: u32 },

    #[error("mode index {mode} out of range for {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("{0:?} statistics not supported by {1}")]
    Unsupported(Statistics, &'static str),

    #[error("invalid occupation vector: {0}")]
    InvalidOccupation(String),

    #[error("invalid bipartition: {0}")]
    InvalidCut(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}
