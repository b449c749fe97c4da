use std::io;

use crate::mobility::LinkClass;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid road map: {0}")]
    InvalidMap(String),

    #[error("position ({x:.3}, {y:.3}) is not on any lane centerline")]
    OffRoad { x: f64, y: f64 },

    #[error("path history covers {available_m:.3} m but {required_m:.3} m are needed")]
    InsufficientHistory { available_m: f64, required_m: f64 },

    #[error("{0:?} path loss is singular for these positions")]
    Singularity(LinkClass),

    #[error("{requested} packets exceed the capacity cap of {cap}")]
    PowerBudget { requested: u32, cap: u32 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("similarity row {0} sums to zero")]
    ZeroRowSum(usize),

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("transition row for state {state}, action {action} sums to {sum}")]
    NonStochastic { state: usize, action: usize, sum: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite gradient in tensor `{0}`")]
    NonFiniteGradient(&'static str),

    #[error("replay memory holds {have} experiences, {need} requested")]
    UnderfilledMemory { have: usize, need: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("a checkpoint is required for the proposed policy")]
    MissingCheckpoint,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}
