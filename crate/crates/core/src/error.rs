use std::io;

use thiserror::Error;

use crate::config::ValidationError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),

    #[error("power split exponent must be strictly negative, got beta = {0}")]
    NonNegativeBeta(f64),

    #[error("grid dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("pilot positions {0:?} do not form a uniform comb dividing the target length {1}")]
    NonUniformComb(Vec<usize>, usize),

    #[error("spline interpolation needs at least two strictly increasing pilots, got {0:?}")]
    TooFewPilots(Vec<usize>),

    #[error("pilot symbol at block position ({0}, {1}) is zero")]
    ZeroPilot(usize, usize),

    #[error("pilot pattern does not fit a {0}x{1} block")]
    PilotPatternOutOfBlock(usize, usize),

    #[error("could not place {users} user blocks without overlap after {attempts} attempts")]
    PlacementFailed { users: usize, attempts: usize },

    #[error("sensing pulse coordinates are duplicated or out of grid: ({0}, {1})")]
    InvalidPulse(usize, usize),

    #[error("cannot select {requested} peaks, only {available} bins remain unmasked")]
    TooManyPeaks { requested: usize, available: usize },

    #[error("{estimates} estimates cannot be associated with {truths} ground-truth users")]
    UnmatchedEstimates { estimates: usize, truths: usize },

    #[error("noise power must be non-negative, got {0}")]
    NegativeNoise(f64),

    #[error("invalid grid dump: {0}")]
    InvalidDump(String),

    #[error("invalid case {0:?}, expected <M>x<N>")]
    InvalidCase(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
