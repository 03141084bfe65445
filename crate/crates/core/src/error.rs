use thiserror::Error;

use crate::gcce::LevelPair;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("separation vector has zero length")]
    ZeroDistance,

    #[error("bath generation infeasible: placed {placed} of {target} sites after {proposals} proposals")]
    Infeasible {
        placed: usize,
        target: usize,
        proposals: usize,
    },

    #[error("cluster of {size} spins exceeds the capacity of {max}")]
    Capacity { size: usize, max: usize },

    #[error("cannot label electron eigenstates: {0}")]
    Labeling(String),

    #[error("projected nuclear Hamiltonians are only defined for the exchange-only model")]
    UnsupportedRegime,

    #[error("initial state has a vanishing element for level pair {0}; coherence is undefined")]
    UndefinedNormalization(LevelPair),

    #[error("no decay within the fit window (minimum value {min:.4})")]
    NoDecay { min: f64 },

    #[error("fit failed from every start: {0}")]
    FitFailure(String),

    #[error("{excluded} of {total} configurations failed convergence checks")]
    TooManyExclusions { excluded: usize, total: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by malformed input rather than by the physics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Parse(_) | Error::InvalidParameter(_))
    }
}
