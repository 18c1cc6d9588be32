use std::fmt;

use thiserror::Error;

/// Which linear stage of a coupled sweep failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Psi,
    Heat,
    Lift,
    Linearized,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Psi => "psi-stage",
            Stage::Heat => "H-stage",
            Stage::Lift => "lift-stage",
            Stage::Linearized => "linearized-stage",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    LinearNonConvergence { iterations: usize, residual: f64 },

    #[error("{stage}: {source}")]
    StageFailure {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("fixed-point iteration did not converge in {iterations} iterations")]
    FixedPointNonConvergence {
        iterations: usize,
        ratio_history: Vec<f64>,
    },

    #[error("eigenvalue iteration stagnated after {iterations} iterations (last estimate {estimate})")]
    EigenNonConvergence { iterations: usize, estimate: f64 },

    #[error("no decaying solution found in [{lo}, {hi}] ({} candidate brackets rejected)", scanned.len())]
    NoSolutionFound {
        lo: f64,
        hi: f64,
        /// Scanned sub-brackets as (lo, hi, f'(t_max; lo), f'(t_max; hi)).
        scanned: Vec<(f64, f64, f64, f64)>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Error {
        Error::StageFailure {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
