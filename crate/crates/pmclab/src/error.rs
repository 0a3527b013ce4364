use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible radial structure: {0}")]
    Infeasible(String),

    #[error("boundary increment {increment} outside reachable range [{lo}, {hi}]; a jump structure is required")]
    IncrementOutOfRange { increment: f64, lo: f64, hi: f64 },

    #[error("measure is not non-extremal: estimated ratio {l_hat} >= 1")]
    NotNonExtremal { l_hat: f64 },

    #[error("minimization diverged after {iters} iterations (energy {energy} above 10x initial {initial})")]
    Diverged { iters: usize, energy: f64, initial: f64 },

    #[error("incompatible sampling: {0}")]
    IncompatibleSampling(String),

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
