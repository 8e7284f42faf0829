use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("inconsistent presentation: {0}")]
    Presentation(String),

    /// The (V, Gamma) pair fails the nodewise commutation requirement.
    #[error("potential does not commute with the topological factor (max commutator norm {0:.3e})")]
    Inadmissible(f64),

    #[error("linear solver stalled: residual {residual:.3e} after {iters} iterations (tolerance {tol:.1e})")]
    SolverStalled {
        residual: f64,
        iters: usize,
        tol: f64,
    },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("not enough field samples to decide the commutant")]
    TooFewSamples,

    #[error("degenerate density: total probability mass is zero")]
    DegenerateDensity,

    #[error("starting point outside the fundamental domain: {0}")]
    InvalidStart(String),

    #[error("too many dropped trajectories: {dropped} of {total} (budget {budget_percent}%)")]
    ExcessiveDrops {
        dropped: usize,
        total: usize,
        budget_percent: f64,
    },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
