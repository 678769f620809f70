use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The state space is too large for exhaustive treatment.
    #[error("{what}: {count} exceeds the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        count: u128,
        cap: u128,
    },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid matching: {0}")]
    InvalidMatching(String),

    #[error("invalid problem specification: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Power iteration or a curve scan hit its iteration cap.
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: u64,
    },

    /// A theoretical bound failed on a concrete chain.
    #[error("bound violated: {check} (measured {measured}, bound {bound})")]
    BoundViolated {
        check: String,
        measured: f64,
        bound: f64,
    },
}
