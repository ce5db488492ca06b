use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value failed construction-time or precondition validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// Adaptive quadrature exhausted its subdivision budget before reaching
    /// the requested tolerance. Carries the best estimate and its error bound.
    #[error(
        "quadrature did not converge: estimate {estimate:e}, \
         error bound {error_bound:e} > requested {requested:e}"
    )]
    QuadratureNoConvergence {
        estimate: f64,
        error_bound: f64,
        requested: f64,
    },

    /// The maximum of the objective was attained at an endpoint of the
    /// search bracket; the caller should widen it.
    #[error("maximum attained at bracket endpoint theta = {at}; widen the bracket ({lo}, {hi})")]
    BracketEndpoint { at: f64, lo: f64, hi: f64 },

    /// A Bernoulli factory exceeded its round budget. Both coin probabilities
    /// are likely tiny. `position` is the (current, proposed) pair when the
    /// failure happened inside a chain.
    #[error(
        "factory did not terminate within {max_rounds} rounds \
         ({coin_flips} coin flips) at {position:?}"
    )]
    FactoryNonTermination {
        max_rounds: u64,
        coin_flips: u64,
        position: Option<(f64, f64)>,
    },

    /// The chain evaluated a non-finite log density.
    #[error("non-finite log density at iteration {iteration}, state {state:?}")]
    NonFiniteLogDensity { state: Vec<f64>, iteration: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
