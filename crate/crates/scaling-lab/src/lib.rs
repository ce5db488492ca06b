//! # scaling-lab
//!
//! Tuning machinery for random-walk MCMC beyond the Metropolis-Hastings
//! acceptance rule. For any acceptance function built from a balancing
//! function (`g(z) = z g(1/z)`), the library computes the asymptotically
//! optimal proposal scaling and acceptance rate, validates the asymptotics by
//! simulation, and provides Bernoulli factories that realize Barker-type
//! accept events when density ratios cannot be evaluated.
//!
//! The pieces:
//!
//! - [`accept`]: the acceptance-function families (`mh`, `lazy`, `barker`,
//!   `genbarker:r`, `bedard:h`, mixtures) with numerically stable log-scale
//!   evaluation.
//! - [`target`]: 1-d component densities (normal, quartic, logistic), their
//!   log-derivatives, and the roughness constant `I = E[(f'/f)^2]`.
//! - [`quad`]: the limiting acceptance-rate integral `M(theta)` by adaptive
//!   Gauss-Kronrod quadrature, closed forms where they exist, and the
//!   odd-moment membership check.
//! - [`optim`]: speed-measure maximization: `theta*`, `l*`, AOARs, the
//!   reference table, and efficiency curves.
//! - [`sampler`]: seeded d-dimensional random-walk chains with acceptance
//!   and autocorrelation diagnostics, plus finite-dimensional tuning.
//! - [`factory`]: two-coin and die-coin Bernoulli factories over factored
//!   densities `pi(x) = c_x p_x`, and a chain driven entirely by them.
//! - [`cli`]: the `scaling-lab` command-line front end.
//!
//! ```
//! use scaling_lab::accept::BalancingFunction;
//! use scaling_lab::optim;
//!
//! let barker = BalancingFunction::barker();
//! let opt = optim::optimize(&barker, optim::DEFAULT_BRACKET, optim::DEFAULT_TOL).unwrap();
//! assert!((opt.aoar - 0.159).abs() < 1e-3);
//! assert!((opt.l_star_sqrt_i - 2.456).abs() < 1e-3);
//! ```

pub mod accept;
pub mod cli;
pub mod error;
pub mod factory;
mod math;
pub mod optim;
pub mod quad;
pub mod sampler;
pub mod target;

pub use error::{Error, Result};
