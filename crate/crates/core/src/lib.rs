//! Discrete priors for the Poisson noise model whose posterior median equals a
//! prescribed increasing function.
//!
//! The pipeline is:
//!
//! 1. describe the target estimator `f` ([`estimator::PrescribedEstimator`]) and
//!    check whether the infinite construction can be proper
//!    ([`estimator::check_summability`]);
//! 2. solve the truncated moment-balance system on the support `f(0), …, f(M)`
//!    ([`moment_solver::solve_direct`], cross-checked by
//!    [`moment_solver::solve_recursive`]);
//! 3. exponentially tilt the balanced distribution into the prior
//!    ([`moment_solver::tilt_to_prior`]) and verify the induced posterior
//!    medians ([`posterior`]).
//!
//! [`gamma_baseline`] implements the conjugate gamma prior, whose posterior
//! median is close to, but not exactly, affine.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod gamma_baseline;
pub mod moment_solver;
pub mod numerics;
pub mod posterior;


pub use error::{Error, Result};
pub use estimator::{AdmissibilityReport, PrescribedEstimator};
pub use moment_solver::{DiscretePrior, Method, MomentSolution};
pub use numerics::{BigFloat, ExactRational, PrecisionConfig, Real};
pub use posterior::{PosteriorSummary, TiltedPrior};
pub use gamma_baseline::GammaPrior;
