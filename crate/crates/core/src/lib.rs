//! Numerical engine for Cramér-type large-deviation expansions of martingales
//! under Bernstein's moment condition.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: martingale-difference models, path sampling, conditional moments.
//! - [`conditions`]: exact certification of the Bernstein and variance
//!   conditions, and constructive conversions between equivalent conditions.
//! - [`tilting`]: conjugate (exponentially tilted) measures, the cumulant and
//!   drift processes, the tilt-parameter solvers, and exact lemma checks.
//! - [`bounds`]: Gaussian tails and every explicit bound envelope.
//! - [`montecarlo`]: crude and tilted importance-sampling estimators, exact
//!   lattice oracles, CLT-rate curves and the moderate-deviation diagnostic.
//! - [`output`]: CSV and JSON writers shared by the command line and examples.
//! - [`cli`]: the batch front end behind the `mlde` binary.
//!
//! Runnable walkthroughs for each capability live under `examples/`.

// `!(v > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod conditions;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod output;
pub mod rng;
pub mod tilting;

pub use error::{Error, Result};
pub use model::{IncrementDistribution, IncrementRule, MartingaleSpec, ModelConfig, Path};
