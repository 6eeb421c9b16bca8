//! Optimal transfer schemes for an agent who chooses how precisely to observe a
//! state before reporting it.
//!
//! The crate is organised bottom-up: [`densities`] and [`elasticity`] describe
//! the signal noise, [`agent`] solves the agent's precision and reporting
//! problem, [`solver`] finds the principal's optimal cutoff, and [`oracle`]
//! hosts constructive checks (transfer improvement, brute-force search and
//! counterexamples).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod densities;
pub mod elasticity;
pub mod error;
pub mod numeric;
pub mod oracle;
pub mod solver;

pub use agent::{AgentResponse, CostFunction, PrecisionMap, ResponseSettings, Transfer};
pub use densities::{Family, SignalDensity};
pub use elasticity::ElasticityProfile;
pub use error::{Error, Result};
pub use solver::{Region, SolveResult, SolverSettings};
