//! Markov chain Monte Carlo for perfect matchings of a complete bipartite graph
//! under an arbitrary global utility.
//!
//! * [`instance`]: shapes, matchings, utility oracles and the Gibbs measure.
//! * [`sampler`]: the Metropolis chain used as an optimizer.
//! * [`canonical`]: canonical paths between matchings and their congestion.
//! * [`exact`]: dense-matrix diagnostics for small instances.
//! * [`problems`]: scheduling, colouring, knapsack, 3-CNF and table utilities.

pub mod canonical;
pub mod error;
pub mod exact;
pub mod instance;
pub mod problems;
pub mod sampler;

pub use error::{Error, Result};
pub use instance::{
    enumerate_matchings, gibbs_distribution, FnUtility, GibbsParams, Instance, Matching, Shape,
    UtilityBounds, UtilityOracle,
};
