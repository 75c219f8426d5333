//! Converse bounds for distributed estimation over noisy channels.
//!
//! A parameter `W` is observed through samples `X^n`, compressed to `b` bits,
//! sent as `T` uses of a discrete memoryless channel and estimated at a remote
//! node. The crate computes lower bounds on the achievable Bayes and minimax
//! risk from small-ball probabilities and strong data processing constants,
//! and simulates concrete protocols to check the bounds empirically.

pub mod bounds;
pub mod channel;
pub mod contraction;
pub mod error;
pub mod info;
pub mod models;
pub(crate) mod numeric;
pub mod simulator;

pub use channel::FiniteChannel;
pub use error::{Error, Result};
pub use info::{FiniteDistribution, JointDistribution};
