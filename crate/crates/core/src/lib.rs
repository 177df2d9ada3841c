//! Simulation and analytics for the birth-and-assassination process and the
//! rumor scotching process on networks.
//!
//! * [`model`] holds the shared parameter and outcome types.
//! * [`ba`] is an exact event-driven sampler of the birth-and-assassination
//!   process and its conditioned variants.
//! * [`analytics`] evaluates closed forms, the cumulant recursion for integer
//!   moments, the stability criterion and the integral-equation fixed points.
//! * [`rumor`] is a Gillespie simulator of the rumor scotching chain.
//! * [`stats`] turns Monte Carlo output into estimates and test statistics.
//! * [`replicas`] fans independent replicas out over worker threads.

pub mod analytics;
pub mod ba;
pub mod error;
mod fenwick;
pub mod model;
pub mod replicas;
pub mod rumor;
pub mod stats;

pub use error::{Error, Result};
pub use model::{BAOutcome, CensorPolicy, KillingDist, ModelParams, SeedSpec};
