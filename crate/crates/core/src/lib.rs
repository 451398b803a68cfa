//! Joint transmit-covariance and fluid-antenna port optimization for
//! energy-efficient near-field links.
//!
//! * [`geometry`]: element/port coordinates, [`Scenario`] and [`PortSelection`].
//! * [`channel`]: path sampling, field-response matrices, `H = Bᴴ O A`.
//! * [`metrics`]: Jensen rate bound, Monte-Carlo ergodic rate, energy efficiency.
//! * [`txopt`]: Dinkelbach power control with the rank-one inner solver.
//! * [`portopt`]: determinant-lemma coordinate ascent and exhaustive search.
//! * [`harness`]: alternating optimization, baselines, experiments and CSV output.

pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod portopt;
pub mod rng;
pub mod txopt;

pub use error::{Error, Result};
pub use geometry::{PortSelection, Scenario};
pub use metrics::Covariance;
