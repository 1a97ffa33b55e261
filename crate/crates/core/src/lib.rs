//! Uplink capacity simulation and rotation optimization for base stations
//! that combine three fixed sector arrays with rotatable surfaces mounted on
//! a circular track.
//!
//! The pipeline is: [`scenario`] loads a configuration and samples a batch
//! of user realizations ([`population`]); [`channel`] builds per-user
//! channel vectors from [`geometry`]; [`capacity`] evaluates the sum-rate
//! log-det; [`optimizer`] picks the surface positions with an adaptive
//! Markov chain, exhaustive search or the heuristic schemes.

// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod optimizer;
pub mod population;
pub mod rng;
pub mod scenario;

pub use capacity::{average_capacity, instantaneous_capacity, CapacityEstimate, RfConfig, SlotObjective};
pub use channel::{ArrayShape, ChannelMatrix, ChannelVector, GainPattern};
pub use error::{Error, Result};
pub use geometry::{BsGeometry, RotationGrid, UserAngles};
pub use optimizer::{AmcmcParams, IndicatorVector};
pub use population::{RealizationBatch, UserRealization};
pub use scenario::{Experiment, Method, RunReport, ScenarioConfig};
