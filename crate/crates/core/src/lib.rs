//! Imitation learning from diverse-quality demonstrations with
//! task-achievement-weighted disturbance injection.
//!
//! The crate provides one parameterized learner covering behavior cloning,
//! disturbance injection (DART), and their achievement-weighted variants,
//! together with toy environments, scripted demonstrators and diagnostics.

pub mod config;
pub mod demonstrators;
pub mod diagnostics;
pub mod disturbance;
pub mod envs;
pub mod error;
pub mod learner;
pub mod metrics;
pub mod output;
pub mod policy;
pub mod rng;
pub mod trajectory;
pub mod weighting;

pub use error::{Error, Result};
pub use rng::{split_stream, RngStream};
pub use trajectory::{Action, EpisodeBatch, Quality, State, Trajectory, TrajectoryMeta};
