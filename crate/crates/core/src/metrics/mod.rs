//! Covariate shift, exact trajectory divergences and significance tests.

mod kl;
mod shift;
mod stats;

pub use kl::{
    covariate_shift_exact, covariate_shift_tabular, normalized_trajectory_loss, pinsker_gap, trajectory_kl,
    trajectory_loss, KlReport, PinskerGap, ShiftEstimate,
};
pub use shift::covariate_shift_estimate;
pub use stats::{mean, median, sample_std, sample_variance, welch_t_test, WelchResult};
