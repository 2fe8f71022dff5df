#![allow(dead_code)]

use std::path::PathBuf;

use tawdi::config::ExperimentConfig;
use tawdi::policy::PolicyNetwork;
use tawdi::{Action, EpisodeBatch, RngStream, State, Trajectory, TrajectoryMeta};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn load_config(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_path(config_path(name)).expect("bundled config parses")
}

/// Batch with uniform random states and demonstrator actions in [-1, 1].
pub fn random_batch(rng: &mut RngStream, state_dim: usize, action_dim: usize, n_traj: usize, horizon: usize) -> EpisodeBatch {
    let trajs = (0..n_traj)
        .map(|_| {
            let states = (0..=horizon)
                .map(|_| State::new((0..state_dim).map(|_| rng.symmetric_uniform(1.0)).collect()))
                .collect();
            let demo: Vec<Action> = (0..horizon)
                .map(|_| Action::new((0..action_dim).map(|_| rng.symmetric_uniform(1.0)).collect()))
                .collect();
            Trajectory::new(states, demo.clone(), Some(demo), TrajectoryMeta::default()).unwrap()
        })
        .collect();
    EpisodeBatch::new(0, trajs).unwrap()
}

/// Weighted imitation loss written out directly from the forward pass.
pub fn loss_oracle(net: &PolicyNetwork, batch: &EpisodeBatch, weights: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, &w) in batch.iter().zip(weights) {
        let demo = t.demonstrator_actions.as_ref().unwrap();
        den += w * t.horizon() as f64;
        for (s, a) in t.states.iter().zip(demo) {
            let out = net.forward(s).unwrap();
            num += w * out.as_slice().iter().zip(a.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        }
    }
    num / den
}

/// `Σ w r rᵀ / Σ w T` with `r = π(s) − a^D`, as a dense row-major matrix.
pub fn covariance_oracle(net: &PolicyNetwork, batch: &EpisodeBatch, weights: &[f64]) -> Vec<f64> {
    let d = batch.action_dim();
    let mut num = vec![0.0; d * d];
    let mut den = 0.0;
    for (t, &w) in batch.iter().zip(weights) {
        let demo = t.demonstrator_actions.as_ref().unwrap();
        den += w * t.horizon() as f64;
        for (s, a) in t.states.iter().zip(demo) {
            let out = net.forward(s).unwrap();
            let r: Vec<f64> = out.as_slice().iter().zip(a.as_slice()).map(|(x, y)| x - y).collect();
            for i in 0..d {
                for j in 0..d {
                    num[i * d + j] += w * r[i] * r[j];
                }
            }
        }
    }
    num.iter().map(|x| x / den).collect()
}
