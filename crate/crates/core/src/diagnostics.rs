//! Randomized property sweeps behind `tawdi diagnose`.

use crate::disturbance::update_covariance;
use crate::envs::{GridMDP, TabularPolicy, ENUMERATION_LIMIT};
use crate::error::Result;
use crate::metrics::{pinsker_gap, trajectory_kl};
use crate::policy::{gradient, weighted_bc_loss, PolicyNetwork};
use crate::rng::RngStream;
use crate::trajectory::{Action, EpisodeBatch, State, Trajectory, TrajectoryMeta};

pub const KL_TOLERANCE: f64 = 1e-10;
pub const GRADIENT_TOLERANCE: f64 = 1e-5;
pub const GRADIENT_STEP: f64 = 1e-5;
pub const SIGMA_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepReport {
    pub passed: usize,
    pub total: usize,
    /// Largest deviation observed (meaning depends on the sweep).
    pub worst: f64,
}

impl SweepReport {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

/// Random GridMDP instances: full-trajectory KL equals the per-step form,
/// and the normalized covariate shift respects `T sqrt(KL / 2)`.
/// `worst` is the largest KL identity error.
pub fn kl_bound(instances: usize, seed: u64) -> Result<SweepReport> {
    let root = RngStream::new(seed, 11);
    let mut report = SweepReport {
        passed: 0,
        total: instances,
        worst: 0.0,
    };
    for i in 0..instances {
        let mut rng = root.split(i as u64);
        let n_states = 2 + (rng.unit() * 4.0) as usize;
        let n_actions = 2 + (rng.unit() * 2.0) as usize;
        let mut horizon = 1 + (rng.unit() * 4.0) as usize;
        while horizon > 1 && (n_states as u128) * ((n_states * n_actions) as u128).pow(horizon as u32) > ENUMERATION_LIMIT {
            horizon -= 1;
        }
        let eta = 0.05 + 0.5 * rng.unit();
        let mdp = GridMDP::random(n_states, n_actions, horizon, &mut rng)?;
        let learner = TabularPolicy::random(n_states, n_actions, &mut rng);
        let demo = TabularPolicy::random(n_states, n_actions, &mut rng);
        let kl = trajectory_kl(&mdp, &learner, &demo, eta)?;
        let gap = pinsker_gap(&mdp, &learner, &demo, eta)?;
        let err = (kl.full_trajectory - kl.per_step).abs();
        report.worst = report.worst.max(err);
        if err < KL_TOLERANCE && gap.lhs <= gap.rhs + KL_TOLERANCE {
            report.passed += 1;
        }
    }
    Ok(report)
}

fn random_batch(rng: &mut RngStream, state_dim: usize, action_dim: usize, n_traj: usize, horizon: usize) -> Result<EpisodeBatch> {
    let mut trajs = Vec::with_capacity(n_traj);
    for _ in 0..n_traj {
        let states = (0..=horizon)
            .map(|_| State::new((0..state_dim).map(|_| rng.symmetric_uniform(1.0)).collect()))
            .collect();
        let demo: Vec<Action> = (0..horizon)
            .map(|_| Action::new((0..action_dim).map(|_| rng.symmetric_uniform(1.0)).collect()))
            .collect();
        trajs.push(Trajectory::new(states, demo.clone(), Some(demo), TrajectoryMeta::default())?);
    }
    EpisodeBatch::new(0, trajs)
}

/// Analytic gradients against central differences; `worst` is the largest
/// relative error `‖g − g_fd‖ / max(‖g‖, ‖g_fd‖)`.
pub fn gradient_check(instances: usize, seed: u64) -> Result<SweepReport> {
    let root = RngStream::new(seed, 12);
    let mut report = SweepReport {
        passed: 0,
        total: instances,
        worst: 0.0,
    };
    for i in 0..instances {
        let mut rng = root.split(i as u64);
        let sd = 1 + (rng.unit() * 3.0) as usize;
        let ad = 1 + (rng.unit() * 2.0) as usize;
        let h = 2 + (rng.unit() * 5.0) as usize;
        let net = PolicyNetwork::random(&[sd, h, h, ad], 1.0, &mut rng)?;
        let n_traj = 1 + (rng.unit() * 3.0) as usize;
        let horizon = 1 + (rng.unit() * 4.0) as usize;
        let batch = random_batch(&mut rng, sd, ad, n_traj, horizon)?;
        let weights: Vec<f64> = (0..n_traj).map(|_| 0.1 + rng.unit()).collect();
        let analytic = gradient(&net, &batch, &weights)?.flat();
        let params = net.params();
        let mut probe = net.clone();
        let mut numeric = vec![0.0; params.len()];
        for (j, g) in numeric.iter_mut().enumerate() {
            let mut p = params.clone();
            p[j] = params[j] + GRADIENT_STEP;
            probe.set_params(&p)?;
            let up = weighted_bc_loss(&probe, &batch, &weights)?;
            p[j] = params[j] - GRADIENT_STEP;
            probe.set_params(&p)?;
            let down = weighted_bc_loss(&probe, &batch, &weights)?;
            *g = (up - down) / (2.0 * GRADIENT_STEP);
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let scale = norm(&analytic).max(norm(&numeric));
        let rel = if scale == 0.0 { 0.0 } else { norm(&diff) / scale };
        report.worst = report.worst.max(rel);
        if rel < GRADIENT_TOLERANCE {
            report.passed += 1;
        }
    }
    Ok(report)
}

/// Closed-form covariance update against a direct loop over every
/// (trajectory, step, i, j); `worst` is the largest absolute deviation.
pub fn sigma_oracle(instances: usize, seed: u64) -> Result<SweepReport> {
    let root = RngStream::new(seed, 13);
    let mut report = SweepReport {
        passed: 0,
        total: instances,
        worst: 0.0,
    };
    for i in 0..instances {
        let mut rng = root.split(i as u64);
        let sd = 1 + (rng.unit() * 4.0) as usize;
        let ad = 1 + (rng.unit() * 4.0) as usize;
        let horizon = 1 + (rng.unit() * 20.0) as usize;
        let n_traj = 1 + (rng.unit() * 4.0) as usize;
        let net = PolicyNetwork::random(&[sd, 6, ad], 1.0, &mut rng)?;
        let batch = random_batch(&mut rng, sd, ad, n_traj, horizon)?;
        let weights: Vec<f64> = (0..n_traj).map(|_| rng.unit() * 3.0 + 0.01).collect();
        let model = update_covariance(&batch, &net, &weights)?;
        let mut num = vec![vec![0.0; ad]; ad];
        let mut den = 0.0;
        for (t, &w) in batch.iter().zip(&weights) {
            den += w * t.horizon() as f64;
            let demo = t.demonstrator_actions()?;
            for step in 0..t.horizon() {
                let out = net.forward(&t.states[step])?;
                for a in 0..ad {
                    for b in 0..ad {
                        num[a][b] += w * (out[a] - demo[step][a]) * (out[b] - demo[step][b]);
                    }
                }
            }
        }
        let mut dev: f64 = 0.0;
        for a in 0..ad {
            for b in 0..ad {
                dev = dev.max((model.entry(a, b) - num[a][b] / den).abs());
            }
        }
        report.worst = report.worst.max(dev);
        if dev < SIGMA_TOLERANCE {
            report.passed += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweeps_pass_on_small_counts() {
        assert!(kl_bound(5, 0).unwrap().ok());
        assert!(gradient_check(3, 0).unwrap().ok());
        assert!(sigma_oracle(10, 0).unwrap().ok());
    }
}
