//! Exact divergences and covariate shift on enumerable MDPs.
//!
//! Actions are embedded as their integer index, so the per-step imitation
//! loss between a learner and a demonstrator at state `s` is
//! `Σ_a Σ_a' π_R(a|s) π_D(a'|s) (a - a')²`, bounded by `(|A| - 1)²`.

use std::collections::BTreeMap;

use crate::envs::{enumerate_trajectory_distribution, GridMDP, GridTrajectory, TabularPolicy};
use crate::error::{Error, Result};
use crate::metrics::stats::{mean, sample_variance};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlReport {
    /// `Σ_τ p_R(τ) log(p_R(τ) / p_D(τ))` over the enumerated support.
    pub full_trajectory: f64,
    /// `E_{p_R} Σ_t log(π_R(a_t|s_t) / π_D(a_t|s_t))`, computed by forward
    /// propagation of state marginals without enumerating trajectories.
    pub per_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinskerGap {
    /// Exact covariate shift of the normalized loss.
    pub lhs: f64,
    /// `T sqrt(KL / 2)`.
    pub rhs: f64,
    pub kl: f64,
}

fn expected_step_loss(learner: &TabularPolicy, demo: &TabularPolicy, s: usize) -> f64 {
    let n = learner.n_actions();
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            let d = a as f64 - b as f64;
            acc += learner.prob(s, a) * demo.prob(s, b) * d * d;
        }
    }
    acc
}

fn max_step_loss(n_actions: usize) -> f64 {
    let m = n_actions.saturating_sub(1) as f64;
    (m * m).max(1.0)
}

/// Imitation loss of `learner` against `demo` along the states of `traj`.
pub fn trajectory_loss(traj: &GridTrajectory, learner: &TabularPolicy, demo: &TabularPolicy) -> f64 {
    traj.states[..traj.actions.len()]
        .iter()
        .map(|&s| expected_step_loss(learner, demo, s))
        .sum()
}

/// Loss rescaled into `[0, 1]` by `T · max-per-step-loss`.
pub fn normalized_trajectory_loss(traj: &GridTrajectory, learner: &TabularPolicy, demo: &TabularPolicy) -> f64 {
    trajectory_loss(traj, learner, demo) / (traj.actions.len() as f64 * max_step_loss(learner.n_actions()))
}

fn expectation(dist: &BTreeMap<GridTrajectory, f64>, f: impl Fn(&GridTrajectory) -> f64) -> f64 {
    dist.iter().map(|(t, p)| p * f(t)).sum()
}

fn check_policies(mdp: &GridMDP, a: &TabularPolicy, b: &TabularPolicy) -> Result<()> {
    a.check_compatible(mdp)?;
    b.check_compatible(mdp)
}

/// `KL(p(τ | π_R) || p(τ | π_D smoothed by η))`, computed twice: over whole
/// trajectories and as the per-step policy log-ratio where the dynamics cancel.
pub fn trajectory_kl(mdp: &GridMDP, learner: &TabularPolicy, demo: &TabularPolicy, eta: f64) -> Result<KlReport> {
    check_policies(mdp, learner, demo)?;
    let disturbed = demo.smoothed(eta)?;
    let p = enumerate_trajectory_distribution(mdp, learner)?;
    let q = enumerate_trajectory_distribution(mdp, &disturbed)?;
    let mut full = 0.0;
    for (traj, &pr) in &p {
        match q.get(traj) {
            Some(&qd) if qd > 0.0 => full += pr * (pr / qd).ln(),
            _ => {
                return Err(Error::InfiniteDivergence(format!(
                    "trajectory {:?}/{:?} has no mass under the disturbed demonstrator",
                    traj.states, traj.actions
                )))
            }
        }
    }
    let per_step = per_step_kl(mdp, learner, &disturbed)?;
    Ok(KlReport {
        full_trajectory: full,
        per_step,
    })
}

fn per_step_kl(mdp: &GridMDP, learner: &TabularPolicy, disturbed: &TabularPolicy) -> Result<f64> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut marginal = mdp.initial().to_vec();
    let mut total = 0.0;
    for _ in 0..mdp.horizon() {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            if marginal[s] == 0.0 {
                continue;
            }
            for a in 0..na {
                let pr = learner.prob(s, a);
                if pr == 0.0 {
                    continue;
                }
                let qd = disturbed.prob(s, a);
                if qd == 0.0 {
                    return Err(Error::InfiniteDivergence(format!(
                        "action {a} in state {s} has no mass under the disturbed demonstrator"
                    )));
                }
                total += marginal[s] * pr * (pr / qd).ln();
                for (n, m) in next.iter_mut().enumerate() {
                    *m += marginal[s] * pr * mdp.transition(s, a, n);
                }
            }
        }
        marginal = next;
    }
    Ok(total)
}

/// Exact covariate-shift gap of the normalized loss between the disturbed
/// demonstrator and the learner, with its Pinsker-type bound.
pub fn pinsker_gap(mdp: &GridMDP, learner: &TabularPolicy, demo: &TabularPolicy, eta: f64) -> Result<PinskerGap> {
    check_policies(mdp, learner, demo)?;
    let kl = trajectory_kl(mdp, learner, demo, eta)?.full_trajectory.max(0.0);
    let disturbed = demo.smoothed(eta)?;
    let loss = |t: &GridTrajectory| normalized_trajectory_loss(t, learner, demo);
    let under_demo = expectation(&enumerate_trajectory_distribution(mdp, &disturbed)?, loss);
    let under_learner = expectation(&enumerate_trajectory_distribution(mdp, learner)?, loss);
    Ok(PinskerGap {
        lhs: (under_demo - under_learner).abs(),
        rhs: mdp.horizon() as f64 * (0.5 * kl).sqrt(),
        kl,
    })
}

/// `|E_{p(τ|π_D)} J − E_{p(τ|π_R)} J|` by enumeration.
pub fn covariate_shift_exact(mdp: &GridMDP, learner: &TabularPolicy, demo: &TabularPolicy) -> Result<f64> {
    check_policies(mdp, learner, demo)?;
    let loss = |t: &GridTrajectory| trajectory_loss(t, learner, demo);
    let under_demo = expectation(&enumerate_trajectory_distribution(mdp, demo)?, loss);
    let under_learner = expectation(&enumerate_trajectory_distribution(mdp, learner)?, loss);
    Ok((under_demo - under_learner).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftEstimate {
    pub value: f64,
    /// Standard error of the difference of the two Monte Carlo means.
    pub std_error: f64,
}

pub(crate) fn difference_of_means(under_demo: &[f64], under_learner: &[f64]) -> ShiftEstimate {
    let var = |xs: &[f64]| if xs.len() > 1 { sample_variance(xs) / xs.len() as f64 } else { 0.0 };
    ShiftEstimate {
        value: (mean(under_demo) - mean(under_learner)).abs(),
        std_error: (var(under_demo) + var(under_learner)).sqrt(),
    }
}

/// Monte Carlo counterpart of [`covariate_shift_exact`].
pub fn covariate_shift_tabular(
    mdp: &GridMDP,
    learner: &TabularPolicy,
    demo: &TabularPolicy,
    n_rollouts: usize,
    rng: &RngStream,
) -> Result<ShiftEstimate> {
    check_policies(mdp, learner, demo)?;
    if n_rollouts == 0 {
        return Err(Error::Input("need at least one rollout".into()));
    }
    let mut demo_rng = rng.split(0);
    let mut learner_rng = rng.split(1);
    let under_demo: Vec<f64> = (0..n_rollouts)
        .map(|_| trajectory_loss(&mdp.sample(demo, &mut demo_rng), learner, demo))
        .collect();
    let under_learner: Vec<f64> = (0..n_rollouts)
        .map(|_| trajectory_loss(&mdp.sample(learner, &mut learner_rng), learner, demo))
        .collect();
    Ok(difference_of_means(&under_demo, &under_learner))
}
