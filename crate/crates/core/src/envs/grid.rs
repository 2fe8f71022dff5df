//! Small finite MDPs whose full trajectory distribution can be enumerated.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const ENUMERATION_LIMIT: u128 = 10_000;
const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GridMDP {
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    /// `P(s' | s, a)` at index `(s * n_actions + a) * n_states + s'`.
    transitions: Vec<f64>,
    initial: Vec<f64>,
}

fn check_distribution(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Input(format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > ROW_TOL {
        return Err(Error::Input(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

fn random_simplex(n: usize, rng: &mut RngStream) -> Vec<f64> {
    // Exponential spacings give a uniform draw on the simplex.
    let mut v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.unit()).ln()).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

impl GridMDP {
    pub fn new(n_states: usize, n_actions: usize, horizon: usize, transitions: Vec<f64>, initial: Vec<f64>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || horizon == 0 {
            return Err(Error::Input("grid MDP sizes must be positive".into()));
        }
        if transitions.len() != n_states * n_actions * n_states {
            return Err(Error::dim("transition tensor", n_states * n_actions * n_states, transitions.len()));
        }
        if initial.len() != n_states {
            return Err(Error::dim("initial distribution", n_states, initial.len()));
        }
        check_distribution(&initial, "initial distribution")?;
        for (i, row) in transitions.chunks_exact(n_states).enumerate() {
            check_distribution(row, &format!("transition row (s={}, a={})", i / n_actions, i % n_actions))?;
        }
        Ok(Self {
            n_states,
            n_actions,
            horizon,
            transitions,
            initial,
        })
    }

    pub fn random(n_states: usize, n_actions: usize, horizon: usize, rng: &mut RngStream) -> Result<Self> {
        let mut transitions = Vec::with_capacity(n_states * n_actions * n_states);
        for _ in 0..n_states * n_actions {
            transitions.extend(random_simplex(n_states, rng));
        }
        let initial = random_simplex(n_states, rng);
        Self::new(n_states, n_actions, horizon, transitions, initial)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transitions[(s * self.n_actions + a) * self.n_states + next]
    }

    /// Number of `(s_1, a_1, s_2, ..., a_T, s_{T+1})` sequences.
    pub fn trajectory_count(&self) -> u128 {
        let branch = (self.n_actions * self.n_states) as u128;
        (0..self.horizon).fold(self.n_states as u128, |acc, _| acc.saturating_mul(branch))
    }

    pub fn sample(&self, policy: &TabularPolicy, rng: &mut RngStream) -> GridTrajectory {
        let draw = |probs: &mut dyn Iterator<Item = f64>, rng: &mut RngStream| -> usize {
            let u = rng.unit();
            let mut acc = 0.0;
            let mut last = 0;
            for (i, p) in probs.enumerate() {
                if p > 0.0 {
                    last = i;
                }
                acc += p;
                if u < acc {
                    return i;
                }
            }
            last
        };
        let mut states = vec![draw(&mut self.initial.iter().copied(), rng)];
        let mut actions = Vec::with_capacity(self.horizon);
        for _ in 0..self.horizon {
            let s = *states.last().unwrap();
            let a = draw(&mut (0..self.n_actions).map(|a| policy.prob(s, a)), rng);
            let next = draw(&mut (0..self.n_states).map(|n| self.transition(s, a, n)), rng);
            actions.push(a);
            states.push(next);
        }
        GridTrajectory { states, actions }
    }
}

/// Stochastic tabular policy `π(a | s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions {
            return Err(Error::dim("policy table", n_states * n_actions, probs.len()));
        }
        for (s, row) in probs.chunks_exact(n_actions).enumerate() {
            check_distribution(row, &format!("policy row s={s}"))?;
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    /// Always picks `choice[s]`.
    pub fn deterministic(n_actions: usize, choice: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; choice.len() * n_actions];
        for (s, &a) in choice.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::Input(format!("action {a} out of range")));
            }
            probs[s * n_actions + a] = 1.0;
        }
        Self::new(choice.len(), n_actions, probs)
    }

    pub fn random(n_states: usize, n_actions: usize, rng: &mut RngStream) -> Self {
        let mut probs = Vec::with_capacity(n_states * n_actions);
        for _ in 0..n_states {
            probs.extend(random_simplex(n_actions, rng));
        }
        Self {
            n_states,
            n_actions,
            probs,
        }
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Categorical analogue of Gaussian action noise: `(1 - η) π + η · uniform`.
    pub fn smoothed(&self, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Input(format!("smoothing must lie in [0, 1], got {eta}")));
        }
        let u = 1.0 / self.n_actions as f64;
        Ok(Self {
            n_states: self.n_states,
            n_actions: self.n_actions,
            probs: self.probs.iter().map(|p| (1.0 - eta) * p + eta * u).collect(),
        })
    }

    pub(crate) fn check_compatible(&self, mdp: &GridMDP) -> Result<()> {
        if self.n_states != mdp.n_states {
            return Err(Error::dim("policy states", mdp.n_states, self.n_states));
        }
        if self.n_actions != mdp.n_actions {
            return Err(Error::dim("policy actions", mdp.n_actions, self.n_actions));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridTrajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

/// Every trajectory with positive probability under `p(s_1) Π π(a_t|s_t) P(s_{t+1}|s_t,a_t)`.
pub fn enumerate_trajectory_distribution(mdp: &GridMDP, policy: &TabularPolicy) -> Result<BTreeMap<GridTrajectory, f64>> {
    enumerate_with_limit(mdp, policy, ENUMERATION_LIMIT)
}

pub fn enumerate_with_limit(mdp: &GridMDP, policy: &TabularPolicy, limit: u128) -> Result<BTreeMap<GridTrajectory, f64>> {
    policy.check_compatible(mdp)?;
    let required = mdp.trajectory_count();
    if required > limit {
        return Err(Error::Capacity { required, limit });
    }
    let mut out = BTreeMap::new();
    let mut states = Vec::with_capacity(mdp.horizon + 1);
    let mut actions = Vec::with_capacity(mdp.horizon);
    for s0 in 0..mdp.n_states {
        let p0 = mdp.initial[s0];
        if p0 > 0.0 {
            states.push(s0);
            extend(mdp, policy, p0, &mut states, &mut actions, &mut out);
            states.pop();
        }
    }
    Ok(out)
}

fn extend(
    mdp: &GridMDP,
    policy: &TabularPolicy,
    prob: f64,
    states: &mut Vec<usize>,
    actions: &mut Vec<usize>,
    out: &mut BTreeMap<GridTrajectory, f64>,
) {
    if actions.len() == mdp.horizon {
        out.insert(
            GridTrajectory {
                states: states.clone(),
                actions: actions.clone(),
            },
            prob,
        );
        return;
    }
    let s = *states.last().unwrap();
    for a in 0..mdp.n_actions {
        let pa = policy.prob(s, a);
        if pa == 0.0 {
            continue;
        }
        for next in 0..mdp.n_states {
            let pn = mdp.transition(s, a, next);
            if pn == 0.0 {
                continue;
            }
            actions.push(a);
            states.push(next);
            extend(mdp, policy, prob * pa * pn, states, actions, out);
            states.pop();
            actions.pop();
        }
    }
}
