//! Task-achievement costs and per-trajectory weights.
//!
//! Each trajectory's episodic cost `c` becomes an optimality likelihood
//! `exp(-β c)`; likelihoods are then self-normalized within a batch so they
//! sum to the batch size. Uniform quality therefore gives all-ones weights.

use serde::{Deserialize, Serialize};

use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum WeightingMode {
    Uniform,
    Exponential,
    /// Keep trajectories whose cost is at most `max_cost`, drop the rest.
    Threshold { max_cost: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightingConfig {
    pub temperature: f64,
    pub mode: WeightingMode,
}

impl Default for WeightingConfig {
    fn default() -> Self {
        Self {
            temperature: 5.0,
            mode: WeightingMode::Exponential,
        }
    }
}

impl WeightingConfig {
    pub fn uniform() -> Self {
        Self {
            mode: WeightingMode::Uniform,
            ..Self::default()
        }
    }

    pub fn exponential(temperature: f64) -> Self {
        Self {
            temperature,
            mode: WeightingMode::Exponential,
        }
    }

    pub fn threshold(max_cost: f64) -> Self {
        Self {
            mode: WeightingMode::Threshold { max_cost },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::config("weighting.temperature", "must be a positive number"));
        }
        if let WeightingMode::Threshold { max_cost } = self.mode {
            if !(max_cost.is_finite() && max_cost >= 0.0) {
                return Err(Error::config("weighting.threshold", "must be a nonnegative number"));
            }
        }
        Ok(())
    }
}

fn check_cost(cost: f64) -> Result<()> {
    if cost.is_finite() && cost >= 0.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("cost must be finite and >= 0, got {cost}")))
    }
}

/// `exp(-β c)`; the normalizing constant is dropped since weights are self-normalized.
pub fn optimality_likelihood(cost: f64, cfg: &WeightingConfig) -> Result<f64> {
    check_cost(cost)?;
    Ok((-cfg.temperature * cost).exp())
}

/// `w_e = E ℓ_e / Σ ℓ`.
pub fn normalize_weights(likelihoods: &[f64]) -> Result<Vec<f64>> {
    if likelihoods.is_empty() {
        return Err(Error::Input("cannot normalize an empty weight list".into()));
    }
    if let Some(l) = likelihoods.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::Input(format!("likelihoods must be finite and >= 0, got {l}")));
    }
    let total: f64 = likelihoods.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let n = likelihoods.len() as f64;
    Ok(likelihoods.iter().map(|l| n * l / total).collect())
}

/// Weights for one batch of episodic costs.
///
/// In threshold mode a batch where every trajectory exceeds the threshold
/// yields all-zero weights (the batch is excluded) rather than an error.
pub fn batch_weights(costs: &[f64], cfg: &WeightingConfig) -> Result<Vec<f64>> {
    for &c in costs {
        check_cost(c)?;
    }
    match cfg.mode {
        WeightingMode::Uniform => Ok(vec![1.0; costs.len()]),
        WeightingMode::Exponential => {
            let l = costs
                .iter()
                .map(|&c| optimality_likelihood(c, cfg))
                .collect::<Result<Vec<_>>>()?;
            normalize_weights(&l)
        }
        WeightingMode::Threshold { max_cost } => {
            let keep: Vec<f64> = costs.iter().map(|&c| if c <= max_cost { 1.0 } else { 0.0 }).collect();
            if keep.iter().all(|&k| k == 0.0) {
                Ok(keep)
            } else {
                normalize_weights(&keep)
            }
        }
    }
}

/// Episodic cost of a complete trajectory, evaluated once at episode end.
pub fn achievement_cost<E: Environment + ?Sized>(traj: &Trajectory, env: &E) -> Result<f64> {
    if traj.horizon() != env.horizon() {
        return Err(Error::Input(format!(
            "incomplete trajectory: {} of {} steps",
            traj.horizon(),
            env.horizon()
        )));
    }
    env.episodic_cost(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn likelihood_examples() {
        let unit = WeightingConfig::exponential(1.0);
        assert_eq!(optimality_likelihood(0.0, &unit).unwrap(), 1.0);
        assert!((optimality_likelihood(std::f64::consts::LN_2, &unit).unwrap() - 0.5).abs() < 1e-15);
        let sharp = WeightingConfig::exponential(2.0);
        assert!((optimality_likelihood(1.0, &sharp).unwrap() - 0.135_335_283_236_612_7).abs() < 1e-15);
        assert!(optimality_likelihood(-0.1, &unit).is_err());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_weights(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(normalize_weights(&[3.0, 1.0]).unwrap(), vec![1.5, 0.5]);
        assert!(normalize_weights(&[]).is_err());
        assert!(matches!(normalize_weights(&[0.0, 0.0]), Err(Error::DegenerateWeights)));
    }

    #[test]
    fn threshold_mode_indicator_then_normalize() {
        let cfg = WeightingConfig::threshold(0.5);
        assert_eq!(batch_weights(&[0.1, 0.9], &cfg).unwrap(), vec![2.0, 0.0]);
        assert_eq!(batch_weights(&[0.6, 0.9], &cfg).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn uniform_costs_give_unit_weights() {
        let w = batch_weights(&[0.3, 0.3], &WeightingConfig::exponential(5.0)).unwrap();
        assert_eq!(w, vec![1.0, 1.0]);
        assert_eq!(batch_weights(&[0.0, 0.9, 0.2], &WeightingConfig::uniform()).unwrap(), vec![1.0; 3]);
    }

    proptest! {
        #[test]
        fn normalization_is_scale_invariant(l in prop::collection::vec(1e-3f64..10.0, 1..12), k in 1e-3f64..1e3) {
            let a = normalize_weights(&l).unwrap();
            let scaled: Vec<f64> = l.iter().map(|v| v * k).collect();
            let b = normalize_weights(&scaled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            let sum: f64 = a.iter().sum();
            prop_assert!((sum - l.len() as f64).abs() < 1e-9);
        }

        #[test]
        fn weights_monotone_in_cost(costs in prop::collection::vec(0.0f64..2.0, 2..10), beta in 0.1f64..10.0) {
            let w = batch_weights(&costs, &WeightingConfig::exponential(beta)).unwrap();
            for i in 0..costs.len() {
                for j in 0..costs.len() {
                    if costs[i] < costs[j] {
                        prop_assert!(w[i] >= w[j]);
                    }
                }
            }
        }

        #[test]
        fn threshold_zero_iff_excluded(costs in prop::collection::vec(0.0f64..1.0, 1..10), theta in 0.0f64..1.0) {
            let w = batch_weights(&costs, &WeightingConfig::threshold(theta)).unwrap();
            for (c, w) in costs.iter().zip(&w) {
                prop_assert_eq!(*w == 0.0, *c > theta);
            }
        }
    }
}
