//! Experiment configuration files.
//!
//! ```toml
//! [environment]
//! kind = "excavate1d"
//!
//! [schedule]
//! iterations = 10
//! episodes = 2
//! pattern = ["optimal", "sub-optimal"]
//!
//! [training]
//! learning_rate = 0.01
//! epochs = 500
//! hidden = [32, 32]
//!
//! [weighting]
//! temperature = 5.0
//! threshold = 0.25
//!
//! [variants]
//! names = ["bc", "taw-bc", "dart", "taw-di"]
//!
//! [seeds]
//! master = 0
//! count = 5
//! ```
//!
//! Only `[environment].kind` is required; every other value has a default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::demonstrators::{DemonstrationSchedule, DemonstratorConfig};
use crate::envs::{Env, Environment};
use crate::error::{Error, Result};
use crate::learner::Variant;
use crate::policy::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightingSettings {
    /// β in `exp(-β c)` for the achievement-weighted variants.
    pub temperature: f64,
    /// Cost threshold of the `*` variants.
    pub threshold: f64,
}

impl Default for WeightingSettings {
    fn default() -> Self {
        Self {
            temperature: 5.0,
            threshold: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisturbanceSettings {
    /// Initial disturbance `Σ₀ = σ₀² I` of the disturbance-injecting variants.
    pub sigma0: f64,
}

impl Default for DisturbanceSettings {
    fn default() -> Self {
        Self { sigma0: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    /// Undisturbed test rollouts per iteration.
    pub episodes: usize,
    /// Rollouts per half of the covariate-shift estimate; 0 disables it.
    pub shift_rollouts: usize,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            episodes: 3,
            shift_rollouts: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantSettings {
    pub names: Vec<Variant>,
    /// Reference for the per-iteration Welch test in the summary.
    pub baseline: Option<Variant>,
}

impl Default for VariantSettings {
    fn default() -> Self {
        Self {
            names: vec![Variant::Bc, Variant::TawBc, Variant::Dart, Variant::TawDi],
            baseline: Some(Variant::Dart),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSettings {
    pub master: u64,
    /// Seeds `master, master + 1, ...`.
    pub count: usize,
}

impl Default for SeedSettings {
    fn default() -> Self {
        Self { master: 0, count: 1 }
    }
}

impl SeedSettings {
    pub fn list(&self) -> Vec<u64> {
        (0..self.count as u64).map(|i| self.master.wrapping_add(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: Env,
    #[serde(default)]
    pub demonstrator: DemonstratorConfig,
    #[serde(default)]
    pub schedule: DemonstrationSchedule,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub weighting: WeightingSettings,
    #[serde(default)]
    pub disturbance: DisturbanceSettings,
    #[serde(default)]
    pub evaluation: EvaluationSettings,
    #[serde(default)]
    pub variants: VariantSettings,
    #[serde(default)]
    pub seeds: SeedSettings,
}

impl ExperimentConfig {
    pub fn new(environment: Env) -> Self {
        Self {
            environment,
            demonstrator: DemonstratorConfig::default(),
            schedule: DemonstrationSchedule::default(),
            training: TrainConfig::default(),
            weighting: WeightingSettings::default(),
            disturbance: DisturbanceSettings::default(),
            evaluation: EvaluationSettings::default(),
            variants: VariantSettings::default(),
            seeds: SeedSettings::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(toml_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.environment.validate()?;
        self.demonstrator.validate()?;
        self.schedule.validate()?;
        self.training.validate()?;
        let w = &self.weighting;
        if !(w.temperature.is_finite() && w.temperature > 0.0) {
            return Err(Error::config("weighting.temperature", "must be a positive number"));
        }
        if !(w.threshold.is_finite() && w.threshold >= 0.0) {
            return Err(Error::config("weighting.threshold", "must be a nonnegative number"));
        }
        if !(self.disturbance.sigma0.is_finite() && self.disturbance.sigma0 >= 0.0) {
            return Err(Error::config("disturbance.sigma0", "must be a nonnegative number"));
        }
        if self.evaluation.episodes == 0 {
            return Err(Error::config("evaluation.episodes", "must be at least 1"));
        }
        if self.variants.names.is_empty() {
            return Err(Error::config("variants.names", "must list at least one variant"));
        }
        for (i, v) in self.variants.names.iter().enumerate() {
            if self.variants.names[..i].contains(v) {
                return Err(Error::config("variants.names", format!("`{v}` listed twice")));
            }
        }
        if self.seeds.count == 0 {
            return Err(Error::config("seeds.count", "must be at least 1"));
        }
        if self.environment.action_dim() == 0 {
            return Err(Error::config("environment", "action dimension must be positive"));
        }
        Ok(())
    }
}

/// Turns a parse error into a field-level configuration error, naming the
/// offending key when serde reports one.
fn toml_error(e: toml::de::Error) -> Error {
    let message = e.message().to_string();
    let field = message
        .split('`')
        .nth(1)
        .filter(|_| message.starts_with("missing field") || message.starts_with("unknown field"))
        .unwrap_or("config")
        .to_string();
    let location = e.span().map(|s| format!(" (byte {})", s.start)).unwrap_or_default();
    Error::Config {
        field,
        message: format!("{}{location}", message.trim_end()),
    }
}
