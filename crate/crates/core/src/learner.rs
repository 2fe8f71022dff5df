//! The iterative learner shared by every algorithm variant.
//!
//! Each iteration collects `E` demonstrations (optionally with injected
//! disturbance), weights them by task achievement, retrains the policy from
//! scratch on all data gathered so far, and re-estimates the disturbance
//! covariance from the newest batch only.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::demonstrators::{disturbed_demo_source, DemonstrationSchedule, DemonstratorConfig, DemonstratorSpec};
use crate::disturbance::{update_covariance, DisturbanceModel};
use crate::envs::{rollout, Controller, Env, Environment};
use crate::error::{Error, Result};
use crate::metrics::{covariate_shift_estimate, mean, sample_std};
use crate::policy::{train, PolicyNetwork, TrainConfig};
use crate::rng::RngStream;
use crate::trajectory::{EpisodeBatch, Quality, TrajectoryMeta};
use crate::weighting::{batch_weights, WeightingConfig};

/// Named algorithm presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Behavior cloning on all demonstrations, uniform weights.
    Bc,
    TawBc,
    /// Disturbance injection with uniform weights.
    Dart,
    TawDi,
    /// Behavior cloning on demonstrations under the cost threshold.
    BcStar,
    DartStar,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Bc,
        Variant::TawBc,
        Variant::Dart,
        Variant::TawDi,
        Variant::BcStar,
        Variant::DartStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Bc => "bc",
            Variant::TawBc => "taw-bc",
            Variant::Dart => "dart",
            Variant::TawDi => "taw-di",
            Variant::BcStar => "bc-star",
            Variant::DartStar => "dart-star",
        }
    }

    pub fn algorithm(self, cfg: &ExperimentConfig) -> AlgorithmConfig {
        let w = &cfg.weighting;
        let (use_disturbance, weighting) = match self {
            Variant::Bc => (false, WeightingConfig::uniform()),
            Variant::TawBc => (false, WeightingConfig::exponential(w.temperature)),
            Variant::Dart => (true, WeightingConfig::uniform()),
            Variant::TawDi => (true, WeightingConfig::exponential(w.temperature)),
            Variant::BcStar => (false, WeightingConfig::threshold(w.threshold)),
            Variant::DartStar => (true, WeightingConfig::threshold(w.threshold)),
        };
        AlgorithmConfig {
            name: self.name().to_string(),
            use_disturbance,
            update_disturbance: use_disturbance,
            weighting,
            sigma0: if use_disturbance { cfg.disturbance.sigma0 } else { 0.0 },
            schedule: cfg.schedule.clone(),
            training: cfg.training.clone(),
            demonstrator: cfg.demonstrator.clone(),
            n_eval: cfg.evaluation.episodes,
            shift_rollouts: cfg.evaluation.shift_rollouts,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::config("variants", format!("unknown variant `{s}`")))
    }
}

/// Everything one learner run needs besides the environment and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub name: String,
    /// Execute `a^D + ε` during collection rather than `a^D`.
    pub use_disturbance: bool,
    /// Re-estimate `Σ` after each iteration; otherwise `Σ₀` is kept.
    pub update_disturbance: bool,
    pub weighting: WeightingConfig,
    /// `Σ₀ = σ₀² I`.
    pub sigma0: f64,
    pub schedule: DemonstrationSchedule,
    pub training: TrainConfig,
    pub demonstrator: DemonstratorConfig,
    pub n_eval: usize,
    pub shift_rollouts: usize,
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<()> {
        self.weighting.validate()?;
        self.schedule.validate()?;
        self.training.validate()?;
        self.demonstrator.validate()?;
        if !(self.sigma0.is_finite() && self.sigma0 >= 0.0) {
            return Err(Error::config("disturbance.sigma0", "must be a nonnegative number"));
        }
        if self.n_eval == 0 {
            return Err(Error::config("evaluation.episodes", "must be at least 1"));
        }
        Ok(())
    }
}

/// Test-time achievement `clamp(1 - cost, 0, 1)` of undisturbed rollouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single rollout.
    pub std: f64,
    pub costs: Vec<f64>,
}

pub fn achievement(cost: f64) -> f64 {
    (1.0 - cost).clamp(0.0, 1.0)
}

/// Runs `n_eval` undisturbed episodes; episode `j` draws from `rng.split(j)`.
pub fn evaluate_policy<E: Environment + ?Sized>(
    policy: &dyn Controller,
    env: &E,
    n_eval: usize,
    rng: &RngStream,
) -> Result<EvalStats> {
    if n_eval == 0 {
        return Err(Error::Input("evaluation needs at least one episode".into()));
    }
    let mut costs = Vec::with_capacity(n_eval);
    for j in 0..n_eval {
        let r = rng.split(j as u64);
        let mut source = policy.start_episode(&mut r.split(1));
        let traj = rollout(env, source.as_mut(), &mut r.split(0), TrajectoryMeta::default())?;
        costs.push(traj.achievement_cost.unwrap_or(1.0));
    }
    let a: Vec<f64> = costs.iter().map(|&c| achievement(c)).collect();
    Ok(EvalStats {
        mean: mean(&a),
        std: sample_std(&a),
        costs,
    })
}

/// Random streams of one seed. Every variant derives its draws from the same
/// layout, so corresponding episodes share initial states, waypoint noise and
/// disturbance noise across variants.
#[derive(Debug, Clone)]
pub struct SeedStreams {
    root: RngStream,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            root: RngStream::new(seed, 0),
        }
    }

    /// Episode `e` of iteration `k`: child 0 initial state, 1 waypoints, 2 disturbance.
    pub fn episode(&self, k: usize, e: usize) -> RngStream {
        self.root.split(1).split(k as u64).split(e as u64)
    }

    /// Child 0 initializes the policy, child 1 shuffles minibatches.
    pub fn training(&self, k: usize) -> RngStream {
        self.root.split(2).split(k as u64)
    }

    pub fn evaluation(&self, k: usize) -> RngStream {
        self.root.split(3).split(k as u64)
    }

    pub fn shift(&self, k: usize) -> RngStream {
        self.root.split(4).split(k as u64)
    }
}

/// Data and models carried from one iteration to the next.
#[derive(Debug, Clone)]
pub struct LearnerState {
    /// Every batch collected so far.
    pub data: Vec<EpisodeBatch>,
    /// Per-trajectory weights aligned with the flattened `data`.
    pub weights: Vec<f64>,
    pub policy: Option<PolicyNetwork>,
    pub disturbance: DisturbanceModel,
}

impl LearnerState {
    pub fn initial(action_dim: usize, cfg: &AlgorithmConfig) -> Result<Self> {
        let disturbance = if cfg.use_disturbance {
            DisturbanceModel::isotropic(action_dim, cfg.sigma0)?
        } else {
            DisturbanceModel::zero(action_dim)
        };
        Ok(Self {
            data: Vec::new(),
            weights: Vec::new(),
            policy: None,
            disturbance,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub iteration: usize,
    /// Row-major covariance injected while collecting this iteration.
    pub sigma_used: Vec<f64>,
    /// Row-major covariance estimated at the end of this iteration.
    pub sigma: Vec<f64>,
    pub sigma_trace: f64,
    pub qualities: Vec<Quality>,
    pub costs: Vec<f64>,
    pub weights: Vec<f64>,
    /// Weighted loss on all accumulated data; absent when every weight so far is zero.
    pub train_loss: Option<f64>,
    pub eval: EvalStats,
    pub covariate_shift: Option<f64>,
}

fn demonstrator_for(env: &Env, quality: Quality, cfg: &DemonstratorConfig) -> DemonstratorSpec {
    let q = match quality {
        Quality::SubOptimal => Quality::SubOptimal,
        _ => Quality::Optimal,
    };
    DemonstratorSpec::for_env(env, q, cfg)
}

fn policy_sizes(env: &Env, cfg: &TrainConfig) -> Vec<usize> {
    let mut sizes = vec![env.state_dim()];
    sizes.extend_from_slice(&cfg.hidden);
    sizes.push(env.action_dim());
    sizes
}

/// One iteration (`k` is 0-based). Updates `state` in place.
pub fn run_iteration(
    k: usize,
    state: &mut LearnerState,
    env: &Env,
    cfg: &AlgorithmConfig,
    streams: &SeedStreams,
) -> Result<IterationRecord> {
    let sigma_used = state.disturbance.clone();
    let mut trajectories = Vec::with_capacity(cfg.schedule.episodes);
    for e in 0..cfg.schedule.episodes {
        let quality = cfg.schedule.quality(e);
        let spec = demonstrator_for(env, quality, &cfg.demonstrator);
        let ep = streams.episode(k, e);
        let demo = spec.instantiate(&mut ep.split(1));
        let mut source = disturbed_demo_source(demo, &sigma_used, ep.split(2));
        let meta = TrajectoryMeta {
            iteration: k,
            episode: e,
            quality,
            weight: None,
        };
        trajectories.push(rollout(env, &mut source, &mut ep.split(0), meta)?);
    }
    let costs: Vec<f64> = trajectories.iter().map(|t| t.achievement_cost.unwrap_or(1.0)).collect();
    let weights = batch_weights(&costs, &cfg.weighting)?;
    for (t, &w) in trajectories.iter_mut().zip(&weights) {
        t.metadata.weight = Some(w);
    }
    let batch = EpisodeBatch::new(k, trajectories)?;
    state.data.push(batch);
    state.weights.extend_from_slice(&weights);

    let tr = streams.training(k);
    let init = PolicyNetwork::random(&policy_sizes(env, &cfg.training), cfg.training.init_scale, &mut tr.split(0))?;
    let (policy, train_loss) = if state.weights.iter().any(|&w| w > 0.0) {
        let out = train(init, &state.data, &state.weights, &cfg.training, &mut tr.split(1))?;
        (out.policy, Some(out.final_loss))
    } else {
        (init, None)
    };

    if cfg.use_disturbance && cfg.update_disturbance && weights.iter().any(|&w| w > 0.0) {
        let newest = state.data.last().expect("batch pushed above");
        state.disturbance = update_covariance(newest, &policy, &weights)?;
    }

    let eval = evaluate_policy(&policy, env, cfg.n_eval, &streams.evaluation(k))?;
    let covariate_shift = if cfg.shift_rollouts > 0 {
        let demo = demonstrator_for(env, Quality::Optimal, &cfg.demonstrator);
        Some(covariate_shift_estimate(&policy, &demo, env, cfg.shift_rollouts, &streams.shift(k))?.value)
    } else {
        None
    };
    state.policy = Some(policy);
    Ok(IterationRecord {
        iteration: k + 1,
        sigma_used: sigma_used.covariance().to_vec(),
        sigma: state.disturbance.covariance().to_vec(),
        sigma_trace: state.disturbance.level(),
        qualities: cfg.schedule.pattern.iter().cycle().take(cfg.schedule.episodes).copied().collect(),
        costs,
        weights,
        train_loss,
        eval,
        covariate_shift,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentLog {
    pub variant: String,
    pub seed: u64,
    pub algorithm: AlgorithmConfig,
    pub records: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct VariantRun {
    pub log: ExperimentLog,
    pub policy: PolicyNetwork,
    pub data: Vec<EpisodeBatch>,
}

/// All iterations of one algorithm on one seed.
pub fn run_variant(env: &Env, cfg: &AlgorithmConfig, seed: u64) -> Result<VariantRun> {
    cfg.validate()?;
    env.validate()?;
    let streams = SeedStreams::new(seed);
    let mut state = LearnerState::initial(env.action_dim(), cfg)?;
    let mut records = Vec::with_capacity(cfg.schedule.iterations);
    for k in 0..cfg.schedule.iterations {
        let record = run_iteration(k, &mut state, env, cfg, &streams).map_err(|e| Error::Run {
            variant: cfg.name.clone(),
            seed,
            iteration: k + 1,
            source: Box::new(e),
        })?;
        records.push(record);
    }
    Ok(VariantRun {
        log: ExperimentLog {
            variant: cfg.name.clone(),
            seed,
            algorithm: cfg.clone(),
            records,
        },
        policy: state.policy.expect("at least one iteration"),
        data: state.data,
    })
}

/// Every configured variant on every seed, in parallel. Results are ordered
/// variant-major, then by seed, independent of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<VariantRun>> {
    cfg.validate()?;
    let jobs: Vec<(Variant, u64)> = cfg
        .variants
        .names
        .iter()
        .flat_map(|&v| cfg.seeds.list().into_iter().map(move |s| (v, s)))
        .collect();
    jobs.par_iter()
        .map(|&(v, seed)| run_variant(&cfg.environment, &v.algorithm(cfg), seed))
        .collect()
}

/// Mean undisturbed achievement of the optimal demonstrator on the
/// evaluation episodes of iteration `k` for `seed`.
pub fn demonstrator_achievement(cfg: &ExperimentConfig, seed: u64, k: usize) -> Result<f64> {
    let demo = demonstrator_for(&cfg.environment, Quality::Optimal, &cfg.demonstrator);
    let streams = SeedStreams::new(seed);
    Ok(evaluate_policy(&demo, &cfg.environment, cfg.evaluation.episodes, &streams.evaluation(k))?.mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Excavate1D, Reach2D};

    fn small(env: Env) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(env);
        cfg.schedule.iterations = 3;
        cfg.training = TrainConfig {
            learning_rate: 0.05,
            epochs: 60,
            minibatch_size: 32,
            init_scale: 1.0,
            hidden: vec![8, 8],
        };
        cfg
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(serde_json::to_string(&v).unwrap(), format!("\"{}\"", v.name()));
        }
        assert!("dagger".parse::<Variant>().is_err());
    }

    #[test]
    fn bc_family_logs_zero_sigma() {
        let cfg = small(Env::Excavate1d(Excavate1D::default()));
        for v in [Variant::Bc, Variant::TawBc, Variant::BcStar] {
            let run = run_variant(&cfg.environment, &v.algorithm(&cfg), 1).unwrap();
            assert!(run.log.records.iter().all(|r| r.sigma_trace == 0.0 && r.sigma_used.iter().all(|&x| x == 0.0)));
        }
    }

    #[test]
    fn data_accumulates_and_sigma_uses_latest_batch() {
        let cfg = small(Env::Excavate1d(Excavate1D::default()));
        let alg = Variant::TawDi.algorithm(&cfg);
        let streams = SeedStreams::new(4);
        let mut state = LearnerState::initial(1, &alg).unwrap();
        for k in 0..3 {
            let rec = run_iteration(k, &mut state, &cfg.environment, &alg, &streams).unwrap();
            assert_eq!(state.data.len(), k + 1);
            assert_eq!(state.weights.len(), 2 * (k + 1));
            let oracle = update_covariance(&state.data[k], state.policy.as_ref().unwrap(), &rec.weights).unwrap();
            assert_eq!(oracle.covariance(), &rec.sigma[..]);
        }
    }

    #[test]
    fn variants_share_demonstration_randomness() {
        let cfg = small(Env::Reach2d(Reach2D::default()));
        let bc = run_variant(&cfg.environment, &Variant::Bc.algorithm(&cfg), 9).unwrap();
        let tawbc = run_variant(&cfg.environment, &Variant::TawBc.algorithm(&cfg), 9).unwrap();
        let dart = run_variant(&cfg.environment, &Variant::Dart.algorithm(&cfg), 9).unwrap();
        for k in 0..3 {
            for e in 0..2 {
                let (a, b, c) = (&bc.data[k].trajectories[e], &tawbc.data[k].trajectories[e], &dart.data[k].trajectories[e]);
                assert_eq!(a.states, b.states);
                assert_eq!(a.states[0], c.states[0]);
            }
        }
    }

    #[test]
    fn optimal_demonstrator_evaluates_high() {
        let env = Env::Reach2d(Reach2D::default());
        let demo = DemonstratorSpec::for_env(
            &env,
            Quality::Optimal,
            &DemonstratorConfig {
                waypoint_noise: 0.0,
                ..DemonstratorConfig::default()
            },
        );
        let stats = evaluate_policy(&demo, &env, 3, &RngStream::from_seed(0)).unwrap();
        assert!(stats.mean > 0.95, "{stats:?}");
        let zero = PolicyNetwork::zeros(&[2, 4, 2]).unwrap();
        let stats = evaluate_policy(&zero, &env, 3, &RngStream::from_seed(0)).unwrap();
        assert_eq!(stats.mean, 0.0);
        assert_eq!(stats, evaluate_policy(&zero, &env, 3, &RngStream::from_seed(0)).unwrap());
    }

    #[test]
    fn experiment_cardinality_and_order() {
        let mut cfg = small(Env::Excavate1d(Excavate1D::default()));
        cfg.seeds.count = 2;
        cfg.schedule.iterations = 1;
        let runs = run_experiment(&cfg).unwrap();
        assert_eq!(runs.len(), 8);
        let keys: Vec<(String, u64)> = runs.iter().map(|r| (r.log.variant.clone(), r.log.seed)).collect();
        assert_eq!(keys[0], ("bc".to_string(), 0));
        assert_eq!(keys[1], ("bc".to_string(), 1));
        assert_eq!(keys[7], ("taw-di".to_string(), 1));
    }

    #[test]
    fn divergence_names_variant_seed_and_iteration() {
        let mut cfg = small(Env::Reach2d(Reach2D::default()));
        cfg.training.learning_rate = 1e6;
        let err = run_variant(&cfg.environment, &Variant::Bc.algorithm(&cfg), 3).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("`bc`") && msg.contains("seed 3") && msg.contains("iteration 1"), "{msg}");
    }
}
