//! Exact reductions between the learner's configurations.

mod common;

use common::load_config;
use tawdi::config::ExperimentConfig;
use tawdi::learner::{run_variant, Variant, VariantRun};
use tawdi::trajectory::Quality;
use tawdi::weighting::WeightingConfig;

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn assert_identical(a: &VariantRun, b: &VariantRun) {
    assert_eq!(a.log.records.len(), b.log.records.len());
    for (x, y) in a.log.records.iter().zip(&b.log.records) {
        assert!(same_bits(&x.sigma, &y.sigma), "iteration {}: {:?} vs {:?}", x.iteration, x.sigma, y.sigma);
        assert_eq!(x.eval, y.eval);
    }
    assert!(same_bits(&a.policy.params(), &b.policy.params()));
}

fn smoke() -> ExperimentConfig {
    load_config("reach2d-smoke.toml")
}

#[test]
fn flat_temperature_reduces_taw_di_to_dart() {
    let cfg = smoke();
    let mut flat = Variant::TawDi.algorithm(&cfg);
    flat.weighting = WeightingConfig::exponential(1e-300);
    let a = run_variant(&cfg.environment, &flat, 3).unwrap();
    let b = run_variant(&cfg.environment, &Variant::Dart.algorithm(&cfg), 3).unwrap();
    assert_identical(&a, &b);
}

#[test]
fn uniform_weights_reduce_taw_bc_to_bc() {
    let cfg = smoke();
    let mut flat = Variant::TawBc.algorithm(&cfg);
    flat.weighting = WeightingConfig::uniform();
    let a = run_variant(&cfg.environment, &flat, 1).unwrap();
    let b = run_variant(&cfg.environment, &Variant::Bc.algorithm(&cfg), 1).unwrap();
    assert_identical(&a, &b);
}

#[test]
fn zero_disturbance_reduces_taw_di_to_taw_bc() {
    let cfg = smoke();
    let mut quiet = Variant::TawDi.algorithm(&cfg);
    quiet.sigma0 = 0.0;
    quiet.update_disturbance = false;
    let a = run_variant(&cfg.environment, &quiet, 2).unwrap();
    let b = run_variant(&cfg.environment, &Variant::TawBc.algorithm(&cfg), 2).unwrap();
    assert_identical(&a, &b);
    assert!(a.log.records.iter().all(|r| r.sigma_trace == 0.0));
}

#[test]
fn both_degeneracies_reduce_to_bc() {
    let cfg = smoke();
    let mut plain = Variant::TawDi.algorithm(&cfg);
    plain.weighting = WeightingConfig::uniform();
    plain.sigma0 = 0.0;
    plain.update_disturbance = false;
    let a = run_variant(&cfg.environment, &plain, 0).unwrap();
    let b = run_variant(&cfg.environment, &Variant::Bc.algorithm(&cfg), 0).unwrap();
    assert_identical(&a, &b);
}

/// The excavation fixture with a shorter schedule: the threshold keeps the
/// optimal episode and drops the shallow one.
fn excavation() -> ExperimentConfig {
    let mut cfg = load_config("excavate1d.toml");
    cfg.schedule.iterations = 3;
    cfg.training.epochs = 100;
    cfg
}

fn optimal_only(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut only = cfg.clone();
    only.schedule.episodes = 1;
    only.schedule.pattern = vec![Quality::Optimal];
    only
}

#[test]
fn threshold_matches_training_on_optimal_episodes_only() {
    let cfg = excavation();
    let only = optimal_only(&cfg);
    for (star, plain) in [(Variant::BcStar, Variant::Bc), (Variant::DartStar, Variant::Dart)] {
        let a = run_variant(&cfg.environment, &star.algorithm(&cfg), 4).unwrap();
        for r in &a.log.records {
            assert!(r.weights[0] > 0.0 && r.weights[1] == 0.0, "{star}: weights {:?}", r.weights);
        }
        let b = run_variant(&only.environment, &plain.algorithm(&only), 4).unwrap();
        assert_identical(&a, &b);
    }
}

#[test]
fn threshold_excluding_everything_keeps_the_initial_policy_and_disturbance() {
    let mut cfg = excavation();
    cfg.weighting.threshold = 0.0;
    cfg.schedule.pattern = vec![Quality::SubOptimal];
    let run = run_variant(&cfg.environment, &Variant::DartStar.algorithm(&cfg), 0).unwrap();
    for r in &run.log.records {
        assert!(r.weights.iter().all(|&w| w == 0.0));
        assert_eq!(r.train_loss, None);
        assert_eq!(r.sigma, r.sigma_used);
    }
}
