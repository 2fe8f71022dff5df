//! Files written by an experiment run.
//!
//! * `summary.csv`: one row per (variant, seed, iteration), columns
//!   `variant,seed,iteration,sigma_trace,train_loss,eval_mean,eval_std,p_vs_baseline,covariate_shift`.
//!   Empty cells mark values that are undefined (no training data, no test
//!   against the baseline, shift estimate disabled).
//! * `logs/<variant>.jsonl`: one iteration record per line.
//! * `trajectories.jsonl`: every collected demonstration, tagged with variant and seed.
//! * `policies/<variant>-seed<N>.txt`: final policy checkpoints.
//! * `config.snapshot`: the resolved configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::learner::{IterationRecord, Variant, VariantRun};
use crate::metrics::welch_t_test;
use crate::trajectory::Trajectory;

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "variant",
    "seed",
    "iteration",
    "sigma_trace",
    "train_loss",
    "eval_mean",
    "eval_std",
    "p_vs_baseline",
    "covariate_shift",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Two-sided Welch p-value of `variant` against `baseline` on the
/// across-seed evaluation means, keyed by (variant, iteration).
fn baseline_p_values(runs: &[VariantRun], baseline: Option<Variant>) -> BTreeMap<(String, usize), f64> {
    let mut by_key: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for run in runs {
        for r in &run.log.records {
            by_key.entry((run.log.variant.clone(), r.iteration)).or_default().push(r.eval.mean);
        }
    }
    let mut out = BTreeMap::new();
    let Some(base) = baseline else { return out };
    for ((variant, iteration), sample) in &by_key {
        if variant == base.name() {
            continue;
        }
        if let Some(reference) = by_key.get(&(base.name().to_string(), *iteration)) {
            if let Ok(w) = welch_t_test(sample, reference) {
                out.insert((variant.clone(), *iteration), w.p);
            }
        }
    }
    out
}

pub fn summary_csv(runs: &[VariantRun], baseline: Option<Variant>) -> String {
    let p = baseline_p_values(runs, baseline);
    let mut out = SUMMARY_COLUMNS.join(",");
    out.push('\n');
    for run in runs {
        for r in &run.log.records {
            let key = (run.log.variant.clone(), r.iteration);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                run.log.variant,
                run.log.seed,
                r.iteration,
                r.sigma_trace,
                opt(r.train_loss),
                r.eval.mean,
                r.eval.std,
                opt(p.get(&key).copied()),
                opt(r.covariate_shift),
            )
            .expect("writing to a String");
        }
    }
    out
}

#[derive(Serialize)]
struct LogLine<'a> {
    variant: &'a str,
    seed: u64,
    #[serde(flatten)]
    record: &'a IterationRecord,
}

#[derive(Serialize)]
struct TrajectoryLine<'a> {
    variant: &'a str,
    seed: u64,
    #[serde(flatten)]
    trajectory: &'a Trajectory,
}

fn jsonl<T: Serialize>(path: &Path, items: impl Iterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every output file into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, runs: &[VariantRun]) -> Result<()> {
    fs::create_dir_all(dir.join("logs"))?;
    fs::create_dir_all(dir.join("policies"))?;
    fs::write(dir.join("summary.csv"), summary_csv(runs, cfg.variants.baseline))?;
    fs::write(dir.join("config.snapshot"), cfg.to_toml_string()?)?;
    let mut variants: Vec<&str> = runs.iter().map(|r| r.log.variant.as_str()).collect();
    variants.dedup();
    for v in variants {
        let lines = runs
            .iter()
            .filter(|r| r.log.variant == v)
            .flat_map(|r| r.log.records.iter().map(move |rec| (r, rec)))
            .map(|(r, record)| LogLine {
                variant: &r.log.variant,
                seed: r.log.seed,
                record,
            });
        jsonl(&dir.join("logs").join(format!("{v}.jsonl")), lines)?;
    }
    let trajectories = runs.iter().flat_map(|r| {
        r.data.iter().flat_map(|b| b.iter()).map(move |t| TrajectoryLine {
            variant: &r.log.variant,
            seed: r.log.seed,
            trajectory: t,
        })
    });
    jsonl(&dir.join("trajectories.jsonl"), trajectories)?;
    for r in runs {
        r.policy
            .save(dir.join("policies").join(format!("{}-seed{}.txt", r.log.variant, r.log.seed)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Env, Excavate1D};
    use crate::learner::run_experiment;
    use crate::policy::TrainConfig;

    fn tiny() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(Env::Excavate1d(Excavate1D::default()));
        cfg.schedule.iterations = 2;
        cfg.seeds.count = 3;
        cfg.evaluation.shift_rollouts = 2;
        cfg.training = TrainConfig {
            learning_rate: 0.05,
            epochs: 20,
            minibatch_size: 64,
            init_scale: 1.0,
            hidden: vec![4],
        };
        cfg
    }

    #[test]
    fn summary_has_header_and_one_row_per_record() {
        let cfg = tiny();
        let runs = run_experiment(&cfg).unwrap();
        let csv = summary_csv(&runs, cfg.variants.baseline);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SUMMARY_COLUMNS.join(","));
        assert_eq!(lines.len(), 1 + 4 * 3 * 2);
        for line in &lines[1..] {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells.len(), SUMMARY_COLUMNS.len());
            let p = cells[7];
            if cells[0] == "dart" {
                assert!(p.is_empty());
            }
            if !p.is_empty() {
                let p: f64 = p.parse().unwrap();
                assert!((0.0..=1.0).contains(&p));
            }
            assert!(cells[8].parse::<f64>().unwrap() >= 0.0);
        }
    }

    #[test]
    fn outputs_are_written() {
        let cfg = tiny();
        let runs = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(dir.path(), &cfg, &runs).unwrap();
        for f in ["summary.csv", "config.snapshot", "trajectories.jsonl", "logs/taw-di.jsonl", "policies/bc-seed0.txt"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let log = fs::read_to_string(dir.path().join("logs/dart.jsonl")).unwrap();
        assert_eq!(log.lines().count(), 3 * 2);
        let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
        assert_eq!(first["variant"], "dart");
        assert_eq!(first["iteration"], 1);
        let traj = fs::read_to_string(dir.path().join("trajectories.jsonl")).unwrap();
        assert_eq!(traj.lines().count(), 4 * 3 * 2 * 2);
        let snapshot = ExperimentConfig::from_path(dir.path().join("config.snapshot")).unwrap();
        assert_eq!(snapshot, cfg);
    }
}
