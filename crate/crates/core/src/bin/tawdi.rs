use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tawdi::config::ExperimentConfig;
use tawdi::diagnostics::{gradient_check, kl_bound, sigma_oracle, SweepReport};
use tawdi::learner::{run_experiment, Variant};
use tawdi::output::write_outputs;
use tawdi::Error;

#[derive(Parser)]
#[command(name = "tawdi", version, about = "Achievement-weighted disturbance injection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured variant and seed and write logs and summaries.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated variant names, overriding the config.
        #[arg(long, value_delimiter = ',')]
        variants: Option<Vec<String>>,
        #[arg(long)]
        quiet: bool,
    },
    /// Run a randomized property sweep.
    Diagnose {
        #[arg(value_enum)]
        check: Sweep,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Sweep {
    KlBound,
    GradientCheck,
    SigmaOracle,
}

fn run(config: PathBuf, out: PathBuf, seed: Option<u64>, variants: Option<Vec<String>>, quiet: bool) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::from_path(&config).map_err(|e| match e {
        Error::Io(io) => Error::Input(format!("cannot read {}: {io}", config.display())),
        other => other,
    })?;
    if let Some(s) = seed {
        cfg.seeds.master = s;
    }
    if let Some(names) = variants {
        cfg.variants.names = names.iter().map(|n| n.trim().parse::<Variant>()).collect::<Result<_, _>>()?;
        if cfg.variants.baseline.is_some_and(|b| !cfg.variants.names.contains(&b)) {
            cfg.variants.baseline = None;
        }
    }
    cfg.validate()?;
    let runs = run_experiment(&cfg)?;
    write_outputs(&out, &cfg, &runs)?;
    if !quiet {
        for r in &runs {
            if let Some(last) = r.log.records.last() {
                println!(
                    "{:<10} seed {:<4} final achievement {:.4}  trace(sigma) {:.6}",
                    r.log.variant, r.log.seed, last.eval.mean, last.sigma_trace
                );
            }
        }
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn diagnose(check: Sweep, instances: Option<usize>, seed: u64) -> Result<bool, Error> {
    let (name, report, unit): (&str, SweepReport, &str) = match check {
        Sweep::KlBound => ("kl-bound", kl_bound(instances.unwrap_or(50), seed)?, "max KL identity error"),
        Sweep::GradientCheck => ("gradient-check", gradient_check(instances.unwrap_or(20), seed)?, "max relative error"),
        Sweep::SigmaOracle => ("sigma-oracle", sigma_oracle(instances.unwrap_or(100), seed)?, "max deviation"),
    };
    println!(
        "{name}: {}/{} passed, {unit} {:e}",
        report.passed, report.total, report.worst
    );
    Ok(report.ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            variants,
            quiet,
        } => run(config, out, seed, variants, quiet).map(|_| true),
        Command::Diagnose { check, instances, seed } => diagnose(check, instances, seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
