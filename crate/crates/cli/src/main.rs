use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stlf_cli::commands::{self, Experiment, Overrides, Split};

#[derive(Parser)]
#[command(name = "stlf", version, about = "Day-ahead load forecasting with residual networks")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for training; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and repair the data, check the splits and report them.
    Prepare,
    /// Train the snapshot ensemble (and the variance model if configured).
    Train,
    /// Point-forecast MAPE on one split.
    Evaluate {
        #[arg(long, value_enum, default_value_t = Split::Test)]
        split: Split,
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// MAPE sensitivity to Gaussian temperature noise.
    PerturbEval {
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Calibrated predictive intervals and probabilistic scores.
    ProbEval {
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        variance_model: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> stlf_cli::Result<()> {
    let config = cli
        .config
        .ok_or_else(|| stlf_cli::CliError::Config("--config is required".into()))?;
    let overrides = Overrides {
        out: cli.out,
        seed: cli.seed,
        jobs: cli.jobs,
    };
    let mut exp = Experiment::load(&config, &overrides)?;
    match cli.command {
        Command::Prepare => {
            let r = commands::prepare(&exp)?;
            println!(
                "{} rows, {} gap repair(s), {} merged duplicate(s); train {} to {}",
                r.rows,
                r.repaired_gaps.len(),
                r.merged_duplicates,
                r.train.start,
                r.train.end
            );
        }
        Command::Train => {
            let out = commands::train(&exp)?;
            println!(
                "saved {} checkpoint(s) to {}",
                out.manifest.members.len(),
                exp.bundle_dir().display()
            );
        }
        Command::Evaluate { split, bundle } => {
            let r = commands::evaluate(&mut exp, split, bundle.as_deref())?;
            println!(
                "{} MAPE {:.3}% over {} days (persistence {:.3}%)",
                r.split, r.mape.overall, r.mape.days, r.persistence_mape
            );
        }
        Command::PerturbEval { bundle } => {
            let r = commands::perturb_eval(&mut exp, bundle.as_deref())?;
            println!("baseline MAPE {:.3}%", r.baseline_mape);
            for c in &r.cases {
                println!("std {} F: increase {:.3} +/- {:.3}", c.std_f, c.mean, c.std);
            }
        }
        Command::ProbEval { bundle, variance_model } => {
            let r = commands::prob_eval(&mut exp, bundle.as_deref(), variance_model.as_deref())?;
            println!("beta {:.2}, pinball {:.3}", r.beta, r.pinball);
            for c in &r.coverage {
                println!("z {:.3}: expected {:.3}, empirical {:.3}", c.z, c.expected, c.empirical);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
