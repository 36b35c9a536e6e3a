use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use less_core::{compute_features, enumerate_trajectories, EnumerationLimits};
use less_infer::config::{ExperimentKind, LoadedExperiment, WorldFile};
use less_infer::experiments::{self, run_turk_predict};
use less_infer::output::{fmt_f64, write_trajectory_set};
use less_infer::{HarnessError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "less-infer",
    version,
    about = "Choice-model reward inference experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Experiment config file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Use seeds 0..N instead of the configured seeds
    #[arg(long)]
    seeds: Option<u64>,
    /// Output directory root
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config value, e.g. `--override beta=2.0`
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form choice predictions for the four-option geometry
    PredictTurk {
        #[arg(long)]
        lambda: f64,
    },
    /// List every trajectory of a world up to a length, with features
    Enumerate {
        #[arg(long)]
        world: PathBuf,
        #[arg(long = "max-len")]
        max_len: usize,
        /// Write to this file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the turk predictions over the configured lambdas
    TurkPredict(RunArgs),
    /// Sampler × inference factorial sweep
    InferenceCompare(RunArgs),
    /// LESS demonstrator with similarity-only features the learner lacks
    Misspecify(RunArgs),
    /// KL aggregate of posteriors across random trajectory subsets
    Robustness(RunArgs),
}

fn run_experiment(kind: ExperimentKind, args: RunArgs) -> Result<()> {
    let mut overrides = args.overrides;
    if let Some(n) = args.seeds {
        overrides.push(format!("seeds={n}"));
    }
    let mut exp = LoadedExperiment::load(&args.config, &overrides)?;
    if exp.config.kind != kind {
        return Err(HarnessError::Config(format!(
            "{} declares kind `{}`, not `{}`",
            args.config.display(),
            exp.config.kind.as_str(),
            kind.as_str()
        )));
    }
    if let Some(out) = args.out {
        exp.config.output_dir = out;
    }
    experiments::run(&exp)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PredictTurk { lambda } => {
            let p = run_turk_predict(lambda)?;
            let mut out = io::stdout().lock();
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["model", "option", "probability"])?;
            for (model, dist) in [("boltzmann", &p.boltzmann), ("less", &p.less)] {
                for (opt, prob) in experiments::TURK_OPTIONS.iter().zip(dist.probs()) {
                    w.write_record([model, opt, &fmt_f64(*prob)])?;
                }
            }
            w.flush()
                .map_err(|e| HarnessError::io(&PathBuf::from("<stdout>"), e))?;
            Ok(())
        }
        Command::Enumerate {
            world,
            max_len,
            out,
        } => {
            let wf = WorldFile::load(&world)?;
            let gw = wf.world()?;
            let features = wf.feature_set()?;
            let raw = enumerate_trajectories(&gw, max_len, EnumerationLimits::default())?;
            let set = compute_features(&raw, &gw, &features)?;
            match out {
                Some(path) => {
                    let file =
                        std::fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
                    write_trajectory_set(io::BufWriter::new(file), &set, Some(&features))
                }
                None => {
                    let stdout = io::stdout().lock();
                    write_trajectory_set(io::BufWriter::new(stdout), &set, Some(&features))
                }
            }
        }
        Command::TurkPredict(a) => run_experiment(ExperimentKind::TurkPredict, a),
        Command::InferenceCompare(a) => run_experiment(ExperimentKind::InferenceCompare, a),
        Command::Misspecify(a) => run_experiment(ExperimentKind::Misspecify, a),
        Command::Robustness(a) => run_experiment(ExperimentKind::Robustness, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let _ = writeln!(io::stderr(), "  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
