//! Experiment runners. Each writes into `<output_dir>/<kind>/`.

mod robustness;
mod sweep;
mod turk;

use std::path::{Path, PathBuf};
use std::time::Instant;

use less_core::rng::GENERATOR_VERSION;
use less_core::{
    compute_features, enumerate_trajectories, EnumerationLimits, FeatureSet, GridWorld, Kernel,
    ThetaGrid, TrajectorySet,
};
use serde::Serialize;

use crate::config::{canonical_text, ExperimentKind, LoadedExperiment};
use crate::error::{HarnessError, Result};
use crate::output::{create_dir, write_text, write_trajectory_set};

pub use robustness::run_robustness;
pub use sweep::{run_inference_compare, run_misspecify};
pub use turk::{run_turk_predict, run_turk_sweep, TurkPrediction, TURK_OPTIONS};

/// Enumerated and featurized world shared by the sweeps.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub world: GridWorld,
    pub features: FeatureSet,
    pub set: TrajectorySet,
    pub kernel: Kernel,
    pub grid: ThetaGrid,
}

impl Prepared {
    pub fn new(exp: &LoadedExperiment) -> Result<Self> {
        let (_, world, features) = exp.world.clone().ok_or_else(|| {
            HarnessError::Config(format!("{} needs a world file", exp.config.kind.as_str()))
        })?;
        let raw =
            enumerate_trajectories(&world, exp.config.max_length, EnumerationLimits::default())?;
        let set = compute_features(&raw, &world, &features)?;
        let kernel = exp.config.bandwidth.spec().resolve(&set)?;
        let grid = exp.theta_grid()?;
        if grid.dim() != features.len() {
            return Err(HarnessError::Config(format!(
                "theta grid has dimension {} but the world defines {} features",
                grid.dim(),
                features.len()
            )));
        }
        Ok(Self {
            world,
            features,
            set,
            kernel,
            grid,
        })
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    kind: &'a str,
    config_hash: &'a str,
    harness_version: &'a str,
    core_version: &'a str,
    generator: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampler_bandwidth: Option<f64>,
    warnings: Vec<String>,
}

/// Creates the experiment directory and writes `config.toml` and, when a
/// world is involved, `trajectories.csv`.
fn begin(exp: &LoadedExperiment, prepared: Option<&Prepared>) -> Result<PathBuf> {
    let dir = exp.config.output_dir.join(exp.config.kind.as_str());
    create_dir(&dir)?;
    let text = canonical_text(&exp.config, exp.world.as_ref().map(|w| &w.0))?;
    write_text(&dir.join("config.toml"), &text)?;
    if let Some(p) = prepared {
        let path = dir.join("trajectories.csv");
        let file = std::fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
        write_trajectory_set(std::io::BufWriter::new(file), &p.set, Some(&p.features))?;
    }
    Ok(dir)
}

fn finish(
    dir: &Path,
    exp: &LoadedExperiment,
    prepared: Option<&Prepared>,
    sampler_bandwidth: Option<f64>,
    warnings: Vec<String>,
) -> Result<()> {
    let meta = Metadata {
        kind: exp.config.kind.as_str(),
        config_hash: &exp.config_hash,
        harness_version: env!("CARGO_PKG_VERSION"),
        core_version: less_core::VERSION,
        generator: GENERATOR_VERSION,
        trajectory_count: prepared.map(|p| p.set.len()),
        bandwidth: prepared.map(|p| p.kernel.bandwidth()),
        sampler_bandwidth,
        warnings,
    };
    let text = toml::to_string(&meta)
        .map_err(|e| HarnessError::Config(format!("cannot serialize metadata: {e}")))?;
    write_text(&dir.join("metadata.toml"), &text)
}

/// Runs the configured experiment and returns its output directory.
pub fn run(exp: &LoadedExperiment) -> Result<PathBuf> {
    let started = Instant::now();
    let dir = match exp.config.kind {
        ExperimentKind::TurkPredict => run_turk_sweep(exp)?,
        ExperimentKind::InferenceCompare => run_inference_compare(exp)?,
        ExperimentKind::Misspecify => run_misspecify(exp)?,
        ExperimentKind::Robustness => run_robustness(exp)?,
    };
    eprintln!(
        "{} finished in {:.1}s, results in {}",
        exp.config.kind.as_str(),
        started.elapsed().as_secs_f64(),
        dir.display()
    );
    Ok(dir)
}
