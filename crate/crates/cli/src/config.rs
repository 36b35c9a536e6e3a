//! Experiment configuration and world files.
//!
//! Both are TOML. A relative `world` path resolves against the directory
//! containing the config file; `output_dir` is relative to the working
//! directory.
//!
//! World file:
//!
//! ```toml
//! width = 5
//! height = 5
//! start = [0, 0]
//! goal = [4, 4]
//! obstacles = [[1, 2], [2, 2]]
//! objects = [[2, 4], [4, 2]]
//! features = ["object-proximity:0", "object-proximity:1"]
//! ```
//!
//! Experiment config (schema version 1):
//!
//! ```toml
//! schema_version = 1
//! kind = "inference-compare"      # turk-predict | inference-compare | misspecify | robustness
//! world = "../worlds/block_5x5.toml"
//! max_length = 13
//! beta = 5.0
//! demos_per_set = 5
//! seeds = 50                      # a count (0..N) or an explicit list
//! output_dir = "results"
//!
//! [theta_grid]
//! ternary = true                  # or: candidates = [[1.0, 0.0], ...], labels = [...]
//!
//! [bandwidth]
//! mode = "search"                 # or: mode = "fixed", sigma = 0.1
//! min = 0.001
//! max = 10.0
//! grid_size = 200
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use less_core::{
    BandwidthSearch, BandwidthSpec, Cell, FeatureDescriptor, FeatureSet, GridWorld, ThetaGrid,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TurkPredict,
    InferenceCompare,
    Misspecify,
    Robustness,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::TurkPredict => "turk-predict",
            ExperimentKind::InferenceCompare => "inference-compare",
            ExperimentKind::Misspecify => "misspecify",
            ExperimentKind::Robustness => "robustness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Count(u64),
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Count(n) => (0..*n).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaGridConfig {
    #[serde(default)]
    pub ternary: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl Default for ThetaGridConfig {
    fn default() -> Self {
        Self {
            ternary: true,
            candidates: None,
            labels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BandwidthConfig {
    Search {
        #[serde(default = "default_bw_min")]
        min: f64,
        #[serde(default = "default_bw_max")]
        max: f64,
        #[serde(default = "default_bw_grid")]
        grid_size: usize,
    },
    Fixed {
        sigma: f64,
    },
}

fn default_bw_min() -> f64 {
    BandwidthSearch::default().min
}
fn default_bw_max() -> f64 {
    BandwidthSearch::default().max
}
fn default_bw_grid() -> usize {
    BandwidthSearch::default().grid_size
}

impl Default for BandwidthConfig {
    fn default() -> Self {
        BandwidthConfig::Search {
            min: default_bw_min(),
            max: default_bw_max(),
            grid_size: default_bw_grid(),
        }
    }
}

impl BandwidthConfig {
    pub fn spec(&self) -> BandwidthSpec {
        match *self {
            BandwidthConfig::Search {
                min,
                max,
                grid_size,
            } => BandwidthSpec::Search(BandwidthSearch {
                min,
                max,
                grid_size,
            }),
            BandwidthConfig::Fixed { sigma } => BandwidthSpec::Fixed(sigma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessConfig {
    #[serde(default = "default_sample_sizes")]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_subsets")]
    pub subsets: usize,
    #[serde(default = "default_demonstrations")]
    pub demonstrations: usize,
    /// Model the simulated demonstrators follow.
    #[serde(default = "default_demonstrator")]
    pub demonstrator: String,
}

fn default_sample_sizes() -> Vec<usize> {
    vec![10, 30, 100, 300]
}
fn default_subsets() -> usize {
    10
}
fn default_demonstrations() -> usize {
    12
}
fn default_demonstrator() -> String {
    "less".into()
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self {
            sample_sizes: default_sample_sizes(),
            subsets: default_subsets(),
            demonstrations: default_demonstrations(),
            demonstrator: default_demonstrator(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MisspecifyConfig {
    /// Similarity-only features appended after the world's reward features.
    #[serde(default = "default_extra_features")]
    pub extra_features: Vec<String>,
}

fn default_extra_features() -> Vec<String> {
    vec!["mean-x".into(), "mean-y".into()]
}

impl Default for MisspecifyConfig {
    fn default() -> Self {
        Self {
            extra_features: default_extra_features(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurkConfig {
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
}

fn default_lambdas() -> Vec<f64> {
    (1..=40).map(|i| f64::from(i) * 0.05).collect()
}

impl Default for TurkConfig {
    fn default() -> Self {
        Self {
            lambdas: default_lambdas(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world: Option<PathBuf>,
    #[serde(default = "default_max_length")]
    pub max_length: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_demos_per_set")]
    pub demos_per_set: usize,
    #[serde(default = "default_seeds")]
    pub seeds: SeedSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub theta_grid: ThetaGridConfig,
    #[serde(default)]
    pub bandwidth: BandwidthConfig,
    #[serde(default)]
    pub robustness: RobustnessConfig,
    #[serde(default)]
    pub misspecify: MisspecifyConfig,
    #[serde(default)]
    pub turk: TurkConfig,
}

fn default_max_length() -> usize {
    13
}
fn default_beta() -> f64 {
    5.0
}
fn default_demos_per_set() -> usize {
    5
}
fn default_seeds() -> SeedSpec {
    SeedSpec::Count(50)
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.kind != ExperimentKind::TurkPredict && self.world.is_none() {
            return Err(HarnessError::Config(format!(
                "experiment kind {} needs a `world` file",
                self.kind.as_str()
            )));
        }
        if self.seeds.seeds().is_empty() {
            return Err(HarnessError::Config("seed list must not be empty".into()));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(HarnessError::Config(format!(
                "beta {} is invalid",
                self.beta
            )));
        }
        if self.demos_per_set == 0 {
            return Err(HarnessError::Config(
                "demos_per_set must be positive".into(),
            ));
        }
        if self.robustness.subsets < 2 {
            return Err(HarnessError::Config(
                "robustness.subsets must be at least 2".into(),
            ));
        }
        if self.robustness.demonstrations == 0 || self.robustness.sample_sizes.is_empty() {
            return Err(HarnessError::Config(
                "robustness needs demonstrations and sample sizes".into(),
            ));
        }
        if let Some(&bad) = self
            .turk
            .lambdas
            .iter()
            .find(|l| !(l.is_finite() && **l > 0.0))
        {
            return Err(HarnessError::Config(format!(
                "lambda {bad} must be positive"
            )));
        }
        if let BandwidthSpec::Search(s) = self.bandwidth.spec() {
            s.validate()?;
        }
        Ok(())
    }
}

/// World file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldFile {
    pub width: u32,
    pub height: u32,
    pub start: [i32; 2],
    pub goal: [i32; 2],
    #[serde(default)]
    pub obstacles: Vec<[i32; 2]>,
    #[serde(default)]
    pub objects: Vec<[i32; 2]>,
    pub features: Vec<String>,
}

fn cell(c: [i32; 2]) -> Cell {
    Cell::new(c[0], c[1])
}

impl WorldFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::parse(path, e))
    }

    pub fn world(&self) -> Result<GridWorld> {
        Ok(GridWorld::new(
            self.width,
            self.height,
            cell(self.start),
            cell(self.goal),
            self.obstacles.iter().copied().map(cell),
            self.objects.iter().copied().map(cell).collect(),
        )?)
    }

    pub fn feature_set(&self) -> Result<FeatureSet> {
        parse_features(&self.features)
    }
}

pub fn parse_features(names: &[String]) -> Result<FeatureSet> {
    let descriptors = names
        .iter()
        .map(|s| s.parse::<FeatureDescriptor>())
        .collect::<less_core::Result<Vec<_>>>()?;
    Ok(FeatureSet::new(descriptors)?)
}

/// Sets `a.b.c = value` in a TOML table. The value is parsed as a TOML value
/// and falls back to a plain string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| {
        HarnessError::Config(format!(
            "override {assignment:?} is not of the form key=value"
        ))
    })?;
    let value = parse_override_value(raw.trim());
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(HarnessError::Config(format!(
            "override key {key:?} is malformed"
        )));
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry((*p).to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| {
            HarnessError::Config(format!("override key {key:?}: `{p}` is not a table"))
        })?;
    }
    cur.insert((*last).to_string(), value);
    Ok(())
}

fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// A parsed config plus the files it references.
#[derive(Debug, Clone)]
pub struct LoadedExperiment {
    pub config: ExperimentConfig,
    pub world: Option<(WorldFile, GridWorld, FeatureSet)>,
    pub config_hash: String,
}

impl LoadedExperiment {
    /// Reads `path`, applies `overrides` (in order), resolves the world file
    /// and computes the config hash.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut table: toml::Table = text.parse().map_err(|e| HarnessError::parse(path, e))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut config: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| HarnessError::parse(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if let Some(w) = &config.world {
            if w.is_relative() {
                config.world = Some(base.join(w));
            }
        }
        Self::from_config(config)
    }

    pub fn from_config(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let world = match &config.world {
            Some(p) => {
                let wf = WorldFile::load(p)?;
                let gw = wf.world()?;
                let fs = wf.feature_set()?;
                Some((wf, gw, fs))
            }
            None => None,
        };
        let config_hash = hash_config(&config, world.as_ref().map(|w| &w.0))?;
        Ok(Self {
            config,
            world,
            config_hash,
        })
    }

    /// The configured grid; `ternary` spans `{-1, 0, 1}^k` minus zero over the
    /// world's `k` reward features.
    pub fn theta_grid(&self) -> Result<ThetaGrid> {
        let g = &self.config.theta_grid;
        match (&g.candidates, &g.labels) {
            (Some(c), Some(l)) => Ok(ThetaGrid::new(c.clone(), l.clone())?),
            (Some(c), None) => Ok(ThetaGrid::from_candidates(c.clone())?),
            (None, _) if g.ternary => {
                let k = self.world.as_ref().map_or(2, |w| w.2.len());
                Ok(ThetaGrid::ternary(k)?)
            }
            (None, _) => Err(HarnessError::Config(
                "theta_grid needs `candidates` or `ternary = true`".into(),
            )),
        }
    }
}

#[derive(Serialize)]
struct HashInput<'a> {
    config: ExperimentConfig,
    world: Option<&'a WorldFile>,
}

/// The effective config and world as TOML, with the output directory and
/// world path removed. This is what gets hashed and echoed into run outputs.
pub fn canonical_text(config: &ExperimentConfig, world: Option<&WorldFile>) -> Result<String> {
    let mut c = config.clone();
    c.output_dir = PathBuf::new();
    c.world = None;
    toml::to_string(&HashInput { config: c, world })
        .map_err(|e| HarnessError::Config(format!("cannot serialize config: {e}")))
}

/// SHA-256 over the canonical serialization of the effective config and
/// world, excluding paths. First 16 hex digits.
pub fn hash_config(config: &ExperimentConfig, world: Option<&WorldFile>) -> Result<String> {
    let text = canonical_text(config, world)?;
    let digest = Sha256::digest(text.as_bytes());
    Ok(hex::encode(digest)[..16].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
kind = "inference-compare"
world = "w.toml"
"#;

    #[test]
    fn defaults_fill_in() {
        let c: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        assert_eq!(c.beta, 5.0);
        assert_eq!(c.demos_per_set, 5);
        assert_eq!(c.seeds.seeds().len(), 50);
        assert_eq!(c.robustness.sample_sizes, vec![10, 30, 100, 300]);
        assert_eq!(c.bandwidth.spec(), BandwidthSpec::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = format!("{MINIMAL}\nbetta = 3.0\n");
        assert!(toml::from_str::<ExperimentConfig>(&bad).is_err());
    }

    #[test]
    fn overrides_apply_dotted_keys() {
        let mut t: toml::Table = MINIMAL.parse().unwrap();
        apply_override(&mut t, "beta=2.5").unwrap();
        apply_override(&mut t, "bandwidth.mode=fixed").unwrap();
        apply_override(&mut t, "bandwidth.sigma = 0.1").unwrap();
        apply_override(&mut t, "seeds=[3, 4]").unwrap();
        let c: ExperimentConfig = toml::Value::Table(t).try_into().unwrap();
        assert_eq!(c.beta, 2.5);
        assert_eq!(c.bandwidth, BandwidthConfig::Fixed { sigma: 0.1 });
        assert_eq!(c.seeds.seeds(), vec![3, 4]);
        let mut t: toml::Table = MINIMAL.parse().unwrap();
        assert!(apply_override(&mut t, "no-equals").is_err());
        apply_override(&mut t, "beta=1").unwrap();
        assert!(apply_override(&mut t, "beta.x=1").is_err());
    }

    #[test]
    fn hash_ignores_output_dir_but_not_parameters() {
        let a: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(
            hash_config(&a, None).unwrap(),
            hash_config(&b, None).unwrap()
        );
        b.beta = 1.0;
        assert_ne!(
            hash_config(&a, None).unwrap(),
            hash_config(&b, None).unwrap()
        );
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        c.schema_version = 2;
        assert!(c.validate().is_err());
        let mut c: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        c.seeds = SeedSpec::List(vec![]);
        assert!(c.validate().is_err());
        let mut c: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        c.world = None;
        assert!(c.validate().is_err());
        c.kind = ExperimentKind::TurkPredict;
        assert!(c.validate().is_ok());
    }
}
