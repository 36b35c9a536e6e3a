//! Simulated demonstrations drawn from a choice model at a fixed reward.

use alloc::format;
use alloc::vec::Vec;

use crate::env::{
    compute_features, FeatureDescriptor, FeatureSet, Featured, GridWorld, Trajectory, TrajectorySet,
};
use crate::error::{Error, Result};
use crate::models::{self, ChoiceDistribution, ModelKind, RewardModel};
use crate::rng::SeededRng;
use crate::similarity::{BandwidthSpec, Kernel};

/// Demonstrations plus everything needed to regenerate them.
#[derive(Debug, Clone, PartialEq)]
pub struct DemonstrationSet {
    pub demos: Vec<Trajectory>,
    /// Positions of `demos` in the generating set.
    pub indices: Vec<usize>,
    pub ground_truth: Vec<f64>,
    pub beta: f64,
    pub model_kind: ModelKind,
    pub seed: u64,
}

/// `n` i.i.d. inverse-CDF draws over the distribution's canonical order.
pub fn draw_indices(dist: &ChoiceDistribution, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = SeededRng::new(seed);
    let probs = dist.probs();
    // last index with positive mass absorbs rounding at the top of the CDF
    let last = probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1);
    (0..n)
        .map(|_| {
            let u = rng.uniform();
            let mut acc = 0.0;
            for (i, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc && p > 0.0 {
                    return i;
                }
            }
            last
        })
        .collect()
}

fn assemble(
    set: &TrajectorySet,
    indices: Vec<usize>,
    theta_star: &[f64],
    beta: f64,
    model_kind: ModelKind,
    seed: u64,
) -> DemonstrationSet {
    DemonstrationSet {
        demos: indices
            .iter()
            .map(|&i| set.trajectories()[i].clone())
            .collect(),
        indices,
        ground_truth: theta_star.to_vec(),
        beta,
        model_kind,
        seed,
    }
}

/// Draws `n` demonstrations (with replacement) from `model_kind` at `theta_star`.
pub fn sample_demos(
    set: &TrajectorySet,
    theta_star: &[f64],
    beta: f64,
    model_kind: ModelKind,
    kernel: Option<&Kernel>,
    n: usize,
    seed: u64,
) -> Result<DemonstrationSet> {
    if n == 0 {
        return Err(Error::argument("demonstration count must be positive"));
    }
    if model_kind == ModelKind::Boltzmann && kernel.is_some() {
        return Err(Error::config(
            "a kernel is only meaningful for the LESS sampler",
        ));
    }
    let model = RewardModel::new(theta_star.to_vec(), beta)?;
    let dist = models::choice_distribution(model_kind, set, &model, kernel)?;
    let indices = draw_indices(&dist, n, seed);
    Ok(assemble(set, indices, theta_star, beta, model_kind, seed))
}

/// LESS distribution whose similarity sees `extended` features while the
/// reward sees only the first `theta_star.len()` of them.
pub fn misspecified_distribution(
    set: &TrajectorySet,
    world: &GridWorld,
    extended: &FeatureSet,
    theta_star: &[f64],
    beta: f64,
    bandwidth: &BandwidthSpec,
) -> Result<(ChoiceDistribution, Kernel)> {
    for needed in [FeatureDescriptor::MeanX, FeatureDescriptor::MeanY] {
        if !extended.descriptors()[theta_star.len().min(extended.len())..].contains(&needed) {
            return Err(Error::config(format!(
                "extended feature set must add {needed} after the reward features"
            )));
        }
    }
    let ext = compute_features(set, world, extended)?;
    let kernel = bandwidth.resolve(&ext)?;
    let mut padded = theta_star.to_vec();
    padded.resize(extended.len(), 0.0);
    let model = RewardModel::new(padded, beta)?;
    let dist = models::less(ext.feature_vectors()?, &model, &kernel)?;
    Ok((dist, kernel))
}

/// LESS demonstrations under a feature space the inference side does not see.
///
/// `extended` lists the reward features first (matching `theta_star`), then
/// the extra similarity-only features, which must include `mean-x` and
/// `mean-y`. The bandwidth is resolved on the extended features.
#[allow(clippy::too_many_arguments)]
pub fn sample_demos_misspecified(
    set: &TrajectorySet,
    world: &GridWorld,
    extended: &FeatureSet,
    theta_star: &[f64],
    beta: f64,
    bandwidth: &BandwidthSpec,
    n: usize,
    seed: u64,
) -> Result<DemonstrationSet> {
    if n == 0 {
        return Err(Error::argument("demonstration count must be positive"));
    }
    let (dist, _) = misspecified_distribution(set, world, extended, theta_star, beta, bandwidth)?;
    let indices = draw_indices(&dist, n, seed);
    Ok(assemble(
        set,
        indices,
        theta_star,
        beta,
        ModelKind::Less,
        seed,
    ))
}
