//! Choice models over finite trajectory sets and Bayesian reward inference.
//!
//! The crate is `no_std` and needs only `alloc`. It covers:
//!
//! - [`env`]: grid worlds, trajectory enumeration, feature extraction, seeded subsampling
//! - [`similarity`]: the RBF similarity kernel, feature-space densities and
//!   leave-one-out bandwidth selection
//! - [`models`]: Boltzmann, attribute-rule and LESS choice distributions
//! - [`inference`]: beliefs over a discrete reward-parameter grid
//! - [`sampler`]: simulated demonstrations drawn from a choice model
//! - [`metrics`]: TrueMatch, TruePosterior and KLAggregate
//!
//! LESS weights each option's exponentiated reward by the inverse of its
//! kernel density in feature space. Options that look alike share probability
//! mass instead of each taking a full Boltzmann share.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod env;
pub mod error;
pub mod inference;
pub mod math;
pub mod metrics;
pub mod models;
pub mod rng;
pub mod sampler;
pub mod similarity;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use env::{
    compute_features, enumerate_trajectories, subsample, Cell, EnumerationLimits,
    FeatureDescriptor, FeatureSet, FeatureVector, Featured, GridWorld, Move, Trajectory,
    TrajectorySet,
};
pub use error::{Error, Result};
pub use inference::{
    batch_update, likelihood, map_theta, predict, update, Belief, LikelihoodTable, ThetaGrid,
};
pub use metrics::{kl_aggregate, true_match, true_posterior, PosteriorCollection};
pub use models::{
    attribute_rule, boltzmann, choice_distribution, less, reward, ChoiceDistribution, ModelKind,
    RewardModel,
};
pub use sampler::{sample_demos, sample_demos_misspecified, DemonstrationSet};
pub use similarity::{
    density, kernel_eval, select_bandwidth, BandwidthSearch, BandwidthSpec, DensityProfile, Kernel,
};
