//! Bayesian belief updates over a discrete grid of reward parameters.
//!
//! A demonstration's likelihood under `θ` is its probability in the chosen
//! model's distribution over the normalizer set, so the demonstration must be
//! a member of that set. Posteriors are accumulated in log space and
//! normalized once per update.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::env::{Featured, Trajectory, TrajectorySet};
use crate::error::{Error, Result};
use crate::math;
use crate::models::{self, ChoiceDistribution, ModelKind, RewardModel};
use crate::similarity::{self, Kernel};

/// Smallest total unnormalized posterior mass accepted by [`update`].
pub const MIN_POSTERIOR_MASS: f64 = 1e-300;

/// Ordered candidate reward weights with display labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGrid {
    candidates: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl ThetaGrid {
    pub fn new(candidates: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::config("theta grid must not be empty"));
        }
        if labels.len() != candidates.len() {
            return Err(Error::config(format!(
                "theta grid has {} candidates but {} labels",
                candidates.len(),
                labels.len()
            )));
        }
        let k = candidates[0].len();
        if k == 0 {
            return Err(Error::config(
                "theta candidates must have at least one component",
            ));
        }
        for (i, c) in candidates.iter().enumerate() {
            if c.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(format!("theta candidate {i} is not finite")));
            }
            if candidates[..i].contains(c) {
                return Err(Error::config(format!("theta candidate {i} is a duplicate")));
            }
        }
        Ok(Self { candidates, labels })
    }

    /// Labels each candidate by its components, e.g. `(-1,0)`.
    pub fn from_candidates(candidates: Vec<Vec<f64>>) -> Result<Self> {
        let labels = candidates
            .iter()
            .map(|c| {
                let parts: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
                format!("({})", parts.join(","))
            })
            .collect();
        Self::new(candidates, labels)
    }

    /// Every vector in `{-1, 0, 1}^k` except the zero vector, in lexicographic order.
    pub fn ternary(k: usize) -> Result<Self> {
        let total = 3usize
            .checked_pow(k as u32)
            .ok_or_else(|| Error::config("ternary grid too large"))?;
        let candidates = (0..total)
            .map(|mut code| {
                let mut c = alloc::vec![0.0; k];
                for slot in c.iter_mut().rev() {
                    *slot = (code % 3) as f64 - 1.0;
                    code /= 3;
                }
                c
            })
            .filter(|c| c.iter().any(|&v| v != 0.0))
            .collect();
        Self::from_candidates(candidates)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.candidates[0].len()
    }

    pub fn candidates(&self) -> &[Vec<f64>] {
        &self.candidates
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, theta: &[f64]) -> Option<usize> {
        self.candidates.iter().position(|c| c == theta)
    }
}

/// A probability vector over a [`ThetaGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::argument("belief must not be empty"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::argument(
                "belief entries must be finite and nonnegative",
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::argument(format!("belief sums to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::argument("belief must not be empty"));
        }
        Ok(Self {
            probs: alloc::vec![1.0 / n as f64; n],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `b'(θᵢ) ∝ b(θᵢ) · exp(log_lik(i))`.
    pub fn reweighted(&self, log_lik: impl Fn(usize) -> f64) -> Result<Belief> {
        let log_post: Vec<f64> = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                if p > 0.0 {
                    math::log(p) + log_lik(i)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        if log_post.iter().any(|v| v.is_nan()) {
            return Err(Error::NumericalDegeneracy("posterior weight is NaN".into()));
        }
        let log_mass = math::log_sum_exp(&log_post);
        if !(log_mass.is_finite() && log_mass >= math::log(MIN_POSTERIOR_MASS)) {
            return Err(Error::NumericalDegeneracy(format!(
                "total posterior mass exp({log_mass}) is below {MIN_POSTERIOR_MASS:e}"
            )));
        }
        Ok(Belief {
            probs: log_post.iter().map(|&l| math::exp(l - log_mass)).collect(),
        })
    }
}

fn check_belief(belief: &Belief, grid: &ThetaGrid) -> Result<()> {
    if belief.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: belief.len(),
        });
    }
    Ok(())
}

/// Log choice probabilities of every set member under every grid candidate,
/// for one model kind and rationality coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodTable {
    kind: ModelKind,
    distributions: Vec<ChoiceDistribution>,
}

impl LikelihoodTable {
    pub fn build<S: Featured + ?Sized>(
        set: &S,
        grid: &ThetaGrid,
        kind: ModelKind,
        kernel: Option<&Kernel>,
        beta: f64,
    ) -> Result<Self> {
        let features = set.feature_vectors()?;
        let dens = match (kind, kernel) {
            (ModelKind::Less, Some(k)) => Some(similarity::density(features, k)?),
            (ModelKind::Less, None) => return Err(Error::config("the LESS model needs a kernel")),
            (ModelKind::Boltzmann, _) => None,
        };
        let distributions = grid
            .candidates()
            .iter()
            .map(|theta| {
                let model = RewardModel::new(theta.clone(), beta)?;
                match &dens {
                    Some(d) => models::less_with_density(features, &model, d),
                    None => models::boltzmann(features, &model),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind,
            distributions,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn distribution(&self, theta_index: usize) -> &ChoiceDistribution {
        &self.distributions[theta_index]
    }

    pub fn theta_count(&self) -> usize {
        self.distributions.len()
    }

    pub fn option_count(&self) -> usize {
        self.distributions[0].len()
    }

    pub fn log_likelihood(&self, theta_index: usize, option: usize) -> f64 {
        self.distributions[theta_index].log_probs()[option]
    }

    fn check(&self, belief: &Belief, option: usize) -> Result<()> {
        if belief.len() != self.theta_count() {
            return Err(Error::DimensionMismatch {
                expected: self.theta_count(),
                found: belief.len(),
            });
        }
        if option >= self.option_count() {
            return Err(Error::argument(format!(
                "demonstration index {option} outside a set of {}",
                self.option_count()
            )));
        }
        Ok(())
    }

    /// Posterior after observing the member at `option`.
    pub fn update(&self, belief: &Belief, option: usize) -> Result<Belief> {
        self.check(belief, option)?;
        belief.reweighted(|i| self.log_likelihood(i, option))
    }

    /// Posterior after observing every member in `options`, applied as one
    /// reweighting by the summed log-likelihoods.
    pub fn batch_update(&self, belief: &Belief, options: &[usize]) -> Result<Belief> {
        if options.is_empty() {
            if belief.len() != self.theta_count() {
                return Err(Error::DimensionMismatch {
                    expected: self.theta_count(),
                    found: belief.len(),
                });
            }
            return Ok(belief.clone());
        }
        for &o in options {
            self.check(belief, o)?;
        }
        belief.reweighted(|i| options.iter().map(|&o| self.log_likelihood(i, o)).sum())
    }

    /// Posterior-weighted mixture of the per-candidate distributions.
    pub fn predict(&self, belief: &Belief) -> Result<ChoiceDistribution> {
        if belief.len() != self.theta_count() {
            return Err(Error::DimensionMismatch {
                expected: self.theta_count(),
                found: belief.len(),
            });
        }
        let mut mix = alloc::vec![0.0; self.option_count()];
        for (w, d) in belief.probs().iter().zip(&self.distributions) {
            if *w == 0.0 {
                continue;
            }
            for (m, p) in mix.iter_mut().zip(d.probs()) {
                *m += w * p;
            }
        }
        ChoiceDistribution::from_probs(mix)
    }
}

fn demo_index(demo: &Trajectory, set: &TrajectorySet) -> Result<usize> {
    set.index_of(demo)
        .ok_or_else(|| Error::argument("demonstration is not a member of the normalizer set"))
}

/// `p(demo | θ)` under `kind` over `set`.
pub fn likelihood(
    demo: &Trajectory,
    set: &TrajectorySet,
    theta: &[f64],
    kind: ModelKind,
    kernel: Option<&Kernel>,
    beta: f64,
) -> Result<f64> {
    let idx = demo_index(demo, set)?;
    let model = RewardModel::new(theta.to_vec(), beta)?;
    let dist = models::choice_distribution(kind, set, &model, kernel)?;
    Ok(dist.probs()[idx])
}

pub fn update(
    belief: &Belief,
    demo: &Trajectory,
    set: &TrajectorySet,
    grid: &ThetaGrid,
    kind: ModelKind,
    kernel: Option<&Kernel>,
    beta: f64,
) -> Result<Belief> {
    batch_update(
        belief,
        core::slice::from_ref(demo),
        set,
        grid,
        kind,
        kernel,
        beta,
    )
}

pub fn batch_update(
    belief: &Belief,
    demos: &[Trajectory],
    set: &TrajectorySet,
    grid: &ThetaGrid,
    kind: ModelKind,
    kernel: Option<&Kernel>,
    beta: f64,
) -> Result<Belief> {
    check_belief(belief, grid)?;
    let idx = demos
        .iter()
        .map(|d| demo_index(d, set))
        .collect::<Result<Vec<_>>>()?;
    if idx.is_empty() {
        return Ok(belief.clone());
    }
    let table = LikelihoodTable::build(set, grid, kind, kernel, beta)?;
    table.batch_update(belief, &idx)
}

/// `p(ξ) = Σᵢ b(θᵢ) · p(ξ | θᵢ)`.
pub fn predict(
    belief: &Belief,
    set: &TrajectorySet,
    kind: ModelKind,
    kernel: Option<&Kernel>,
    beta: f64,
    grid: &ThetaGrid,
) -> Result<ChoiceDistribution> {
    check_belief(belief, grid)?;
    LikelihoodTable::build(set, grid, kind, kernel, beta)?.predict(belief)
}

/// Lowest index attaining the largest posterior probability.
pub fn map_theta(belief: &Belief, _grid: &ThetaGrid) -> usize {
    map_index(belief.probs())
}

pub(crate) fn map_index(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}
