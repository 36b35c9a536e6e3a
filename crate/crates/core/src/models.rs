//! Choice distributions over a finite set of options.
//!
//! All three models share the reward `R(φ) = β · (θ · φ)`:
//!
//! - Boltzmann: `P(i) ∝ exp(R(φᵢ))`
//! - attribute rule (indicator similarity): options with bitwise-equal
//!   features form one group, groups are chosen by `exp(R)`, members split
//!   their group's mass evenly
//! - LESS: `P(i) ∝ exp(R(φᵢ)) / density(i)`
//!
//! Probabilities are normalized in log space after subtracting the largest
//! logit.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::env::{FeatureVector, Featured};
use crate::error::{Error, Result};
use crate::math;
use crate::similarity::{self, DensityProfile, Kernel};

/// Which choice model generates or explains behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Boltzmann,
    Less,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Boltzmann, ModelKind::Less];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Boltzmann => "boltzmann",
            ModelKind::Less => "less",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "boltzmann" => Ok(ModelKind::Boltzmann),
            "less" => Ok(ModelKind::Less),
            other => Err(Error::config(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Linear reward weights `θ` and rationality coefficient `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    theta: Vec<f64>,
    beta: f64,
}

impl RewardModel {
    pub fn new(theta: Vec<f64>, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::argument(format!(
                "beta must be finite and nonnegative, got {beta}"
            )));
        }
        if let Some(bad) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::argument(format!(
                "theta component {bad} is not finite"
            )));
        }
        Ok(Self { theta, beta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

/// `β · (θ · φ)`.
pub fn reward(phi: &FeatureVector, model: &RewardModel) -> Result<f64> {
    if phi.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: phi.len(),
        });
    }
    Ok(model.beta * math::dot(&model.theta, phi.values()))
}

fn rewards(features: &[FeatureVector], model: &RewardModel) -> Result<Vec<f64>> {
    features.iter().map(|f| reward(f, model)).collect()
}

/// A normalized probability vector over a finite option set, with matching
/// log probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceDistribution {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl ChoiceDistribution {
    /// Softmax of `logits` computed with the max-shift.
    pub fn from_logits(logits: &[f64]) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::argument("cannot normalize an empty option set"));
        }
        if logits.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(Error::NumericalDegeneracy(
                "choice logits contain NaN or +inf".into(),
            ));
        }
        let lse = math::log_sum_exp(logits);
        if !lse.is_finite() {
            return Err(Error::NumericalDegeneracy(
                "every option has zero weight".into(),
            ));
        }
        let log_probs: Vec<f64> = logits.iter().map(|l| l - lse).collect();
        let probs = log_probs.iter().map(|&l| math::exp(l)).collect();
        Ok(Self { probs, log_probs })
    }

    /// Wraps an explicit probability vector; entries must be nonnegative and sum to 1.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::argument("empty probability vector"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::argument(
                "probabilities must be finite and nonnegative",
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::argument(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let log_probs = probs.iter().map(|&p| math::log(p)).collect();
        Ok(Self { probs, log_probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

pub fn boltzmann<S: Featured + ?Sized>(set: &S, model: &RewardModel) -> Result<ChoiceDistribution> {
    let r = rewards(set.feature_vectors()?, model)?;
    ChoiceDistribution::from_logits(&r)
}

/// LESS with densities supplied by the caller.
pub fn less_with_density<S: Featured + ?Sized>(
    set: &S,
    model: &RewardModel,
    density: &DensityProfile,
) -> Result<ChoiceDistribution> {
    let features = set.feature_vectors()?;
    if density.len() != features.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            found: density.len(),
        });
    }
    let logits: Vec<f64> = rewards(features, model)?
        .into_iter()
        .zip(density.log_densities())
        .map(|(r, ld)| r - ld)
        .collect();
    ChoiceDistribution::from_logits(&logits)
}

pub fn less<S: Featured + ?Sized>(
    set: &S,
    model: &RewardModel,
    kernel: &Kernel,
) -> Result<ChoiceDistribution> {
    let d = similarity::density(set, kernel)?;
    less_with_density(set, model, &d)
}

/// Attribute rule with indicator intensity: exact-feature groups act as single options.
pub fn attribute_rule<S: Featured + ?Sized>(
    set: &S,
    model: &RewardModel,
) -> Result<ChoiceDistribution> {
    let features = set.feature_vectors()?;
    let r = rewards(features, model)?;
    let mut group_of: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    let mut member_group = Vec::with_capacity(features.len());
    let mut group_reward = Vec::new();
    let mut group_size: Vec<usize> = Vec::new();
    for (f, &ri) in features.iter().zip(&r) {
        let key: Vec<u64> = f.values().iter().map(|v| v.to_bits()).collect();
        let g = *group_of.entry(key).or_insert_with(|| {
            group_reward.push(ri);
            group_size.push(0);
            group_reward.len() - 1
        });
        group_size[g] += 1;
        member_group.push(g);
    }
    let group_lse = math::log_sum_exp(&group_reward);
    if !group_lse.is_finite() {
        return Err(Error::NumericalDegeneracy(
            "attribute weights degenerate".into(),
        ));
    }
    let log_probs: Vec<f64> = member_group
        .iter()
        .map(|&g| group_reward[g] - group_lse - math::log(group_size[g] as f64))
        .collect();
    let probs = log_probs.iter().map(|&l| math::exp(l)).collect();
    Ok(ChoiceDistribution { probs, log_probs })
}

/// Boltzmann or LESS by `kind`; LESS needs a kernel.
pub fn choice_distribution<S: Featured + ?Sized>(
    kind: ModelKind,
    set: &S,
    model: &RewardModel,
    kernel: Option<&Kernel>,
) -> Result<ChoiceDistribution> {
    match kind {
        ModelKind::Boltzmann => boltzmann(set, model),
        ModelKind::Less => {
            let k = kernel.ok_or_else(|| Error::config("the LESS model needs a kernel"))?;
            less(set, model, k)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec())
    }

    fn sum(d: &ChoiceDistribution) -> f64 {
        d.probs().iter().sum()
    }

    #[test]
    fn reward_examples() {
        let phi = fv(&[0.5, 0.25]);
        assert_eq!(
            reward(&phi, &RewardModel::new(vec![0.0, 0.0], 3.0).unwrap()),
            Ok(0.0)
        );
        assert_eq!(
            reward(&phi, &RewardModel::new(vec![4.0, -2.0], 0.0).unwrap()),
            Ok(0.0)
        );
        let r = reward(&phi, &RewardModel::new(vec![1.0, -1.0], 2.0).unwrap()).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        assert!(reward(&fv(&[1.0]), &RewardModel::new(vec![1.0, 1.0], 1.0).unwrap()).is_err());
        assert!(RewardModel::new(vec![1.0], -1.0).is_err());
    }

    #[test]
    fn boltzmann_equal_rewards_is_uniform() {
        let m = RewardModel::new(vec![1.0], 1.0).unwrap();
        let two = boltzmann(&vec![fv(&[0.0]), fv(&[0.0])], &m).unwrap();
        assert_eq!(two.probs(), &[0.5, 0.5]);
        let four = boltzmann(&vec![fv(&[0.2]); 4], &m).unwrap();
        for p in four.probs() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn boltzmann_control_ratio_example() {
        let lambda: f64 = 0.475 / 0.525;
        let m = RewardModel::new(vec![lambda.ln()], 1.0).unwrap();
        let set = vec![fv(&[1.0]), fv(&[0.0]), fv(&[0.0]), fv(&[0.0])];
        let d = boltzmann(&set, &m).unwrap();
        assert!((d.probs()[0] - lambda / (lambda + 3.0)).abs() < 1e-12);
        assert!((d.probs()[0] - 0.2317).abs() < 5e-4);
    }

    #[test]
    fn less_isolated_vs_cluster() {
        // one isolated option, three almost coincident ones
        let set = vec![fv(&[0.0]), fv(&[1.0]), fv(&[1.0 + 1e-6]), fv(&[1.0 - 1e-6])];
        let k = Kernel::new(0.01).unwrap();
        let m = RewardModel::new(vec![0.0], 1.0).unwrap();
        let d = less(&set, &m, &k).unwrap();
        assert!((d.probs()[0] - 0.5).abs() < 1e-6);
        for p in &d.probs()[1..] {
            assert!((p - 1.0 / 6.0).abs() < 1e-6);
        }
        let lambda: f64 = 0.475 / 0.525;
        // left has feature 0, right cluster has feature ≈1; reward for the right is -ln λ
        let m = RewardModel::new(vec![-lambda.ln()], 1.0).unwrap();
        let d = less(&set, &m, &k).unwrap();
        assert!((d.probs()[0] - lambda / (lambda + 1.0)).abs() < 1e-6);
    }

    #[test]
    fn less_equidistant_is_uniform() {
        // vertices of an equilateral triangle
        let h = 3f64.sqrt() / 2.0;
        let set = vec![fv(&[0.0, 0.0]), fv(&[1.0, 0.0]), fv(&[0.5, h])];
        let m = RewardModel::new(vec![0.0, 0.0], 1.0).unwrap();
        let d = less(&set, &m, &Kernel::new(0.7).unwrap()).unwrap();
        for p in d.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn attribute_rule_examples() {
        let m = RewardModel::new(vec![0.0], 1.0).unwrap();
        let d = attribute_rule(&vec![fv(&[0.0]), fv(&[1.0]), fv(&[1.0]), fv(&[1.0])], &m).unwrap();
        assert!((d.probs()[0] - 0.5).abs() < 1e-15);
        for p in &d.probs()[1..] {
            assert!((p - 1.0 / 6.0).abs() < 1e-15);
        }
        let d = attribute_rule(
            &vec![fv(&[0.3]); 5],
            &RewardModel::new(vec![2.0], 1.0).unwrap(),
        )
        .unwrap();
        for p in d.probs() {
            assert!((p - 0.2).abs() < 1e-15);
        }
        let set = vec![fv(&[0.1]), fv(&[0.4]), fv(&[0.9])];
        let m = RewardModel::new(vec![1.7], 2.0).unwrap();
        assert_eq!(
            attribute_rule(&set, &m).unwrap(),
            boltzmann(&set, &m).unwrap()
        );
    }

    #[test]
    fn dispatch_requires_kernel_for_less() {
        let m = RewardModel::new(vec![0.0], 1.0).unwrap();
        let set = vec![fv(&[0.0]), fv(&[1.0])];
        assert!(matches!(
            choice_distribution(ModelKind::Less, &set, &m, None),
            Err(Error::Configuration(_))
        ));
        let d = choice_distribution(ModelKind::Boltzmann, &set, &m, None).unwrap();
        assert!((sum(&d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extreme_rewards_stay_finite() {
        let m = RewardModel::new(vec![700.0], 1.0).unwrap();
        let set = vec![fv(&[1.0]), fv(&[-1.0]), fv(&[0.999])];
        for d in [
            boltzmann(&set, &m).unwrap(),
            less(&set, &m, &Kernel::new(0.1).unwrap()).unwrap(),
            attribute_rule(&set, &m).unwrap(),
        ] {
            assert!(d.probs().iter().all(|p| p.is_finite()));
            assert!(d.log_probs().iter().all(|p| p.is_finite()));
            assert!((sum(&d) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn model_kind_parsing() {
        assert_eq!("LESS".parse::<ModelKind>().unwrap(), ModelKind::Less);
        assert_eq!(
            "boltzmann".parse::<ModelKind>().unwrap(),
            ModelKind::Boltzmann
        );
        assert!("luce".parse::<ModelKind>().is_err());
    }
}
