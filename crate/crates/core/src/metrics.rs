//! Inference-quality and robustness measures.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::inference::{map_index, Belief, ThetaGrid};
use crate::math;

/// Added to every posterior entry (before renormalizing) ahead of divergence
/// computations.
pub const KL_SMOOTHING: f64 = 1e-12;

/// 1 when the MAP candidate is the ground truth, else 0.
pub fn true_match(belief: &Belief, _grid: &ThetaGrid, theta_star_index: usize) -> u8 {
    u8::from(map_index(belief.probs()) == theta_star_index)
}

/// Posterior mass on the ground truth.
pub fn true_posterior(belief: &Belief, theta_star_index: usize) -> f64 {
    belief.probs()[theta_star_index]
}

/// Posteriors over a shared grid with a provenance label.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorCollection {
    pub posteriors: Vec<Belief>,
    pub provenance: String,
}

impl PosteriorCollection {
    pub fn kl_aggregate(&self) -> Result<f64> {
        kl_aggregate(&self.posteriors)
    }
}

fn smooth(b: &Belief) -> Vec<f64> {
    let total: f64 = b.probs().iter().map(|p| p + KL_SMOOTHING).sum();
    b.probs()
        .iter()
        .map(|p| (p + KL_SMOOTHING) / total)
        .collect()
}

/// `KL(P‖Q) = Σ P log(P/Q)` in nats.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| {
            if pi > 0.0 {
                pi * (math::log(pi) - math::log(qi))
            } else {
                0.0
            }
        })
        .sum()
}

/// Sum of `KL(P‖Q)` over all ordered pairs of (smoothed) posteriors.
pub fn kl_aggregate(posteriors: &[Belief]) -> Result<f64> {
    if posteriors.len() < 2 {
        return Err(Error::argument("KLAggregate needs at least two posteriors"));
    }
    let n = posteriors[0].len();
    if let Some(b) = posteriors.iter().find(|b| b.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let smoothed: Vec<Vec<f64>> = posteriors.iter().map(smooth).collect();
    if smoothed.iter().flatten().any(|&p| p.is_nan() || p <= 0.0) {
        return Err(Error::NumericalDegeneracy(
            "posterior entry is zero after smoothing".into(),
        ));
    }
    let mut total = 0.0;
    for p in &smoothed {
        for q in &smoothed {
            total += kl_divergence(p, q);
        }
    }
    // each KL is nonnegative up to rounding
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn b(v: &[f64]) -> Belief {
        Belief::new(v.to_vec()).unwrap()
    }

    #[test]
    fn true_match_examples() {
        let g = ThetaGrid::ternary(2).unwrap();
        let mut conc = vec![0.0; 8];
        conc[3] = 1.0;
        assert_eq!(true_match(&b(&conc), &g, 3), 1);
        assert_eq!(true_match(&b(&conc), &g, 2), 0);
        assert_eq!(true_match(&Belief::uniform(8).unwrap(), &g, 3), 0);
    }

    #[test]
    fn true_posterior_examples() {
        assert_eq!(true_posterior(&Belief::uniform(8).unwrap(), 5), 0.125);
        assert_eq!(true_posterior(&b(&[0.0, 1.0]), 1), 1.0);
        assert_eq!(true_posterior(&b(&[0.6, 0.3, 0.1]), 1), 0.3);
    }

    #[test]
    fn kl_aggregate_examples() {
        let p = b(&[0.5, 0.5]);
        let q = b(&[0.9, 0.1]);
        // direct-summation oracle
        let kl_pq = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        let kl_qp = 0.9 * (0.9f64 / 0.5).ln() + 0.1 * (0.1f64 / 0.5).ln();
        let v = kl_aggregate(&[p.clone(), q.clone()]).unwrap();
        assert!((v - (kl_pq + kl_qp)).abs() < 1e-9);
        assert!((v - 0.8789).abs() < 1e-4);
        let four = kl_aggregate(&[p.clone(), q.clone(), p.clone(), q.clone()]).unwrap();
        assert!((four - 4.0 * v).abs() < 1e-9);
        assert_eq!(
            kl_aggregate(&[p.clone(), p.clone(), p.clone()]).unwrap(),
            0.0
        );
        assert!(kl_aggregate(core::slice::from_ref(&p)).is_err());
        assert!(kl_aggregate(&[p, b(&[0.2, 0.3, 0.5])]).is_err());
    }

    #[test]
    fn zero_entries_are_smoothed() {
        let v = kl_aggregate(&[b(&[1.0, 0.0]), b(&[0.0, 1.0])]).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }
}
