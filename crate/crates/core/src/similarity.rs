//! RBF similarity kernel, feature-space densities and bandwidth selection.
//!
//! The kernel is `s(x, y) = 1/(σ√(2π)) · exp(-‖x - y‖² / (2σ²))` in any number
//! of dimensions; the one-dimensional prefactor cancels inside the LESS
//! normalization and only shifts the bandwidth objective by a constant.
//!
//! Bandwidth selection maximizes the leave-one-out log likelihood
//!
//! ```text
//! L(σ) = Σᵢ log( 1/(n-1) · Σ_{j≠i} s(φᵢ, φⱼ) )
//! ```
//!
//! over a log-spaced grid. Keeping the self term `j = i` would make the
//! objective grow without bound as `σ → 0`, since `s(φᵢ, φᵢ) = 1/(σ√(2π))`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::env::{FeatureVector, Featured};
use crate::error::{Error, Result};
use crate::math::{self, INV_SQRT_2PI};

/// An RBF kernel with bandwidth `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    bandwidth: f64,
}

impl Kernel {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::argument(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(Self { bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Kernel value at zero distance.
    pub fn peak(&self) -> f64 {
        INV_SQRT_2PI / self.bandwidth
    }

    /// Kernel value for a given squared distance.
    pub fn at_squared_distance(&self, d2: f64) -> f64 {
        self.peak() * math::exp(self.exponent(d2))
    }

    fn exponent(&self, d2: f64) -> f64 {
        -d2 / (2.0 * self.bandwidth * self.bandwidth)
    }
}

fn check_dims(x: &FeatureVector, y: &FeatureVector) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(())
}

fn check_uniform_dims(features: &[FeatureVector]) -> Result<()> {
    if let Some(first) = features.first() {
        for f in features {
            check_dims(first, f)?;
        }
    }
    Ok(())
}

pub fn kernel_eval(x: &FeatureVector, y: &FeatureVector, kernel: &Kernel) -> Result<f64> {
    check_dims(x, y)?;
    Ok(kernel.at_squared_distance(math::squared_distance(x.values(), y.values())))
}

/// Per-option kernel density `Σⱼ s(φᵢ, φⱼ)`, self term included.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    densities: Vec<f64>,
    log_densities: Vec<f64>,
}

impl DensityProfile {
    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn log_densities(&self) -> &[f64] {
        &self.log_densities
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }
}

/// Densities of every option. The sum for each `i` runs over `j` in index
/// order, so results do not depend on how callers split the work.
pub fn density<S: Featured + ?Sized>(set: &S, kernel: &Kernel) -> Result<DensityProfile> {
    let features = set.feature_vectors()?;
    check_uniform_dims(features)?;
    let log_peak = math::log(kernel.peak());
    let mut densities = Vec::with_capacity(features.len());
    let mut log_densities = Vec::with_capacity(features.len());
    for fi in features {
        // the self term contributes exp(0) = 1, so `sum >= 1`
        let sum: f64 = features
            .iter()
            .map(|fj| math::exp(kernel.exponent(math::squared_distance(fi.values(), fj.values()))))
            .sum();
        densities.push(kernel.peak() * sum);
        log_densities.push(log_peak + math::log(sum));
    }
    Ok(DensityProfile {
        densities,
        log_densities,
    })
}

/// Log-spaced bandwidth grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthSearch {
    pub min: f64,
    pub max: f64,
    pub grid_size: usize,
}

impl Default for BandwidthSearch {
    fn default() -> Self {
        Self {
            min: 1e-3,
            max: 1e1,
            grid_size: 200,
        }
    }
}

impl BandwidthSearch {
    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min > 0.0 && self.max >= self.min)
        {
            return Err(Error::config(format!(
                "bandwidth search range [{}, {}] is invalid",
                self.min, self.max
            )));
        }
        if self.grid_size == 0 || (self.grid_size == 1 && self.max != self.min) {
            return Err(Error::config("bandwidth grid needs at least two points"));
        }
        Ok(())
    }

    /// Grid points in ascending order.
    pub fn grid(&self) -> Vec<f64> {
        if self.grid_size == 1 {
            return alloc::vec![self.min];
        }
        let lo = math::log(self.min);
        let step = (math::log(self.max) - lo) / (self.grid_size - 1) as f64;
        (0..self.grid_size)
            .map(|i| {
                if i + 1 == self.grid_size {
                    self.max
                } else {
                    math::exp(lo + step * i as f64)
                }
            })
            .collect()
    }
}

/// How a kernel is obtained for a working set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthSpec {
    Search(BandwidthSearch),
    Fixed(f64),
}

impl Default for BandwidthSpec {
    fn default() -> Self {
        BandwidthSpec::Search(BandwidthSearch::default())
    }
}

impl BandwidthSpec {
    pub fn resolve<S: Featured + ?Sized>(&self, set: &S) -> Result<Kernel> {
        match *self {
            BandwidthSpec::Fixed(sigma) => Kernel::new(sigma),
            BandwidthSpec::Search(search) => select_bandwidth(set, &search),
        }
    }
}

/// Distinct feature vectors with multiplicities, in first-seen order.
struct Grouped<'a> {
    reps: Vec<&'a FeatureVector>,
    counts: Vec<usize>,
}

fn group_exact(features: &[FeatureVector]) -> Grouped<'_> {
    let mut slot: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    let mut reps = Vec::new();
    let mut counts = Vec::new();
    for f in features {
        let key: Vec<u64> = f.values().iter().map(|v| v.to_bits()).collect();
        match slot.get(&key) {
            Some(&g) => counts[g] += 1,
            None => {
                slot.insert(key, reps.len());
                reps.push(f);
                counts.push(1);
            }
        }
    }
    Grouped { reps, counts }
}

/// Leave-one-out objective evaluator with precomputed pairwise distances
/// between distinct feature vectors.
pub struct LooObjective {
    counts: Vec<usize>,
    sq_dist: Vec<f64>,
    n: usize,
}

impl LooObjective {
    pub fn new<S: Featured + ?Sized>(set: &S) -> Result<Self> {
        let features = set.feature_vectors()?;
        check_uniform_dims(features)?;
        if features.len() < 2 {
            return Err(Error::argument(
                "bandwidth selection needs at least two trajectories",
            ));
        }
        let g = group_exact(features);
        if g.reps.len() < 2 {
            return Err(Error::DegenerateFeatures);
        }
        let u = g.reps.len();
        let mut sq_dist = alloc::vec![0.0; u * u];
        for a in 0..u {
            for b in 0..u {
                sq_dist[a * u + b] = math::squared_distance(g.reps[a].values(), g.reps[b].values());
            }
        }
        Ok(Self {
            counts: g.counts,
            sq_dist,
            n: features.len(),
        })
    }

    /// `Σᵢ log( 1/(n-1) · Σ_{j≠i} s(φᵢ, φⱼ) )` at bandwidth `sigma`.
    pub fn evaluate(&self, sigma: f64) -> f64 {
        let u = self.counts.len();
        let inv_two_var = 1.0 / (2.0 * sigma * sigma);
        let offset = math::log(INV_SQRT_2PI / sigma) - math::log((self.n - 1) as f64);
        let mut terms = Vec::with_capacity(u);
        let mut total = 0.0;
        for a in 0..u {
            terms.clear();
            for b in 0..u {
                // copies of `a` other than the held-out point sit at distance zero
                let mult = if a == b {
                    self.counts[b] - 1
                } else {
                    self.counts[b]
                };
                if mult > 0 {
                    terms.push(math::log(mult as f64) - self.sq_dist[a * u + b] * inv_two_var);
                }
            }
            total += self.counts[a] as f64 * (offset + math::log_sum_exp(&terms));
        }
        total
    }
}

/// Leave-one-out objective at `sigma`.
pub fn loo_objective<S: Featured + ?Sized>(set: &S, sigma: f64) -> Result<f64> {
    Ok(LooObjective::new(set)?.evaluate(sigma))
}

/// Grid-search maximizer of the leave-one-out objective; ties go to the
/// smaller bandwidth.
pub fn select_bandwidth<S: Featured + ?Sized>(set: &S, search: &BandwidthSearch) -> Result<Kernel> {
    search.validate()?;
    let objective = LooObjective::new(set)?;
    let mut best: Option<(f64, f64)> = None;
    for sigma in search.grid() {
        let value = objective.evaluate(sigma);
        if value.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, v)| value > v) {
            best = Some((sigma, value));
        }
    }
    let (sigma, _) = best.ok_or_else(|| {
        Error::NumericalDegeneracy("bandwidth objective is NaN on the whole grid".into())
    })?;
    Kernel::new(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec())
    }

    #[test]
    fn kernel_rejects_bad_bandwidth() {
        assert!(Kernel::new(0.0).is_err());
        assert!(Kernel::new(-1.0).is_err());
        assert!(Kernel::new(f64::INFINITY).is_err());
        assert!(Kernel::new(f64::NAN).is_err());
    }

    #[test]
    fn kernel_peak_and_e_fold() {
        let k = Kernel::new(1.0).unwrap();
        let x = fv(&[0.3, -0.2]);
        let peak = kernel_eval(&x, &x, &k).unwrap();
        assert!((peak - 0.398_942_280_401_432_7).abs() < 1e-15);
        // ‖x - y‖² = 2σ²
        let k = Kernel::new(0.5).unwrap();
        let y = fv(&[0.3 + 0.5, -0.2 + 0.5]);
        let v = kernel_eval(&x, &y, &k).unwrap();
        assert!((v - k.peak() * (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn kernel_dimension_mismatch() {
        let k = Kernel::new(1.0).unwrap();
        assert_eq!(
            kernel_eval(&fv(&[1.0]), &fv(&[1.0, 2.0]), &k),
            Err(Error::DimensionMismatch {
                expected: 1,
                found: 2
            })
        );
    }

    #[test]
    fn singleton_and_duplicate_densities() {
        let k = Kernel::new(1.0).unwrap();
        let d = density(&vec![fv(&[0.4])], &k).unwrap();
        assert!((d.densities()[0] - k.peak()).abs() < 1e-15);
        let d = density(&vec![fv(&[0.4, 0.1]), fv(&[0.4, 0.1])], &k).unwrap();
        for v in d.densities() {
            assert!((v - 2.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn missing_features_is_a_state_error() {
        use crate::env::{Cell, GridWorld, Trajectory, TrajectorySet};
        let w = GridWorld::new(2, 1, Cell::new(0, 0), Cell::new(1, 0), [], vec![]).unwrap();
        let set = TrajectorySet::new(vec![Trajectory::from_moves("R", &w).unwrap()]).unwrap();
        assert_eq!(
            density(&set, &Kernel::new(1.0).unwrap()),
            Err(Error::MissingFeatures)
        );
    }

    #[test]
    fn grid_is_log_spaced_and_inclusive() {
        let g = BandwidthSearch::default().grid();
        assert_eq!(g.len(), 200);
        assert!((g[0] - 1e-3).abs() < 1e-18);
        assert_eq!(g[199], 10.0);
        let r0 = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - r0).abs() < 1e-9);
        }
    }

    #[test]
    fn bandwidth_errors() {
        let s = BandwidthSearch::default();
        assert_eq!(
            select_bandwidth(&vec![fv(&[0.2]), fv(&[0.2])], &s),
            Err(Error::DegenerateFeatures)
        );
        assert!(matches!(
            select_bandwidth(&vec![fv(&[0.2])], &s),
            Err(Error::InvalidArgument(_))
        ));
        let bad = BandwidthSearch {
            min: 0.0,
            ..BandwidthSearch::default()
        };
        assert!(select_bandwidth(&vec![fv(&[0.0]), fv(&[1.0])], &bad).is_err());
    }

    #[test]
    fn grouped_objective_matches_direct_loo() {
        // direct O(n²) oracle, no grouping
        let pts = vec![
            fv(&[0.0]),
            fv(&[0.0]),
            fv(&[0.3]),
            fv(&[1.0]),
            fv(&[1.0]),
            fv(&[0.7]),
        ];
        let n = pts.len() as f64;
        for sigma in [0.05, 0.2, 1.3] {
            let k = Kernel::new(sigma).unwrap();
            let direct: f64 = (0..pts.len())
                .map(|i| {
                    let s: f64 = (0..pts.len())
                        .filter(|&j| j != i)
                        .map(|j| kernel_eval(&pts[i], &pts[j], &k).unwrap())
                        .sum();
                    (s / (n - 1.0)).ln()
                })
                .sum();
            let grouped = loo_objective(&pts, sigma).unwrap();
            assert!((direct - grouped).abs() < 1e-10 * direct.abs().max(1.0));
        }
    }
}
