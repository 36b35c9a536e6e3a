use std::path::PathBuf;

use less_core::{boltzmann, less, ChoiceDistribution, Error, FeatureVector, Kernel, RewardModel};

use super::{begin, finish};
use crate::config::LoadedExperiment;
use crate::error::Result;
use crate::output::{fmt_f64, RowWriter};

/// Four options: `left` alone at feature 0 and three identical `right`
/// options at feature 1.
pub const TURK_OPTIONS: [&str; 4] = ["left", "right-1", "right-2", "right-3"];

#[derive(Debug, Clone)]
pub struct TurkPrediction {
    pub lambda: f64,
    pub boltzmann: ChoiceDistribution,
    pub less: ChoiceDistribution,
}

impl TurkPrediction {
    pub fn left(&self) -> (f64, f64) {
        (self.boltzmann.probs()[0], self.less.probs()[0])
    }
}

/// Choice predictions for one isolated option against a cluster of three,
/// with `exp(reward)` ratio left:right equal to `lambda`.
pub fn run_turk_predict(lambda: f64) -> Result<TurkPrediction> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(
            Error::InvalidArgument(format!("lambda must be positive, got {lambda}")).into(),
        );
    }
    let options: Vec<FeatureVector> = [0.0, 1.0, 1.0, 1.0]
        .iter()
        .map(|&v| FeatureVector::new(vec![v]))
        .collect();
    // reward(left) - reward(right) = ln λ
    let model = RewardModel::new(vec![-lambda.ln()], 1.0)?;
    let kernel = Kernel::new(1e-3)?;
    Ok(TurkPrediction {
        lambda,
        boltzmann: boltzmann(&options, &model)?,
        less: less(&options, &model, &kernel)?,
    })
}

/// Sweeps `turk.lambdas` and writes `predictions.csv` in long format.
pub fn run_turk_sweep(exp: &LoadedExperiment) -> Result<PathBuf> {
    let dir = begin(exp, None)?;
    let mut out = RowWriter::create(
        &dir.join("predictions.csv"),
        &["config_hash", "lambda", "model", "option", "probability"],
    )?;
    for &lambda in &exp.config.turk.lambdas {
        let p = run_turk_predict(lambda)?;
        for (model, dist) in [("boltzmann", &p.boltzmann), ("less", &p.less)] {
            for (opt, prob) in TURK_OPTIONS.iter().zip(dist.probs()) {
                out.row([
                    exp.config_hash.as_str(),
                    &fmt_f64(lambda),
                    model,
                    opt,
                    &fmt_f64(*prob),
                ])?;
            }
        }
    }
    finish(&dir, exp, None, None, Vec::new())?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        for lambda in [0.1, 0.5, 1.0, 0.475 / 0.525, 2.0, 7.5] {
            let p = run_turk_predict(lambda).unwrap();
            let b = p.boltzmann.probs();
            let l = p.less.probs();
            assert!((b[0] - lambda / (lambda + 3.0)).abs() < 1e-12);
            assert!((l[0] - lambda / (lambda + 1.0)).abs() < 1e-12);
            for i in 1..4 {
                assert!((b[i] - 1.0 / (lambda + 3.0)).abs() < 1e-12);
                assert!((l[i] - 1.0 / (3.0 * (lambda + 1.0))).abs() < 1e-12);
            }
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_preference() {
        let (b, l) = run_turk_predict(1.0).unwrap().left();
        assert!((b - 0.25).abs() < 1e-12);
        assert!((l - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        assert!(run_turk_predict(0.0).is_err());
        assert!(run_turk_predict(-1.0).is_err());
        assert!(run_turk_predict(f64::NAN).is_err());
    }
}
