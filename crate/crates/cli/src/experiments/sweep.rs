//! The factorial sampler × inference sweep behind `inference-compare` and
//! `misspecify`.

use std::path::{Path, PathBuf};

use less_core::rng::derive_seed;
use less_core::sampler::{draw_indices, misspecified_distribution};
use less_core::{
    true_match, true_posterior, Belief, ChoiceDistribution, FeatureSet, LikelihoodTable, ModelKind,
};

use super::{begin, finish, Prepared};
use crate::config::{parse_features, LoadedExperiment};
use crate::error::{HarnessError, Result};
use crate::output::{fmt_f64, mean_std, RowWriter};

/// A demonstrator: one choice distribution per grid candidate.
struct Sampler {
    label: String,
    /// Mixed into the per-cell seed. Samplers sharing a stream index draw
    /// with common random numbers.
    stream: u64,
    dists: Vec<ChoiceDistribution>,
}

fn stream_of(kind: ModelKind) -> u64 {
    ModelKind::ALL.iter().position(|&k| k == kind).unwrap_or(0) as u64
}

fn inference_tables(p: &Prepared, beta: f64) -> Result<Vec<(ModelKind, LikelihoodTable)>> {
    ModelKind::ALL
        .iter()
        .map(|&kind| {
            let kernel = (kind == ModelKind::Less).then_some(&p.kernel);
            Ok((
                kind,
                LikelihoodTable::build(&p.set, &p.grid, kind, kernel, beta)?,
            ))
        })
        .collect()
}

fn table_sampler(kind: ModelKind, table: &LikelihoodTable) -> Sampler {
    Sampler {
        label: kind.as_str().to_string(),
        stream: stream_of(kind),
        dists: (0..table.theta_count())
            .map(|t| table.distribution(t).clone())
            .collect(),
    }
}

/// Boltzmann and LESS demonstrators, each inferred with both models.
pub fn run_inference_compare(exp: &LoadedExperiment) -> Result<PathBuf> {
    let p = Prepared::new(exp)?;
    let dir = begin(exp, Some(&p))?;
    let tables = inference_tables(&p, exp.config.beta)?;
    let samplers: Vec<Sampler> = tables
        .iter()
        .map(|(kind, table)| table_sampler(*kind, table))
        .collect();
    sweep(exp, &p, &samplers, &tables, &dir)?;
    finish(&dir, exp, Some(&p), None, Vec::new())?;
    Ok(dir)
}

/// A LESS demonstrator whose similarity also sees `misspecify.extra_features`,
/// inferred with both models over the world's reward features only.
///
/// With no extra features the demonstrator is the plain LESS sampler on the
/// same seed stream, so the run reproduces the LESS-sampler rows of
/// `inference-compare`.
pub fn run_misspecify(exp: &LoadedExperiment) -> Result<PathBuf> {
    let p = Prepared::new(exp)?;
    let dir = begin(exp, Some(&p))?;
    let tables = inference_tables(&p, exp.config.beta)?;
    let extra = &exp.config.misspecify.extra_features;
    let (sampler, sampler_bandwidth) = if extra.is_empty() {
        let less = tables
            .iter()
            .find(|(k, _)| *k == ModelKind::Less)
            .map(|(_, t)| t)
            .expect("ModelKind::ALL contains Less");
        (table_sampler(ModelKind::Less, less), p.kernel.bandwidth())
    } else {
        let mut names: Vec<String> = p
            .features
            .descriptors()
            .iter()
            .map(|d| d.to_string())
            .collect();
        names.extend(extra.iter().cloned());
        let extended: FeatureSet = parse_features(&names)?;
        let spec = exp.config.bandwidth.spec();
        let mut dists = Vec::with_capacity(p.grid.len());
        let mut sigma = f64::NAN;
        for theta in p.grid.candidates() {
            let (d, k) = misspecified_distribution(
                &p.set,
                &p.world,
                &extended,
                theta,
                exp.config.beta,
                &spec,
            )?;
            sigma = k.bandwidth();
            dists.push(d);
        }
        let sampler = Sampler {
            label: format!("less+{}", extra.join("+")),
            stream: stream_of(ModelKind::Less),
            dists,
        };
        (sampler, sigma)
    };
    sweep(exp, &p, std::slice::from_ref(&sampler), &tables, &dir)?;
    finish(&dir, exp, Some(&p), Some(sampler_bandwidth), Vec::new())?;
    Ok(dir)
}

struct CellResult {
    sampler: usize,
    inference: usize,
    theta: usize,
    true_match: u8,
    true_posterior: f64,
}

fn sweep(
    exp: &LoadedExperiment,
    p: &Prepared,
    samplers: &[Sampler],
    tables: &[(ModelKind, LikelihoodTable)],
    dir: &Path,
) -> Result<()> {
    let hash = exp.config_hash.as_str();
    let seeds = exp.config.seeds.seeds();
    let n = exp.config.demos_per_set;
    let prior = Belief::uniform(p.grid.len())?;

    let mut choices = RowWriter::create(
        &dir.join("choices.csv"),
        &[
            "config_hash",
            "sampler",
            "theta_index",
            "trajectory_id",
            "probability",
        ],
    )?;
    for s in samplers {
        for (t, d) in s.dists.iter().enumerate() {
            for (i, prob) in d.probs().iter().enumerate() {
                choices.row([
                    hash,
                    &s.label,
                    &t.to_string(),
                    &i.to_string(),
                    &fmt_f64(*prob),
                ])?;
            }
        }
    }

    let mut cells = RowWriter::create(
        &dir.join("cells.csv"),
        &[
            "config_hash",
            "sampler",
            "inference",
            "theta_index",
            "theta_label",
            "seed",
            "sample_seed",
            "demo_ids",
            "map_index",
            "true_match",
            "true_posterior",
        ],
    )?;
    let mut posteriors = RowWriter::create(
        &dir.join("posteriors.csv"),
        &[
            "config_hash",
            "sampler",
            "inference",
            "theta_index",
            "seed",
            "candidate_index",
            "candidate_label",
            "probability",
        ],
    )?;

    let mut results = Vec::new();
    for (si, s) in samplers.iter().enumerate() {
        for (ii, (kind, table)) in tables.iter().enumerate() {
            for t in 0..p.grid.len() {
                for &seed in &seeds {
                    let sample_seed = derive_seed(seed, &[s.stream, t as u64]);
                    let demos = draw_indices(&s.dists[t], n, sample_seed);
                    let post =
                        table
                            .batch_update(&prior, &demos)
                            .map_err(|e| HarnessError::Aborted {
                                completed: results.len(),
                                source: Box::new(e.into()),
                            })?;
                    let tm = true_match(&post, &p.grid, t);
                    let tp = true_posterior(&post, t);
                    let ids: Vec<String> = demos.iter().map(|i| i.to_string()).collect();
                    cells.row([
                        hash,
                        &s.label,
                        kind.as_str(),
                        &t.to_string(),
                        &p.grid.labels()[t],
                        &seed.to_string(),
                        &sample_seed.to_string(),
                        &ids.join(";"),
                        &less_core::map_theta(&post, &p.grid).to_string(),
                        &tm.to_string(),
                        &fmt_f64(tp),
                    ])?;
                    for (c, prob) in post.probs().iter().enumerate() {
                        posteriors.row([
                            hash,
                            &s.label,
                            kind.as_str(),
                            &t.to_string(),
                            &seed.to_string(),
                            &c.to_string(),
                            &p.grid.labels()[c],
                            &fmt_f64(*prob),
                        ])?;
                    }
                    results.push(CellResult {
                        sampler: si,
                        inference: ii,
                        theta: t,
                        true_match: tm,
                        true_posterior: tp,
                    });
                }
            }
        }
    }

    let mut summary = RowWriter::create(
        &dir.join("summary.csv"),
        &[
            "config_hash",
            "sampler",
            "inference",
            "theta_index",
            "theta_label",
            "cells",
            "true_posterior_mean",
            "true_posterior_std",
            "true_match_mean",
            "true_match_std",
        ],
    )?;
    for (si, s) in samplers.iter().enumerate() {
        for (ii, (kind, _)) in tables.iter().enumerate() {
            let thetas = (0..p.grid.len()).map(Some).chain([None]);
            for theta in thetas {
                let rows: Vec<&CellResult> = results
                    .iter()
                    .filter(|r| r.sampler == si && r.inference == ii)
                    .filter(|r| theta.is_none_or(|t| r.theta == t))
                    .collect();
                let tp: Vec<f64> = rows.iter().map(|r| r.true_posterior).collect();
                let tm: Vec<f64> = rows.iter().map(|r| f64::from(r.true_match)).collect();
                let (tp_mean, tp_std) = mean_std(&tp);
                let (tm_mean, tm_std) = mean_std(&tm);
                let (index, label) = match theta {
                    Some(t) => (t.to_string(), p.grid.labels()[t].clone()),
                    None => ("all".to_string(), "all".to_string()),
                };
                summary.row([
                    hash,
                    &s.label,
                    kind.as_str(),
                    &index,
                    &label,
                    &rows.len().to_string(),
                    &fmt_f64(tp_mean),
                    &fmt_f64(tp_std),
                    &fmt_f64(tm_mean),
                    &fmt_f64(tm_std),
                ])?;
            }
        }
    }
    Ok(())
}
