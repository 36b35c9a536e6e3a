//! Consistency of inference across random subsets of the trajectory set.
//!
//! Each simulated demonstration is scored against `subsets` seeded subsets of
//! every configured size. Each subset is forced to contain the demonstration.
//! Each method yields one posterior per subset, and the collection is
//! summarized by its KL aggregate. The batch variant does the same with every
//! demonstration observed at once.
//!
//! Seeds derive from the first configured seed. The bandwidth is reselected
//! on every subset with the configured bandwidth rule.

use std::collections::BTreeSet;
use std::path::PathBuf;

use less_core::env::subsample_indices;
use less_core::rng::derive_seed;
use less_core::sampler::draw_indices;
use less_core::{
    choice_distribution, kl_aggregate, Belief, LikelihoodTable, ModelKind, RewardModel,
    TrajectorySet,
};

use super::{begin, finish, Prepared};
use crate::config::LoadedExperiment;
use crate::error::{HarnessError, Result};
use crate::output::{fmt_f64, mean_std, RowWriter};

const DEMO_STREAM: u64 = 1;
const SUBSET_STREAM: u64 = 2;
const BATCH_STREAM: u64 = 3;
const MAX_DRAWS_PER_DEMO: usize = 10_000;

struct Demo {
    trajectory: usize,
    theta: usize,
    seed: u64,
}

fn draw_demonstrations(
    exp: &LoadedExperiment,
    p: &Prepared,
    demonstrator: ModelKind,
    base: u64,
) -> Result<Vec<Demo>> {
    let wanted = exp.config.robustness.demonstrations;
    if wanted > p.set.len() {
        return Err(HarnessError::Config(format!(
            "{wanted} distinct demonstrations requested from {} trajectories",
            p.set.len()
        )));
    }
    let kernel = (demonstrator == ModelKind::Less).then_some(&p.kernel);
    let dists = p
        .grid
        .candidates()
        .iter()
        .map(|theta| {
            let model = RewardModel::new(theta.clone(), exp.config.beta)?;
            Ok(choice_distribution(demonstrator, &p.set, &model, kernel)?)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut demos: Vec<Demo> = Vec::with_capacity(wanted);
    let mut attempt = 0u64;
    while demos.len() < wanted {
        if attempt as usize >= MAX_DRAWS_PER_DEMO * wanted {
            return Err(less_core::Error::ResourceBound(format!(
                "could not draw {wanted} distinct demonstrations in {attempt} attempts"
            ))
            .into());
        }
        let theta = demos.len() % p.grid.len();
        let seed = derive_seed(base, &[DEMO_STREAM, attempt]);
        attempt += 1;
        let trajectory = draw_indices(&dists[theta], 1, seed)[0];
        if demos.iter().all(|d| d.trajectory != trajectory) {
            demos.push(Demo {
                trajectory,
                theta,
                seed,
            });
        }
    }
    Ok(demos)
}

/// Posteriors of both methods on one subset, given the demo positions in it.
fn subset_posteriors(
    exp: &LoadedExperiment,
    p: &Prepared,
    sub: &TrajectorySet,
    positions: &[usize],
) -> Result<(f64, Vec<Belief>)> {
    let kernel = exp.config.bandwidth.spec().resolve(sub)?;
    let prior = Belief::uniform(p.grid.len())?;
    let posts = ModelKind::ALL
        .iter()
        .map(|&kind| {
            let k = (kind == ModelKind::Less).then_some(&kernel);
            let table = LikelihoodTable::build(sub, &p.grid, kind, k, exp.config.beta)?;
            Ok(table.batch_update(&prior, positions)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((kernel.bandwidth(), posts))
}

pub fn run_robustness(exp: &LoadedExperiment) -> Result<PathBuf> {
    let p = Prepared::new(exp)?;
    let dir = begin(exp, Some(&p))?;
    let hash = exp.config_hash.as_str();
    let cfg = &exp.config.robustness;
    let demonstrator: ModelKind = cfg
        .demonstrator
        .parse()
        .map_err(|e: less_core::Error| HarnessError::Config(e.to_string()))?;
    let base = exp.config.seeds.seeds()[0];
    let mut warnings = Vec::new();

    let mut sizes = BTreeSet::new();
    for &s in &cfg.sample_sizes {
        if s > p.set.len() {
            warnings.push(format!(
                "sample size {s} exceeds the {} enumerated trajectories; clipped",
                p.set.len()
            ));
        }
        sizes.insert(s.min(p.set.len()));
    }
    if sizes.contains(&0) {
        return Err(HarnessError::Config("sample sizes must be positive".into()));
    }

    let demos = draw_demonstrations(exp, &p, demonstrator, base)?;
    let mut demo_out = RowWriter::create(
        &dir.join("demos.csv"),
        &[
            "config_hash",
            "demo",
            "trajectory_id",
            "moves",
            "theta_index",
            "theta_label",
            "sample_seed",
        ],
    )?;
    for (d, demo) in demos.iter().enumerate() {
        demo_out.row([
            hash,
            &d.to_string(),
            &demo.trajectory.to_string(),
            &p.set.trajectories()[demo.trajectory].moves(),
            &demo.theta.to_string(),
            &p.grid.labels()[demo.theta],
            &demo.seed.to_string(),
        ])?;
    }

    let mut subsets_out = RowWriter::create(
        &dir.join("subsets.csv"),
        &[
            "config_hash",
            "variant",
            "demo",
            "sample_size",
            "set_index",
            "subset_seed",
            "bandwidth",
            "trajectory_ids",
        ],
    )?;
    let mut post_out = RowWriter::create(
        &dir.join("posteriors.csv"),
        &[
            "config_hash",
            "variant",
            "demo",
            "method",
            "sample_size",
            "set_index",
            "candidate_index",
            "candidate_label",
            "probability",
        ],
    )?;
    let mut kl_out = RowWriter::create(
        &dir.join("kl.csv"),
        &[
            "config_hash",
            "variant",
            "demo",
            "method",
            "sample_size",
            "kl_aggregate",
        ],
    )?;

    // (variant, method, size) -> KL values over demos
    let mut kl_values: Vec<(&str, ModelKind, usize, Vec<f64>)> = Vec::new();
    let mut completed = 0usize;
    let abort = |completed: usize| {
        move |e: HarnessError| HarnessError::Aborted {
            completed,
            source: Box::new(e),
        }
    };

    let mut record = |variant: &'static str,
                      demo_label: &str,
                      size: usize,
                      rep: usize,
                      seed: u64,
                      idx: &[usize],
                      positions: &[usize],
                      collections: &mut [Vec<Belief>]|
     -> Result<()> {
        let sub = p.set.select(idx)?;
        let (sigma, posts) = subset_posteriors(exp, &p, &sub, positions)?;
        let ids: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        subsets_out.row([
            hash,
            variant,
            demo_label,
            &size.to_string(),
            &rep.to_string(),
            &seed.to_string(),
            &fmt_f64(sigma),
            &ids.join(";"),
        ])?;
        for ((kind, post), coll) in ModelKind::ALL.iter().zip(posts).zip(collections.iter_mut()) {
            for (c, prob) in post.probs().iter().enumerate() {
                post_out.row([
                    hash,
                    variant,
                    demo_label,
                    kind.as_str(),
                    &size.to_string(),
                    &rep.to_string(),
                    &c.to_string(),
                    &p.grid.labels()[c],
                    &fmt_f64(*prob),
                ])?;
            }
            coll.push(post);
        }
        Ok(())
    };

    for (d, demo) in demos.iter().enumerate() {
        for &size in &sizes {
            let mut collections = vec![Vec::new(); ModelKind::ALL.len()];
            for rep in 0..cfg.subsets {
                let seed = derive_seed(base, &[SUBSET_STREAM, d as u64, size as u64, rep as u64]);
                let idx = subsample_indices(p.set.len(), size, seed, Some(demo.trajectory))
                    .map_err(|e| abort(completed)(e.into()))?;
                let pos = idx
                    .iter()
                    .position(|&i| i == demo.trajectory)
                    .expect("subsample includes the demonstration");
                record(
                    "single",
                    &d.to_string(),
                    size,
                    rep,
                    seed,
                    &idx,
                    &[pos],
                    &mut collections,
                )
                .map_err(abort(completed))?;
                completed += 1;
            }
            for (kind, coll) in ModelKind::ALL.iter().zip(&collections) {
                let kl = kl_aggregate(coll).map_err(|e| abort(completed)(e.into()))?;
                kl_out.row([
                    hash,
                    "single",
                    &d.to_string(),
                    kind.as_str(),
                    &size.to_string(),
                    &fmt_f64(kl),
                ])?;
                push_kl(&mut kl_values, "single", *kind, size, kl);
            }
        }
    }

    let demo_ids: Vec<usize> = demos.iter().map(|d| d.trajectory).collect();
    let rest: Vec<usize> = (0..p.set.len()).filter(|i| !demo_ids.contains(i)).collect();
    for &size in &sizes {
        let effective = size.max(demo_ids.len());
        if effective != size {
            warnings.push(format!(
                "batch variant: sample size {size} raised to {effective} to hold every demonstration"
            ));
        }
        let mut collections = vec![Vec::new(); ModelKind::ALL.len()];
        for rep in 0..cfg.subsets {
            let seed = derive_seed(base, &[BATCH_STREAM, size as u64, rep as u64]);
            let mut idx: Vec<usize> = demo_ids.clone();
            if effective > demo_ids.len() {
                let picked = subsample_indices(rest.len(), effective - demo_ids.len(), seed, None)
                    .map_err(|e| abort(completed)(e.into()))?;
                idx.extend(picked.iter().map(|&i| rest[i]));
            }
            idx.sort_unstable();
            let positions: Vec<usize> = demo_ids
                .iter()
                .map(|t| idx.binary_search(t).expect("demonstration kept in subset"))
                .collect();
            record(
                "batch",
                "all",
                effective,
                rep,
                seed,
                &idx,
                &positions,
                &mut collections,
            )
            .map_err(abort(completed))?;
            completed += 1;
        }
        for (kind, coll) in ModelKind::ALL.iter().zip(&collections) {
            let kl = kl_aggregate(coll).map_err(|e| abort(completed)(e.into()))?;
            kl_out.row([
                hash,
                "batch",
                "all",
                kind.as_str(),
                &effective.to_string(),
                &fmt_f64(kl),
            ])?;
            push_kl(&mut kl_values, "batch", *kind, effective, kl);
        }
    }

    let mut summary = RowWriter::create(
        &dir.join("summary.csv"),
        &[
            "config_hash",
            "variant",
            "method",
            "sample_size",
            "collections",
            "kl_aggregate_mean",
            "kl_aggregate_std",
        ],
    )?;
    for (variant, kind, size, values) in &kl_values {
        let (mean, std) = mean_std(values);
        summary.row([
            hash,
            variant,
            kind.as_str(),
            &size.to_string(),
            &values.len().to_string(),
            &fmt_f64(mean),
            &fmt_f64(std),
        ])?;
    }

    for w in &warnings {
        eprintln!("warning: {w}");
    }
    finish(&dir, exp, Some(&p), None, warnings)?;
    Ok(dir)
}

fn push_kl(
    acc: &mut Vec<(&'static str, ModelKind, usize, Vec<f64>)>,
    variant: &'static str,
    kind: ModelKind,
    size: usize,
    kl: f64,
) {
    match acc
        .iter_mut()
        .find(|(v, k, s, _)| *v == variant && *k == kind && *s == size)
    {
        Some(entry) => entry.3.push(kl),
        None => acc.push((variant, kind, size, vec![kl])),
    }
}
