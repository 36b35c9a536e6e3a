use less_core::env::subsample_indices;
use less_core::rng::derive_seed;
use less_core::sampler::{draw_indices, misspecified_distribution};
use less_core::{
    compute_features, enumerate_trajectories, less, likelihood, map_theta, sample_demos,
    sample_demos_misspecified, BandwidthSearch, BandwidthSpec, Belief, Cell, ChoiceDistribution,
    EnumerationLimits, Error, FeatureDescriptor, FeatureSet, FeatureVector, GridWorld, Kernel,
    LikelihoodTable, ModelKind, RewardModel, ThetaGrid, Trajectory, TrajectorySet,
};

fn frequencies(indices: &[usize], n: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n];
    for &i in indices {
        counts[i] += 1;
    }
    counts
        .iter()
        .map(|&c| c as f64 / indices.len() as f64)
        .collect()
}

#[test]
fn empirical_frequencies_converge() {
    for (seed, probs) in [
        (1, vec![0.1, 0.2, 0.3, 0.4]),
        (2, vec![0.7, 0.1, 0.1, 0.1]),
        (3, vec![0.25, 0.25, 0.25, 0.25]),
        (4, vec![0.001, 0.499, 0.0, 0.5]),
    ] {
        let dist = ChoiceDistribution::from_probs(probs.clone()).unwrap();
        let f = frequencies(&draw_indices(&dist, 50_000, seed), 4);
        for (a, b) in f.iter().zip(&probs) {
            assert!((a - b).abs() < 0.01, "seed {seed}: {f:?} vs {probs:?}");
        }
    }
}

#[test]
fn isolated_option_sampled_half_the_time_under_less() {
    let w = GridWorld::new(3, 3, Cell::new(0, 0), Cell::new(2, 2), [], vec![]).unwrap();
    let all = enumerate_trajectories(&w, 5, EnumerationLimits::default()).unwrap();
    let features: Vec<FeatureVector> = [0.0, 1.0, 1.0, 1.0]
        .iter()
        .map(|&v| FeatureVector::new(vec![v]))
        .collect();
    let set = TrajectorySet::with_features(all.trajectories()[..4].to_vec(), features).unwrap();
    let kernel = Kernel::new(1e-3).unwrap();
    let demos = sample_demos(&set, &[0.0], 1.0, ModelKind::Less, Some(&kernel), 10_000, 5).unwrap();
    let left = demos.indices.iter().filter(|&&i| i == 0).count() as f64 / 10_000.0;
    assert!((left - 0.5).abs() < 0.015, "left frequency {left}");
    assert!(demos
        .demos
        .iter()
        .zip(&demos.indices)
        .all(|(t, &i)| *t == set.trajectories()[i]));
}

#[test]
fn subsample_is_uniform_over_the_rest() {
    let (n, size, forced) = (20usize, 5usize, 3usize);
    let draws = 10_000;
    let mut counts = vec![0usize; n];
    for s in 0..draws {
        let idx = subsample_indices(n, size, derive_seed(s, &[]), Some(forced)).unwrap();
        assert!(idx.contains(&forced));
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        for i in idx {
            counts[i] += 1;
        }
    }
    let p = (size - 1) as f64 / (n - 1) as f64;
    let mean = p * draws as f64;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    for (i, &c) in counts.iter().enumerate() {
        if i == forced {
            assert_eq!(c, draws as usize);
        } else {
            assert!(
                (c as f64 - mean).abs() < 3.0 * sd,
                "index {i}: {c} vs {mean}"
            );
        }
    }
}

fn small_world() -> GridWorld {
    GridWorld::new(
        3,
        3,
        Cell::new(0, 0),
        Cell::new(2, 2),
        [],
        vec![Cell::new(0, 2)],
    )
    .unwrap()
}

fn pick(world: &GridWorld, moves: &[&str]) -> TrajectorySet {
    TrajectorySet::new(
        moves
            .iter()
            .map(|m| Trajectory::from_moves(m, world).unwrap())
            .collect(),
    )
    .unwrap()
}

fn descriptors(names: &[&str]) -> FeatureSet {
    FeatureSet::new(names.iter().map(|n| n.parse().unwrap()).collect()).unwrap()
}

#[test]
fn constant_extra_features_change_nothing() {
    let w = small_world();
    // both trajectories average to (1, 1)
    let set = pick(&w, &["RUUR", "URRU"]);
    let reward = descriptors(&["object-proximity:0"]);
    let extended = descriptors(&["object-proximity:0", "mean-x", "mean-y"]);
    let featured = compute_features(&set, &w, &reward).unwrap();
    let sigma = 0.3;
    let plain = sample_demos(
        &featured,
        &[1.0],
        2.0,
        ModelKind::Less,
        Some(&Kernel::new(sigma).unwrap()),
        200,
        17,
    )
    .unwrap();
    let mis = sample_demos_misspecified(
        &set,
        &w,
        &extended,
        &[1.0],
        2.0,
        &BandwidthSpec::Fixed(sigma),
        200,
        17,
    )
    .unwrap();
    assert_eq!(plain.indices, mis.indices);
    assert_eq!(mis.model_kind, ModelKind::Less);
    assert_eq!(mis.ground_truth, vec![1.0]);
}

#[test]
fn isolated_position_gains_mass_under_extended_similarity() {
    let w = GridWorld::new(3, 3, Cell::new(0, 0), Cell::new(2, 2), [], vec![]).unwrap();
    // equal path lengths; RUUR and URRU share a mean position, RRUU does not
    let set = pick(&w, &["RRUU", "RUUR", "URRU"]);
    let reward = descriptors(&["path-length"]);
    let extended = descriptors(&["path-length", "mean-x", "mean-y"]);
    let kernel = Kernel::new(0.2).unwrap();
    let featured = compute_features(&set, &w, &reward).unwrap();
    let model = RewardModel::new(vec![1.0], 1.0).unwrap();
    let plain = less(&featured, &model, &kernel).unwrap();
    let (mis, k) =
        misspecified_distribution(&set, &w, &extended, &[1.0], 1.0, &BandwidthSpec::Fixed(0.2))
            .unwrap();
    assert_eq!(k.bandwidth(), 0.2);
    for p in plain.probs() {
        assert!((p - 1.0 / 3.0).abs() < 1e-12);
    }
    assert!(mis.probs()[0] > plain.probs()[0]);
    assert!((mis.probs()[1] - mis.probs()[2]).abs() < 1e-12);
}

#[test]
fn extended_features_must_add_mean_position() {
    let w = small_world();
    let set = pick(&w, &["RUUR", "URRU"]);
    let bad = descriptors(&["object-proximity:0", "mean-x"]);
    let err = sample_demos_misspecified(
        &set,
        &w,
        &bad,
        &[1.0],
        1.0,
        &BandwidthSpec::Search(BandwidthSearch::default()),
        3,
        0,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Configuration(_)), "{err:?}");
}

#[test]
fn map_recovers_theta_from_twenty_boltzmann_demos() {
    let w = GridWorld::new(
        5,
        5,
        Cell::new(0, 0),
        Cell::new(4, 4),
        [
            Cell::new(1, 2),
            Cell::new(2, 2),
            Cell::new(1, 3),
            Cell::new(2, 3),
        ],
        vec![Cell::new(2, 4), Cell::new(4, 2)],
    )
    .unwrap();
    let raw = enumerate_trajectories(&w, 13, EnumerationLimits::default()).unwrap();
    let set = compute_features(
        &raw,
        &w,
        &FeatureSet::new(vec![
            FeatureDescriptor::ObjectProximity(0),
            FeatureDescriptor::ObjectProximity(1),
        ])
        .unwrap(),
    )
    .unwrap();
    let grid = ThetaGrid::ternary(2).unwrap();
    let table = LikelihoodTable::build(&set, &grid, ModelKind::Boltzmann, None, 5.0).unwrap();
    let prior = Belief::uniform(grid.len()).unwrap();
    let seeds = 0..40u64;
    for (t, theta) in grid.candidates().iter().enumerate() {
        let mut recovered = 0;
        for seed in seeds.clone() {
            let demos =
                sample_demos(&set, theta, 5.0, ModelKind::Boltzmann, None, 20, seed).unwrap();
            let post = table.batch_update(&prior, &demos.indices).unwrap();
            let map = map_theta(&post, &grid);

            // exhaustive oracle: summed log-likelihood per candidate
            let scores: Vec<f64> = grid
                .candidates()
                .iter()
                .map(|c| {
                    demos
                        .demos
                        .iter()
                        .map(|d| {
                            likelihood(d, &set, c, ModelKind::Boltzmann, None, 5.0)
                                .unwrap()
                                .ln()
                        })
                        .sum()
                })
                .collect();
            let best = (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
            assert_eq!(map, best, "theta {theta:?} seed {seed}");
            if map == t {
                recovered += 1;
            }
        }
        // single runs can miss: nearby candidates explain 20 demos almost as well
        assert!(
            recovered * 10 >= 7 * seeds.clone().count(),
            "theta {theta:?}: {recovered}"
        );
    }
}
