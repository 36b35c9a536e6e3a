use std::collections::HashSet;

use less_core::rng::SeededRng;
use less_core::{enumerate_trajectories, Cell, EnumerationLimits, Error, GridWorld};

/// Plain recursive search with no pruning; returns move strings sorted.
fn oracle(world: &GridWorld, max_len: usize) -> Vec<String> {
    fn go(
        world: &GridWorld,
        at: Cell,
        max_len: usize,
        visited: &mut HashSet<Cell>,
        moves: &mut String,
        out: &mut Vec<String>,
    ) {
        if at == world.goal() {
            out.push(moves.clone());
            return;
        }
        if visited.len() == max_len {
            return;
        }
        for (c, dx, dy) in [('D', 0, -1), ('L', -1, 0), ('R', 1, 0), ('U', 0, 1)] {
            let next = Cell::new(at.x + dx, at.y + dy);
            if world.is_free(next) && !visited.contains(&next) {
                visited.insert(next);
                moves.push(c);
                go(world, next, max_len, visited, moves, out);
                moves.pop();
                visited.remove(&next);
            }
        }
    }
    let mut out = Vec::new();
    let mut visited = HashSet::from([world.start()]);
    go(
        world,
        world.start(),
        max_len,
        &mut visited,
        &mut String::new(),
        &mut out,
    );
    out.sort();
    out
}

fn random_world(rng: &mut SeededRng) -> Option<GridWorld> {
    let w = 2 + rng.below(4) as u32;
    let h = 2 + rng.below(4) as u32;
    let pick =
        |rng: &mut SeededRng| Cell::new(rng.below(w as u64) as i32, rng.below(h as u64) as i32);
    let start = pick(rng);
    let goal = pick(rng);
    if start == goal {
        return None;
    }
    let obstacles: Vec<Cell> = (0..rng.below(5))
        .map(|_| pick(rng))
        .filter(|c| *c != start && *c != goal)
        .collect();
    GridWorld::new(w, h, start, goal, obstacles, vec![start]).ok()
}

#[test]
fn matches_exhaustive_search_on_small_worlds() {
    let mut rng = SeededRng::new(2024);
    let mut checked = 0;
    while checked < 150 {
        let Some(world) = random_world(&mut rng) else {
            continue;
        };
        let max_len = 2 + rng.below(world.cell_count() as u64) as usize;
        let expected = oracle(&world, max_len);
        match enumerate_trajectories(&world, max_len, EnumerationLimits::default()) {
            Ok(set) => {
                let got: Vec<String> = set.trajectories().iter().map(|t| t.moves()).collect();
                assert_eq!(got, expected, "world {world:?} max_len {max_len}");
            }
            Err(Error::EmptyTrajectorySet { .. }) => assert!(expected.is_empty()),
            Err(e) => panic!("unexpected error {e}"),
        }
        checked += 1;
    }
}

#[test]
fn open_five_by_five_counts() {
    let world = GridWorld::new(5, 5, Cell::new(0, 0), Cell::new(4, 4), [], vec![]).unwrap();
    for (max_len, count) in [(9, 70), (11, 294), (13, 804), (15, 1760)] {
        let set = enumerate_trajectories(&world, max_len, EnumerationLimits::default()).unwrap();
        assert_eq!(set.len(), count, "max_len {max_len}");
        assert_eq!(oracle(&world, max_len).len(), count);
    }
}

#[test]
fn every_trajectory_is_simple_and_reaches_the_goal() {
    let world = GridWorld::new(
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
    let set = enumerate_trajectories(&world, 13, EnumerationLimits::default()).unwrap();
    assert_eq!(set.len(), 112);
    for t in set.trajectories() {
        t.validate(&world).unwrap();
        let unique: HashSet<_> = t.cells().iter().collect();
        assert_eq!(unique.len(), t.len());
        assert!(t.len() <= 13);
    }
}

#[test]
fn path_cap_is_a_resource_error() {
    let world = GridWorld::new(5, 5, Cell::new(0, 0), Cell::new(4, 4), [], vec![]).unwrap();
    let limits = EnumerationLimits {
        max_paths: 100,
        ..EnumerationLimits::default()
    };
    assert!(matches!(
        enumerate_trajectories(&world, 13, limits),
        Err(Error::ResourceBound(_))
    ));
}
