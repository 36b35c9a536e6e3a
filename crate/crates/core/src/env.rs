//! Grid worlds, trajectory sets and trajectory features.
//!
//! Trajectories are simple 4-connected paths from the start cell to the goal
//! cell. Move characters are `D`, `L`, `R`, `U` with `U` increasing `y`;
//! enumeration emits paths in lexicographic order of their move strings.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        ((self.x - other.x).unsigned_abs() + (self.y - other.y).unsigned_abs()) as usize
    }

    pub fn euclidean(self, other: Cell) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        math::sqrt(dx * dx + dy * dy)
    }

    pub fn step(self, mv: Move) -> Cell {
        let (dx, dy) = mv.delta();
        Cell::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// A single grid move. Variant order is the canonical enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    Down,
    Left,
    Right,
    Up,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Down, Move::Left, Move::Right, Move::Up];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Move::Down => (0, -1),
            Move::Left => (-1, 0),
            Move::Right => (1, 0),
            Move::Up => (0, 1),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Move::Down => 'D',
            Move::Left => 'L',
            Move::Right => 'R',
            Move::Up => 'U',
        }
    }

    pub fn from_char(c: char) -> Option<Move> {
        match c {
            'D' => Some(Move::Down),
            'L' => Some(Move::Left),
            'R' => Some(Move::Right),
            'U' => Some(Move::Up),
            _ => None,
        }
    }

    fn between(from: Cell, to: Cell) -> Option<Move> {
        Move::ALL.into_iter().find(|&m| from.step(m) == to)
    }
}

/// A rectangular grid with impassable obstacles and feature anchor objects.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    width: u32,
    height: u32,
    start: Cell,
    goal: Cell,
    obstacles: BTreeSet<Cell>,
    objects: Vec<Cell>,
}

impl GridWorld {
    pub fn new(
        width: u32,
        height: u32,
        start: Cell,
        goal: Cell,
        obstacles: impl IntoIterator<Item = Cell>,
        objects: Vec<Cell>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidWorld(
                "width and height must be positive".into(),
            ));
        }
        if width > i32::MAX as u32 || height > i32::MAX as u32 {
            return Err(Error::InvalidWorld("grid dimensions too large".into()));
        }
        let world = Self {
            width,
            height,
            start,
            goal,
            obstacles: obstacles.into_iter().collect(),
            objects,
        };
        for (name, cell) in [("start", start), ("goal", goal)] {
            if !world.in_bounds(cell) {
                return Err(Error::InvalidWorld(format!(
                    "{name} {cell} is out of bounds"
                )));
            }
            if world.obstacles.contains(&cell) {
                return Err(Error::InvalidWorld(format!("{name} {cell} is an obstacle")));
            }
        }
        if start == goal {
            return Err(Error::InvalidWorld("start and goal coincide".into()));
        }
        if let Some(o) = world.obstacles.iter().find(|c| !world.in_bounds(**c)) {
            return Err(Error::InvalidWorld(format!(
                "obstacle {o} is out of bounds"
            )));
        }
        if let Some(o) = world.objects.iter().find(|c| !world.in_bounds(**c)) {
            return Err(Error::InvalidWorld(format!("object {o} is out of bounds")));
        }
        Ok(world)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn obstacles(&self) -> impl Iterator<Item = Cell> + '_ {
        self.obstacles.iter().copied()
    }

    pub fn objects(&self) -> &[Cell] {
        &self.objects
    }

    pub fn cell_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as u32) < self.width && (c.y as u32) < self.height
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.obstacles.contains(&c)
    }

    fn index(&self, c: Cell) -> usize {
        c.y as usize * self.width as usize + c.x as usize
    }
}

/// An ordered start-to-goal path of grid cells.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trajectory {
    cells: Vec<Cell>,
}

impl Trajectory {
    /// Builds a trajectory and checks it against `world`: endpoints, 4-connectivity,
    /// obstacle-freedom and no revisited cells.
    pub fn new(cells: Vec<Cell>, world: &GridWorld) -> Result<Self> {
        let t = Self { cells };
        t.validate(world)?;
        Ok(t)
    }

    /// Parses a move string such as `"RRUU"` starting from the world's start cell.
    pub fn from_moves(moves: &str, world: &GridWorld) -> Result<Self> {
        let mut cells = Vec::with_capacity(moves.len() + 1);
        let mut at = world.start();
        cells.push(at);
        for ch in moves.chars() {
            let mv = Move::from_char(ch)
                .ok_or_else(|| Error::InvalidTrajectory(format!("unknown move {ch:?}")))?;
            at = at.step(mv);
            cells.push(at);
        }
        Self::new(cells, world)
    }

    pub(crate) fn from_cells_unchecked(cells: Vec<Cell>) -> Self {
        Self { cells }
    }

    pub fn validate(&self, world: &GridWorld) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTrajectory(msg));
        match (self.cells.first(), self.cells.last()) {
            (Some(&first), Some(&last)) => {
                if first != world.start() {
                    return bad(format!("starts at {first}, not {}", world.start()));
                }
                if last != world.goal() {
                    return bad(format!("ends at {last}, not {}", world.goal()));
                }
            }
            _ => return bad("empty trajectory".into()),
        }
        let mut seen = vec![false; world.cell_count()];
        for (i, &c) in self.cells.iter().enumerate() {
            if !world.is_free(c) {
                return bad(format!("cell {c} is blocked or out of bounds"));
            }
            let k = world.index(c);
            if seen[k] {
                return bad(format!("cell {c} is visited twice"));
            }
            seen[k] = true;
            if i > 0 && self.cells[i - 1].manhattan(c) != 1 {
                return bad(format!("{} and {c} are not neighbors", self.cells[i - 1]));
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Number of cells, including both endpoints.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn moves(&self) -> String {
        self.cells
            .windows(2)
            .map(|w| Move::between(w[0], w[1]).map_or('?', Move::as_char))
            .collect()
    }
}

/// One feature dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureDescriptor {
    /// Mean over cells of `exp(-d)`, `d` the Euclidean distance to object `i`.
    ObjectProximity(usize),
    /// Number of cells.
    PathLength,
    MeanX,
    MeanY,
}

impl fmt::Display for FeatureDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureDescriptor::ObjectProximity(i) => write!(f, "object-proximity:{i}"),
            FeatureDescriptor::PathLength => f.write_str("path-length"),
            FeatureDescriptor::MeanX => f.write_str("mean-x"),
            FeatureDescriptor::MeanY => f.write_str("mean-y"),
        }
    }
}

impl FromStr for FeatureDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "path-length" => Ok(FeatureDescriptor::PathLength),
            "mean-x" => Ok(FeatureDescriptor::MeanX),
            "mean-y" => Ok(FeatureDescriptor::MeanY),
            other => other
                .strip_prefix("object-proximity:")
                .and_then(|i| i.parse().ok())
                .map(FeatureDescriptor::ObjectProximity)
                .ok_or_else(|| Error::config(format!("unknown feature descriptor {other:?}"))),
        }
    }
}

/// Ordered, nonempty list of feature descriptors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSet {
    descriptors: Vec<FeatureDescriptor>,
}

impl FeatureSet {
    pub fn new(descriptors: Vec<FeatureDescriptor>) -> Result<Self> {
        if descriptors.is_empty() {
            return Err(Error::config("feature set must not be empty"));
        }
        Ok(Self { descriptors })
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.descriptors
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn contains(&self, d: FeatureDescriptor) -> bool {
        self.descriptors.contains(&d)
    }

    fn check_against(&self, world: &GridWorld) -> Result<()> {
        for d in &self.descriptors {
            if let FeatureDescriptor::ObjectProximity(i) = *d {
                if i >= world.objects().len() {
                    return Err(Error::config(format!(
                        "feature {d} refers to object {i}, but the world has {} objects",
                        world.objects().len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A real feature vector `φ(ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Anything that exposes one feature vector per choice option.
pub trait Featured {
    fn feature_vectors(&self) -> Result<&[FeatureVector]>;
}

impl Featured for [FeatureVector] {
    fn feature_vectors(&self) -> Result<&[FeatureVector]> {
        Ok(self)
    }
}

impl Featured for Vec<FeatureVector> {
    fn feature_vectors(&self) -> Result<&[FeatureVector]> {
        Ok(self)
    }
}

/// A finite, ordered set of trajectories with optional parallel features.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    trajectories: Vec<Trajectory>,
    features: Option<Vec<FeatureVector>>,
}

impl TrajectorySet {
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::argument("trajectory set must not be empty"));
        }
        Ok(Self {
            trajectories,
            features: None,
        })
    }

    pub fn with_features(
        trajectories: Vec<Trajectory>,
        features: Vec<FeatureVector>,
    ) -> Result<Self> {
        if features.len() != trajectories.len() {
            return Err(Error::DimensionMismatch {
                expected: trajectories.len(),
                found: features.len(),
            });
        }
        let mut set = Self::new(trajectories)?;
        set.features = Some(features);
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn has_features(&self) -> bool {
        self.features.is_some()
    }

    pub fn index_of(&self, t: &Trajectory) -> Option<usize> {
        self.trajectories.iter().position(|x| x == t)
    }

    /// Members at `indices`, in the given order, keeping their features.
    pub fn select(&self, indices: &[usize]) -> Result<TrajectorySet> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::argument(format!(
                "index {bad} out of range for a set of {}",
                self.len()
            )));
        }
        let trajectories = indices
            .iter()
            .map(|&i| self.trajectories[i].clone())
            .collect();
        let features = self
            .features
            .as_ref()
            .map(|f| indices.iter().map(|&i| f[i].clone()).collect());
        let mut out = TrajectorySet::new(trajectories)?;
        out.features = features;
        Ok(out)
    }
}

impl Featured for TrajectorySet {
    fn feature_vectors(&self) -> Result<&[FeatureVector]> {
        self.features.as_deref().ok_or(Error::MissingFeatures)
    }
}

/// Bounds on the enumeration work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimits {
    pub max_length_cap: usize,
    pub max_paths: usize,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self {
            max_length_cap: 64,
            max_paths: 1_000_000,
        }
    }
}

/// Enumerates every simple 4-connected start-to-goal path with at most
/// `max_length` cells, in lexicographic order of move strings.
pub fn enumerate_trajectories(
    world: &GridWorld,
    max_length: usize,
    limits: EnumerationLimits,
) -> Result<TrajectorySet> {
    if max_length > limits.max_length_cap {
        return Err(Error::ResourceBound(format!(
            "max_length {max_length} exceeds the cap of {}",
            limits.max_length_cap
        )));
    }
    let goal = world.goal();
    let mut visited = vec![false; world.cell_count()];
    let mut path = vec![world.start()];
    visited[world.index(world.start())] = true;
    // next move to try at each depth
    let mut next_move = vec![0usize];
    let mut found = Vec::new();

    if world.start().manhattan(goal) < max_length {
        while let Some(top) = next_move.last_mut() {
            let at = *path.last().expect("path tracks the move stack");
            if *top >= Move::ALL.len() {
                next_move.pop();
                let done = path.pop().expect("path tracks the move stack");
                visited[world.index(done)] = false;
                continue;
            }
            let mv = Move::ALL[*top];
            *top += 1;
            let to = at.step(mv);
            if !world.is_free(to) || visited[world.index(to)] {
                continue;
            }
            if path.len() + 1 + to.manhattan(goal) > max_length {
                continue;
            }
            if to == goal {
                let mut cells = path.clone();
                cells.push(to);
                found.push(Trajectory::from_cells_unchecked(cells));
                if found.len() > limits.max_paths {
                    return Err(Error::ResourceBound(format!(
                        "more than {} trajectories within {max_length} cells",
                        limits.max_paths
                    )));
                }
                continue;
            }
            visited[world.index(to)] = true;
            path.push(to);
            next_move.push(0);
        }
    }

    if found.is_empty() {
        return Err(Error::EmptyTrajectorySet { max_length });
    }
    TrajectorySet::new(found)
}

fn raw_feature(d: FeatureDescriptor, t: &Trajectory, world: &GridWorld) -> f64 {
    let cells = t.cells();
    let n = cells.len() as f64;
    match d {
        FeatureDescriptor::ObjectProximity(i) => {
            let obj = world.objects()[i];
            cells
                .iter()
                .map(|c| math::exp(-c.euclidean(obj)))
                .sum::<f64>()
                / n
        }
        FeatureDescriptor::PathLength => n,
        FeatureDescriptor::MeanX => cells.iter().map(|c| f64::from(c.x)).sum::<f64>() / n,
        FeatureDescriptor::MeanY => cells.iter().map(|c| f64::from(c.y)).sum::<f64>() / n,
    }
}

/// Raw (unnormalized) feature values for one trajectory.
pub fn raw_features(t: &Trajectory, world: &GridWorld, features: &FeatureSet) -> Result<Vec<f64>> {
    features.check_against(world)?;
    Ok(features
        .descriptors()
        .iter()
        .map(|&d| raw_feature(d, t, world))
        .collect())
}

/// Fills in features for every trajectory, min-max normalized per dimension
/// across the set. A dimension with zero spread maps to 0.
pub fn compute_features(
    set: &TrajectorySet,
    world: &GridWorld,
    features: &FeatureSet,
) -> Result<TrajectorySet> {
    features.check_against(world)?;
    let k = features.len();
    let mut rows: Vec<Vec<f64>> = set
        .trajectories()
        .iter()
        .map(|t| {
            features
                .descriptors()
                .iter()
                .map(|&d| raw_feature(d, t, world))
                .collect()
        })
        .collect();
    for dim in 0..k {
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[dim]), hi.max(r[dim]))
            });
        let span = hi - lo;
        for r in &mut rows {
            r[dim] = if span > 0.0 {
                (r[dim] - lo) / span
            } else {
                0.0
            };
        }
    }
    TrajectorySet::with_features(
        set.trajectories().to_vec(),
        rows.into_iter().map(FeatureVector).collect(),
    )
}

/// Indices chosen by [`subsample`], sorted ascending.
pub fn subsample_indices(
    set_len: usize,
    size: usize,
    seed: u64,
    must_include: Option<usize>,
) -> Result<Vec<usize>> {
    if size == 0 {
        return Err(Error::argument("subsample size must be positive"));
    }
    if size > set_len {
        return Err(Error::argument(format!(
            "subsample size {size} exceeds set size {set_len}"
        )));
    }
    if let Some(m) = must_include {
        if m >= set_len {
            return Err(Error::argument(format!("required index {m} out of range")));
        }
    }
    let mut pool: Vec<usize> = (0..set_len).filter(|&i| Some(i) != must_include).collect();
    let draws = size - usize::from(must_include.is_some());
    let mut rng = SeededRng::new(seed);
    // partial Fisher-Yates
    for i in 0..draws {
        let j = i + rng.below((pool.len() - i) as u64) as usize;
        pool.swap(i, j);
    }
    let mut chosen: Vec<usize> = pool[..draws].to_vec();
    chosen.extend(must_include);
    chosen.sort_unstable();
    Ok(chosen)
}

/// Seeded uniform sample of `size` members without replacement, optionally
/// forced to contain `must_include`. Output keeps the parent's order and features.
pub fn subsample(
    set: &TrajectorySet,
    size: usize,
    seed: u64,
    must_include: Option<&Trajectory>,
) -> Result<TrajectorySet> {
    let required = match must_include {
        Some(t) => Some(
            set.index_of(t)
                .ok_or_else(|| Error::argument("required trajectory is not in the set"))?,
        ),
        None => None,
    };
    let idx = subsample_indices(set.len(), size, seed, required)?;
    set.select(&idx)
}
