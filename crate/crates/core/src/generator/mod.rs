//! Sequential construction of the network.
//!
//! Vertices are added in birth order. A new vertex `y` born at `s` connects
//! to each older vertex `x` independently with probability
//! `phi(s * dist(x, y)^d / f(indegree(x)))`, where the indegree is the one
//! held by `x` just before `y` arrives.

pub mod cells;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::geometry::{rescale, torus_side, wrapped_sq_dist, Direction, SpaceTimePoint};
use crate::model::ModelParams;
use crate::randomness::{sample_poisson_points_capped, PairMarkOracle, SeedSpec, DEFAULT_MAX_EXPECTED_POINTS};
use cells::{levels_for, BlockCoords, CellIndex, MAX_DIM};

/// Which of the two equivalent coordinate systems a graph lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    /// Unit-volume torus, births in `(0, t]`.
    Growth,
    /// Volume-`t` torus, births in `(0, 1]`.
    Stationary,
}

impl View {
    /// Volume of the torus the vertices live on.
    pub fn torus_volume(self, t: f64) -> f64 {
        match self {
            View::Growth => 1.0,
            View::Stationary => t,
        }
    }

    /// Upper end of the birth interval.
    pub fn horizon(self, t: f64) -> f64 {
        match self {
            View::Growth => t,
            View::Stationary => 1.0,
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            View::Growth => "growth",
            View::Stationary => "stationary",
        })
    }
}

impl FromStr for View {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "growth" => Ok(View::Growth),
            "stationary" => Ok(View::Stationary),
            other => Err(contract(format!("unknown view '{other}' (growth|stationary)"))),
        }
    }
}

/// Construction strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Tests every older vertex in id order.
    Naive,
    /// Tests every older vertex, visiting cells ring by ring.
    RingExact,
    /// Samples candidates from dominating block probabilities.
    RingSkip,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Naive => "naive",
            Mode::RingExact => "ring-exact",
            Mode::RingSkip => "ring-skip",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Mode::Naive),
            "ring-exact" => Ok(Mode::RingExact),
            "ring-skip" => Ok(Mode::RingSkip),
            other => Err(contract(format!("invalid mode '{other}' (naive|ring-exact|ring-skip)"))),
        }
    }
}

/// An edge between an older and a younger vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub older: usize,
    pub younger: usize,
}

/// Counters collected during a build.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    /// Pairs whose exact connection probability was evaluated.
    pub evaluations: u64,
    /// Blocks inspected by the skip sampler.
    pub blocks_visited: u64,
    /// Candidates whose exact probability exceeded the block bound.
    pub bound_violations: u64,
}

/// An immutable network with its construction metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    view: View,
    t: f64,
    params: ModelParams,
    seed: u64,
    vertices: Vec<SpaceTimePoint>,
    edges: Vec<Edge>,
    indegree_at_end: Vec<u32>,
}

impl Graph {
    /// Assembles a graph, checking its structural invariants.
    pub fn from_parts(
        view: View,
        t: f64,
        params: ModelParams,
        seed: u64,
        vertices: Vec<SpaceTimePoint>,
        edges: Vec<Edge>,
    ) -> Result<Self> {
        check_points(&params, view, t, &vertices)?;
        let n = vertices.len();
        let mut indegree = vec![0u32; n];
        let mut prev: Option<Edge> = None;
        for e in &edges {
            if e.younger >= n || e.older >= e.younger {
                return Err(contract(format!("invalid edge ({}, {})", e.older, e.younger)));
            }
            if let Some(p) = prev {
                if (p.younger, p.older) >= (e.younger, e.older) {
                    return Err(contract(format!(
                        "edges not in younger-birth order at ({}, {})",
                        e.older, e.younger
                    )));
                }
            }
            prev = Some(*e);
            indegree[e.older] += 1;
        }
        Ok(Self {
            view,
            t,
            params,
            seed,
            vertices,
            edges,
            indegree_at_end: indegree,
        })
    }

    pub fn view(&self) -> View {
        self.view
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn vertices(&self) -> &[SpaceTimePoint] {
        &self.vertices
    }
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
    pub fn indegree_at_end(&self) -> &[u32] {
        &self.indegree_at_end
    }
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn birth(&self, v: usize) -> f64 {
        self.vertices[v].birth
    }
    pub fn torus_volume(&self) -> f64 {
        self.view.torus_volume(self.t)
    }

    /// Total degree of every vertex.
    pub fn degrees(&self) -> Vec<u64> {
        let mut deg: Vec<u64> = self.indegree_at_end.iter().map(|&k| k as u64).collect();
        for e in &self.edges {
            deg[e.younger] += 1;
        }
        deg
    }

    /// Torus distance between two vertices.
    pub fn distance(&self, u: usize, v: usize) -> f64 {
        let side = torus_side(self.torus_volume(), self.params.d());
        wrapped_sq_dist(
            self.vertices[u].position.coords(),
            self.vertices[v].position.coords(),
            side,
        )
        .sqrt()
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self.num_vertices(), &self.edges, None)
    }
}

/// Compressed undirected adjacency with sorted neighbour lists.
#[derive(Clone, Debug)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Adjacency {
    /// Adjacency over `n` vertices; with a mask, only edges between retained
    /// vertices are kept.
    pub fn new(n: usize, edges: &[Edge], mask: Option<&[bool]>) -> Self {
        let keep = |e: &Edge| mask.is_none_or(|m| m[e.older] && m[e.younger]);
        let mut deg = vec![0usize; n + 1];
        for e in edges.iter().filter(|e| keep(e)) {
            deg[e.older] += 1;
            deg[e.younger] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0;
        offsets.push(0);
        for &k in &deg[..n] {
            acc += k;
            offsets.push(acc);
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0usize; acc];
        for e in edges.iter().filter(|e| keep(e)) {
            neighbors[fill[e.older]] = e.younger;
            fill[e.older] += 1;
            neighbors[fill[e.younger]] = e.older;
            fill[e.younger] += 1;
        }
        for v in 0..n {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Self { offsets, neighbors }
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }
}

/// Probability that `younger` attaches to `older`, which currently holds
/// `older_indegree` edges.
pub fn connection_probability(
    params: &ModelParams,
    view: View,
    t: f64,
    older: &SpaceTimePoint,
    older_indegree: u64,
    younger: &SpaceTimePoint,
) -> Result<f64> {
    if !(older.birth < younger.birth) {
        return Err(contract(format!(
            "older vertex born at {} is not older than {}",
            older.birth, younger.birth
        )));
    }
    if older.dim() != params.d() || younger.dim() != params.d() {
        return Err(contract("vertex dimension differs from model dimension"));
    }
    let side = torus_side(view.torus_volume(t), params.d());
    let dist = wrapped_sq_dist(older.position.coords(), younger.position.coords(), side).sqrt();
    Ok(params.connection_probability(younger.birth, dist, older_indegree))
}

/// Builds a graph from a master seed with the default resource cap.
pub fn build_graph(params: &ModelParams, view: View, t: f64, seed: u64, mode: Mode) -> Result<Graph> {
    build_graph_with_stats(params, view, t, seed, mode, DEFAULT_MAX_EXPECTED_POINTS).map(|(g, _)| g)
}

/// Builds a graph and reports construction counters.
pub fn build_graph_with_stats(
    params: &ModelParams,
    view: View,
    t: f64,
    seed: u64,
    mode: Mode,
    max_expected_points: f64,
) -> Result<(Graph, BuildStats)> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(contract(format!("t must be positive, got {t}")));
    }
    let points = sample_poisson_points_capped(
        params.d(),
        view.torus_volume(t),
        view.horizon(t),
        1.0,
        &SeedSpec::new(seed, "points", 0),
        max_expected_points,
    )?;
    let oracle = PairMarkOracle::new(seed);
    build_from_points(params, view, t, seed, points, &oracle, mode)
}

fn check_points(params: &ModelParams, view: View, t: f64, points: &[SpaceTimePoint]) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(contract(format!("t must be positive, got {t}")));
    }
    let horizon = view.horizon(t);
    let half = 0.5 * torus_side(view.torus_volume(t), params.d());
    let mut prev = 0.0;
    for (i, p) in points.iter().enumerate() {
        if p.dim() != params.d() {
            return Err(contract(format!("vertex {i} has dimension {}", p.dim())));
        }
        if !(p.birth > prev && p.birth <= horizon) {
            return Err(contract(format!(
                "vertex {i}: births must increase strictly within (0, {horizon}]"
            )));
        }
        if p.position.coords().iter().any(|&c| !(c > -half && c <= half)) {
            return Err(contract(format!("vertex {i} lies outside the torus domain")));
        }
        prev = p.birth;
    }
    Ok(())
}

/// Builds a graph on an explicit birth-sorted point set. Vertex ids are the
/// positions in `points`; the seed labels the skip-sampling stream.
pub fn build_from_points(
    params: &ModelParams,
    view: View,
    t: f64,
    seed: u64,
    points: Vec<SpaceTimePoint>,
    oracle: &PairMarkOracle,
    mode: Mode,
) -> Result<(Graph, BuildStats)> {
    check_points(params, view, t, &points)?;
    let d = params.d();
    let side = torus_side(view.torus_volume(t), d);
    let coords: Vec<f64> = points.iter().flat_map(|p| p.position.coords().iter().copied()).collect();
    let births: Vec<f64> = points.iter().map(|p| p.birth).collect();
    let ctx = Ctx {
        params,
        d,
        side,
        coords: &coords,
        births: &births,
    };
    let (edges, stats) = match mode {
        Mode::Naive => build_naive(&ctx, oracle),
        Mode::RingExact => build_ring_exact(&ctx, oracle)?,
        Mode::RingSkip => build_ring_skip(&ctx, &SeedSpec::new(seed, "skip", 0))?,
    };
    let g = Graph::from_parts(view, t, params.clone(), seed, points, edges)?;
    Ok((g, stats))
}

struct Ctx<'a> {
    params: &'a ModelParams,
    d: usize,
    side: f64,
    coords: &'a [f64],
    births: &'a [f64],
}

impl Ctx<'_> {
    fn n(&self) -> usize {
        self.births.len()
    }

    #[inline]
    fn pos(&self, v: usize) -> &[f64] {
        &self.coords[v * self.d..(v + 1) * self.d]
    }

    #[inline]
    fn prob(&self, x: usize, y: usize, indegree: u32) -> f64 {
        let sq = wrapped_sq_dist(self.pos(x), self.pos(y), self.side);
        self.params
            .profile_value(self.births[y] * pow_half_d(sq, self.d) / self.params.attachment_value(indegree as u64))
    }
}

/// `sq^{d/2}`, i.e. distance to the power `d` given the squared distance.
#[inline]
fn pow_half_d(sq: f64, d: usize) -> f64 {
    match d {
        1 => sq.sqrt(),
        2 => sq,
        3 => sq * sq.sqrt(),
        _ => sq.sqrt().powi(d as i32),
    }
}

fn push_edges(edges: &mut Vec<Edge>, chosen: &mut [usize], y: usize) {
    chosen.sort_unstable();
    edges.extend(chosen.iter().map(|&x| Edge { older: x, younger: y }));
}

fn build_naive(ctx: &Ctx, oracle: &PairMarkOracle) -> (Vec<Edge>, BuildStats) {
    let n = ctx.n();
    let mut indegree = vec![0u32; n];
    let mut edges = Vec::new();
    let mut stats = BuildStats::default();
    let mut chosen = Vec::new();
    for y in 0..n {
        chosen.clear();
        for x in 0..y {
            stats.evaluations += 1;
            if oracle.pair_mark_unchecked(y, x) <= ctx.prob(x, y, indegree[x]) {
                chosen.push(x);
            }
        }
        for &x in &chosen {
            indegree[x] += 1;
        }
        push_edges(&mut edges, &mut chosen, y);
    }
    (edges, stats)
}

fn build_ring_exact(ctx: &Ctx, oracle: &PairMarkOracle) -> Result<(Vec<Edge>, BuildStats)> {
    let n = ctx.n();
    let levels = levels_for(n, ctx.d, 4.0);
    let mut index = CellIndex::new(ctx.d, ctx.side, levels, ctx.coords)?;
    let mut indegree = vec![0u32; n];
    let mut edges = Vec::new();
    let mut stats = BuildStats::default();
    let mut chosen = Vec::new();
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(index.num_cells());
    for y in 0..n {
        chosen.clear();
        let home = index.cell_of(y);
        order.clear();
        order.extend((0..index.num_cells()).map(|c| (index.cell_ring(home, c), c)));
        order.sort_unstable();
        for &(_, cell) in &order {
            for &x in index.cell_members(cell) {
                stats.evaluations += 1;
                if oracle.pair_mark_unchecked(y, x) <= ctx.prob(x, y, indegree[x]) {
                    chosen.push(x);
                }
            }
        }
        for &x in &chosen {
            indegree[x] += 1;
            index.raise_indegree(x, indegree[x]);
        }
        index.insert(y, 0);
        push_edges(&mut edges, &mut chosen, y);
    }
    Ok((edges, stats))
}

/// Above this many expected candidates a block is split into its children.
const REFINE_THRESHOLD: f64 = 1.0;

fn build_ring_skip(ctx: &Ctx, seed: &SeedSpec) -> Result<(Vec<Edge>, BuildStats)> {
    if ctx.d > MAX_DIM {
        return Err(contract(format!("ring-skip supports at most {MAX_DIM} dimensions")));
    }
    let n = ctx.n();
    let levels = levels_for(n, ctx.d, 4.0);
    let mut index = CellIndex::new(ctx.d, ctx.side, levels, ctx.coords)?;
    let mut rng = seed.rng();
    let mut indegree = vec![0u32; n];
    let mut edges = Vec::new();
    let mut stats = BuildStats::default();
    let mut chosen = Vec::new();
    let mut stack: Vec<(usize, BlockCoords)> = Vec::new();
    let params = ctx.params;
    for y in 0..n {
        chosen.clear();
        let s = ctx.births[y];
        let ypos = ctx.pos(y);
        stack.clear();
        stack.push((levels, [0u32; MAX_DIM]));
        while let Some((level, b)) = stack.pop() {
            let idx = index.block_index(level, &b);
            let count = index.block_count(level, idx);
            if count == 0 {
                continue;
            }
            stats.blocks_visited += 1;
            let sq = index.min_sq_distance(ypos, level, &b);
            let kmax = index.block_max_indegree(level, idx);
            let bound = params.profile_value(
                s * pow_half_d(sq, ctx.d) * (1.0 - 1e-12) / params.attachment_value(kmax as u64),
            );
            if bound <= 0.0 {
                continue;
            }
            if level > 0 && count as f64 * bound > REFINE_THRESHOLD {
                stack.extend(index.children(level, &b).map(|c| (level - 1, c)));
                continue;
            }
            // Geometric skipping: each of the `count` vertices is proposed
            // independently with probability `bound`.
            let log_q = (-bound).ln_1p();
            let mut pos: f64 = -1.0;
            loop {
                let u: f64 = 1.0 - rng.random::<f64>();
                let jump = if bound >= 1.0 { 0.0 } else { (u.ln() / log_q).floor() };
                pos += 1.0 + jump;
                if !(pos < count as f64) {
                    break;
                }
                let x = index.locate(level, &b, pos as u32);
                stats.evaluations += 1;
                let p = ctx.prob(x, y, indegree[x]);
                if p > bound {
                    stats.bound_violations += 1;
                }
                if rng.random::<f64>() * bound < p {
                    chosen.push(x);
                }
            }
        }
        for &x in &chosen {
            indegree[x] += 1;
            index.raise_indegree(x, indegree[x]);
        }
        index.insert(y, 0);
        push_edges(&mut edges, &mut chosen, y);
    }
    Ok((edges, stats))
}

/// Maps every vertex through the space-time rescaling; edges are unchanged.
pub fn rescale_graph(g: &Graph, direction: Direction) -> Result<Graph> {
    let (from, to) = match direction {
        Direction::Forward => (View::Growth, View::Stationary),
        Direction::Inverse => (View::Stationary, View::Growth),
    };
    if g.view != from {
        return Err(contract(format!(
            "graph is in the {} view, {direction:?} rescaling expects {from}",
            g.view
        )));
    }
    let vertices = g
        .vertices
        .iter()
        .map(|p| rescale(p, g.t, direction))
        .collect::<Result<Vec<_>>>()?;
    Ok(Graph {
        view: to,
        t: g.t,
        params: g.params.clone(),
        seed: g.seed,
        vertices,
        edges: g.edges.clone(),
        indegree_at_end: g.indegree_at_end.clone(),
    })
}
