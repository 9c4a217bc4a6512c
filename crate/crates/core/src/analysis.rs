//! Graph diagnostics: degree tails, clustering, edge lengths, hop distances
//! and the core of old, well-connected vertices.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::generator::{Adjacency, Graph, View};
use crate::model::Phase;
use crate::randomness::SeedSpec;

/// Minimum number of observations above the cut for a tail estimate.
pub const MIN_TAIL_SAMPLES: usize = 100;

/// Default share of the largest observations used by [`tail_exponent`].
pub const DEFAULT_TOP_FRACTION: f64 = 0.05;

/// Hill estimate of the power-law exponent `tau` of an integer sample.
///
/// The cut is the value at rank `floor(top_fraction * n)` from the top; only
/// observations strictly above it enter. For integers, an observation `x > c`
/// stands for the continuous interval above `c + 1/2`, so logarithms are taken
/// relative to that midpoint.
pub fn tail_exponent(degrees: &[u64], top_fraction: f64) -> Result<f64> {
    if !(top_fraction > 0.0 && top_fraction < 1.0) {
        return Err(contract(format!("top fraction must lie in (0,1), got {top_fraction}")));
    }
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let k = (top_fraction * sorted.len() as f64).floor() as usize;
    if k >= sorted.len() {
        return Err(Error::InsufficientTail { found: 0, needed: MIN_TAIL_SAMPLES });
    }
    let cut = sorted[k];
    let tail: Vec<u64> = sorted[..k].iter().copied().filter(|&x| x > cut).collect();
    if tail.len() < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientTail {
            found: tail.len(),
            needed: MIN_TAIL_SAMPLES,
        });
    }
    let base = cut as f64 + 0.5;
    let sum: f64 = tail.iter().map(|&x| (x as f64 / base).ln()).sum();
    Ok(1.0 + tail.len() as f64 / sum)
}

/// Average local clustering over a vertex sample; vertices of degree below
/// two are skipped. Uses every vertex when `sample_size >= n`.
pub fn average_clustering(g: &Graph, sample_size: usize, seed: u64) -> Result<f64> {
    let n = g.num_vertices();
    if n == 0 {
        return Err(contract("clustering of an empty graph"));
    }
    let adj = g.adjacency();
    let vertices: Vec<usize> = if sample_size >= n {
        (0..n).collect()
    } else {
        let mut rng = SeedSpec::new(seed, "clustering", 0).rng();
        let mut v = sample(&mut rng, n, sample_size).into_vec();
        v.sort_unstable();
        v
    };
    Ok(mean_local_clustering(&adj, &vertices))
}

/// Mean local clustering of the listed vertices with degree at least two.
pub fn mean_local_clustering(adj: &Adjacency, vertices: &[usize]) -> f64 {
    let mut mark = vec![false; adj.num_vertices()];
    let mut total = 0.0;
    let mut counted = 0usize;
    for &v in vertices {
        let nb = adj.neighbors(v);
        let k = nb.len();
        if k < 2 {
            continue;
        }
        for &u in nb {
            mark[u] = true;
        }
        let mut closed = 0u64;
        for &u in nb {
            closed += adj.neighbors(u).iter().filter(|&&w| mark[w]).count() as u64;
        }
        for &u in nb {
            mark[u] = false;
        }
        // Each closed wedge is seen from both of its ends.
        let wedges = (k * (k - 1)) as f64;
        total += closed as f64 / wedges;
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        total / counted as f64
    }
}

/// Longest incident edge of every vertex, zero for isolated vertices.
pub fn longest_incident_edges(g: &Graph) -> Result<Vec<f64>> {
    if g.view() != View::Stationary {
        return Err(contract("edge lengths are compared in the stationary view"));
    }
    let mut longest = vec![0.0f64; g.num_vertices()];
    for e in g.edges() {
        let len = g.distance(e.older, e.younger);
        longest[e.older] = longest[e.older].max(len);
        longest[e.younger] = longest[e.younger].max(len);
    }
    Ok(longest)
}

/// For each `K` in the grid, the fraction of vertices incident to an edge
/// longer than `K`.
pub fn edge_length_survival(g: &Graph, lengths_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let longest = longest_incident_edges(g)?;
    let n = longest.len().max(1) as f64;
    Ok(lengths_grid
        .iter()
        .map(|&k| (k, longest.iter().filter(|&&l| l > k && l > 0.0).count() as f64 / n))
        .collect())
}

/// Hop distances between sampled vertex pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceSample {
    /// Hop counts of the connected pairs.
    pub hops: Vec<usize>,
    /// Pairs that turned out to lie in different components.
    pub unreachable: usize,
}

impl DistanceSample {
    pub fn median(&self) -> Option<usize> {
        if self.hops.is_empty() {
            return None;
        }
        let mut h = self.hops.clone();
        h.sort_unstable();
        Some(h[(h.len() - 1) / 2])
    }
}

/// BFS hop distance from `from` to `to`, stopping early.
pub fn hop_distance(adj: &Adjacency, from: usize, to: usize, dist: &mut Vec<u32>, queue: &mut VecDeque<usize>) -> Option<usize> {
    if from == to {
        return Some(0);
    }
    dist.clear();
    dist.resize(adj.num_vertices(), u32::MAX);
    queue.clear();
    dist[from] = 0;
    queue.push_back(from);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        for &w in adj.neighbors(u) {
            if dist[w] == u32::MAX {
                if w == to {
                    return Some(du as usize + 1);
                }
                dist[w] = du + 1;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Breadth-first distances from `source` to every vertex.
pub fn bfs_distances(adj: &Adjacency, source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.num_vertices()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].expect("visited");
        for &w in adj.neighbors(u) {
            if dist[w].is_none() {
                dist[w] = Some(du + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Hop distances between `pairs` uniformly drawn pairs of eligible vertices
/// (all vertices, or those with `mask[v]`). The adjacency should already be
/// restricted to the eligible vertices.
pub fn distance_sample(adj: &Adjacency, mask: Option<&[bool]>, pairs: usize, seed: u64) -> Result<DistanceSample> {
    if pairs < 1 {
        return Err(contract("at least one pair is required"));
    }
    let eligible: Vec<usize> = (0..adj.num_vertices()).filter(|&v| mask.is_none_or(|m| m[v])).collect();
    if eligible.is_empty() {
        return Ok(DistanceSample {
            hops: Vec::new(),
            unreachable: pairs,
        });
    }
    let mut rng = SeedSpec::new(seed, "distances", 0).rng();
    let mut dist = Vec::new();
    let mut queue = VecDeque::new();
    let mut out = DistanceSample {
        hops: Vec::with_capacity(pairs),
        unreachable: 0,
    };
    for _ in 0..pairs {
        let u = eligible[rng.random_range(0..eligible.len())];
        let v = eligible[rng.random_range(0..eligible.len())];
        match hop_distance(adj, u, v, &mut dist, &mut queue) {
            Some(h) => out.hops.push(h),
            None => out.unreachable += 1,
        }
    }
    Ok(out)
}

/// Default slowly varying correction in the good-vertex threshold.
pub fn default_goodness_correction(u: f64) -> f64 {
    (1.0 + u.ln_1p()).powi(2)
}

/// Indegree of every vertex counting only edges from vertices born at or
/// before `time`.
pub fn indegree_at(g: &Graph, time: f64) -> Vec<u32> {
    let mut z = vec![0u32; g.num_vertices()];
    for e in g.edges() {
        if g.birth(e.younger) <= time {
            z[e.older] += 1;
        }
    }
    z
}

/// Admissible open interval for the core growth exponent.
pub fn core_alpha_range(gamma: f64, delta: f64) -> (f64, f64) {
    let upper = if delta.is_infinite() { 0.0 } else { gamma / (delta * (1.0 - gamma)) };
    (1.0, upper)
}

/// Core diagnostics of a stationary-view graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreReport {
    pub k: u32,
    pub alpha: f64,
    /// Core vertices are born before this time.
    pub birth_threshold: f64,
    pub good_vertex_ids: Vec<usize>,
    pub core_ids: Vec<usize>,
    /// Number of vertices born before the threshold, good or not.
    pub candidates: usize,
    /// Share of the candidates that are good; zero without candidates.
    pub good_fraction: f64,
    pub distance_bound: usize,
    pub pairwise_distance_bound_ok: bool,
    /// Largest hop distance between two core vertices; `None` if some pair
    /// is disconnected.
    pub max_core_distance: Option<usize>,
    pub core_pairs: usize,
    /// Core pairs joined by a common neighbour born after time 1/2.
    pub two_connected_pairs: usize,
}

impl CoreReport {
    pub fn two_connected_fraction(&self) -> Option<f64> {
        (self.core_pairs > 0).then(|| self.two_connected_pairs as f64 / self.core_pairs as f64)
    }
}

/// Extracts the depth-`k` core: good vertices born before `t^{-1/alpha^k}`.
/// A vertex born at `s < 1/2` is good when its indegree at time 1/2 is at
/// least `s^{-gamma} / correction(1/s)`.
pub fn core_report(g: &Graph, k: u32, alpha: f64, correction: &dyn Fn(f64) -> f64) -> Result<CoreReport> {
    if g.view() != View::Stationary {
        return Err(contract("core report needs a stationary-view graph"));
    }
    let params = g.params();
    let verdict = params.classify_phase();
    if verdict.phase != Phase::Robust {
        return Err(Error::Refused(format!(
            "core construction assumes the robust phase gamma > delta/(1+delta); parameters are {} ({})",
            verdict.phase, verdict.criterion
        )));
    }
    let (lo, hi) = core_alpha_range(params.gamma(), params.delta());
    if !(alpha > lo && alpha < hi) {
        return Err(contract(format!("alpha must lie in ({lo}, {hi}), got {alpha}")));
    }
    let gamma = params.gamma();
    let z_half = indegree_at(g, 0.5);
    let good_vertex_ids: Vec<usize> = (0..g.num_vertices())
        .filter(|&v| {
            let s = g.birth(v);
            s < 0.5 && z_half[v] as f64 >= s.powf(-gamma) / correction(1.0 / s)
        })
        .collect();
    let birth_threshold = g.t().powf(-1.0 / alpha.powi(k as i32));
    let candidates = (0..g.num_vertices()).take_while(|&v| g.birth(v) < birth_threshold).count();
    let core_ids: Vec<usize> = good_vertex_ids.iter().copied().filter(|&v| v < candidates).collect();
    let good_fraction = if candidates == 0 {
        0.0
    } else {
        core_ids.len() as f64 / candidates as f64
    };

    let adj = g.adjacency();
    let distance_bound = 4 * k as usize + 4;
    let mut max_core_distance = Some(0);
    let mut ok = true;
    for (i, &u) in core_ids.iter().enumerate() {
        let dist = bfs_distances(&adj, u);
        for &v in &core_ids[i + 1..] {
            match dist[v] {
                Some(h) => {
                    max_core_distance = max_core_distance.map(|m: usize| m.max(h));
                    if h > distance_bound {
                        ok = false;
                    }
                }
                None => {
                    max_core_distance = None;
                    ok = false;
                }
            }
        }
    }

    let mut late = vec![false; g.num_vertices()];
    let mut two_connected_pairs = 0;
    for (i, &u) in core_ids.iter().enumerate() {
        for &w in adj.neighbors(u) {
            late[w] = g.birth(w) > 0.5;
        }
        for &v in &core_ids[i + 1..] {
            if adj.neighbors(v).iter().any(|&w| late[w]) {
                two_connected_pairs += 1;
            }
        }
        for &w in adj.neighbors(u) {
            late[w] = false;
        }
    }
    let core_pairs = core_ids.len() * core_ids.len().saturating_sub(1) / 2;
    Ok(CoreReport {
        k,
        alpha,
        birth_threshold,
        good_vertex_ids,
        core_ids,
        candidates,
        good_fraction,
        distance_bound,
        pairwise_distance_bound_ok: ok,
        max_core_distance,
        core_pairs,
        two_connected_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{build_graph, Edge, Mode};
    use crate::geometry::{SpaceTimePoint, TorusPoint};
    use crate::model::ModelParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        let p = ModelParams::with_defaults(1, 0.5, 2.0).unwrap();
        let vertices = (0..n)
            .map(|i| {
                SpaceTimePoint::new(TorusPoint::new(vec![i as f64], 1000.0).unwrap(), (i + 1) as f64 / (n + 1) as f64)
                    .unwrap()
            })
            .collect();
        let mut e: Vec<Edge> = edges.iter().map(|&(older, younger)| Edge { older, younger }).collect();
        e.sort_by_key(|e| (e.younger, e.older));
        Graph::from_parts(View::Stationary, 1000.0, p, 0, vertices, e).unwrap()
    }

    fn pareto_sample(n: usize, tau: f64, scale: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| scale * (1.0 - rng.random::<f64>()).powf(-1.0 / (tau - 1.0))).collect()
    }

    #[test]
    fn hill_on_pareto() {
        for seed in 0..5 {
            let xs: Vec<u64> = pareto_sample(100_000, 3.0, 1000.0, seed).iter().map(|x| x.floor() as u64).collect();
            let tau = tail_exponent(&xs, 0.05).unwrap();
            assert!((2.85..=3.15).contains(&tau), "tau {tau}");
        }
    }

    #[test]
    fn hill_is_scale_free() {
        let raw = pareto_sample(100_000, 3.0, 1000.0, 9);
        let a: Vec<u64> = raw.iter().map(|x| x.floor() as u64).collect();
        let b: Vec<u64> = raw.iter().map(|x| (x * 3.7).floor() as u64).collect();
        let (ta, tb) = (tail_exponent(&a, 0.05).unwrap(), tail_exponent(&b, 0.05).unwrap());
        assert!((ta - tb).abs() < 0.05);
    }

    #[test]
    fn hill_rejects_constant_degrees() {
        assert!(matches!(
            tail_exponent(&vec![4u64; 10_000], 0.05),
            Err(Error::InsufficientTail { .. })
        ));
    }

    #[test]
    fn clustering_of_small_graphs() {
        let tri = toy_graph(3, &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(average_clustering(&tri, 10, 0).unwrap(), 1.0);
        let star = toy_graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_eq!(average_clustering(&star, 10, 0).unwrap(), 0.0);
        // Paw: triangle 0-1-2 with pendant 3 on 0; vertex 0 has 1 of 3 wedges closed.
        let paw = toy_graph(4, &[(0, 1), (0, 2), (1, 2), (0, 3)]);
        let c = average_clustering(&paw, 10, 0).unwrap();
        assert!((c - (1.0 / 3.0 + 1.0 + 1.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn clustering_is_deterministic_and_bounded() {
        let p = ModelParams::with_defaults(2, 0.5, 5.0).unwrap();
        let g = build_graph(&p, View::Stationary, 3000.0, 2, Mode::RingSkip).unwrap();
        let a = average_clustering(&g, 500, 7).unwrap();
        assert_eq!(a, average_clustering(&g, 500, 7).unwrap());
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn edge_length_survival_edges_cases() {
        let g = toy_graph(5, &[(0, 1), (1, 3)]);
        let s = edge_length_survival(&g, &[0.0, 1.5, 1e4]).unwrap();
        assert_eq!(s[0].1, 3.0 / 5.0);
        assert_eq!(s[1].1, 2.0 / 5.0);
        assert_eq!(s[2].1, 0.0);
        let p = ModelParams::with_defaults(1, 0.5, 2.0).unwrap();
        let growth = build_graph(&p, View::Growth, 100.0, 1, Mode::Naive).unwrap();
        assert!(edge_length_survival(&growth, &[1.0]).is_err());
    }

    #[test]
    fn hop_distances() {
        let g = toy_graph(5, &[(0, 1), (1, 2), (2, 3)]);
        let adj = g.adjacency();
        let (mut d, mut q) = (Vec::new(), VecDeque::new());
        assert_eq!(hop_distance(&adj, 0, 1, &mut d, &mut q), Some(1));
        assert_eq!(hop_distance(&adj, 2, 2, &mut d, &mut q), Some(0));
        assert_eq!(hop_distance(&adj, 0, 3, &mut d, &mut q), Some(3));
        assert_eq!(hop_distance(&adj, 0, 4, &mut d, &mut q), None);
        let s = distance_sample(&adj, None, 200, 3).unwrap();
        assert_eq!(s.hops.len() + s.unreachable, 200);
        assert!(s.unreachable > 0);
    }

    #[test]
    fn indegree_replay_splits_at_half() {
        let p = ModelParams::with_defaults(1, 0.7, 2.0).unwrap();
        let g = build_graph(&p, View::Stationary, 2000.0, 4, Mode::RingSkip).unwrap();
        let half = indegree_at(&g, 0.5);
        let mut late = vec![0u32; g.num_vertices()];
        for e in g.edges() {
            if g.birth(e.younger) > 0.5 {
                late[e.older] += 1;
            }
        }
        let sum: Vec<u32> = half.iter().zip(&late).map(|(a, b)| a + b).collect();
        assert_eq!(sum, g.indegree_at_end());
    }

    #[test]
    fn core_report_contracts() {
        let robust = ModelParams::with_defaults(1, 0.8, 1.2).unwrap();
        let g = build_graph(&robust, View::Stationary, 2000.0, 1, Mode::RingSkip).unwrap();
        assert!(core_report(&g, 1, 3.5, &default_goodness_correction).is_err());
        assert!(core_report(&g, 1, 1.0, &default_goodness_correction).is_err());
        let r = core_report(&g, 1, 2.0, &default_goodness_correction).unwrap();
        assert!(r.core_ids.iter().all(|v| r.good_vertex_ids.contains(v)));
        let weak = ModelParams::with_defaults(1, 0.3, 3.0).unwrap();
        let w = build_graph(&weak, View::Stationary, 500.0, 1, Mode::RingSkip).unwrap();
        assert!(matches!(core_report(&w, 1, 1.5, &default_goodness_correction), Err(Error::Refused(_))));
    }

    #[test]
    fn empty_core_is_vacuously_fine() {
        let robust = ModelParams::with_defaults(1, 0.8, 1.2).unwrap();
        let vertices = vec![SpaceTimePoint::new(TorusPoint::new(vec![0.0], 100.0).unwrap(), 0.9).unwrap()];
        let g = Graph::from_parts(View::Stationary, 100.0, robust, 0, vertices, vec![]).unwrap();
        let r = core_report(&g, 1, 2.0, &default_goodness_correction).unwrap();
        assert!(r.core_ids.is_empty() && r.pairwise_distance_bound_ok);
        assert_eq!(r.max_core_distance, Some(0));
    }
}
