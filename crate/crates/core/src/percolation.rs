//! Bernoulli vertex percolation and component statistics.

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::generator::{Edge, Graph};
use crate::randomness::PairMarkOracle;

/// Purpose label of the retention marks.
pub const PERCOLATION_PURPOSE: &str = "perc";

/// Outcome of percolating a graph at one retention probability.
#[derive(Clone, Debug, PartialEq)]
pub struct PercolationResult {
    p: f64,
    retained: Vec<bool>,
    /// Component label of each retained vertex. Labels are numbered in order
    /// of their smallest vertex id.
    component: Vec<Option<usize>>,
    sizes: Vec<usize>,
}

impl PercolationResult {
    /// Components of the subgraph induced by `retained`.
    pub fn from_mask(n: usize, edges: &[Edge], retained: Vec<bool>, p: f64) -> Result<Self> {
        if retained.len() != n {
            return Err(contract(format!("mask has {} entries for {n} vertices", retained.len())));
        }
        let mut uf = UnionFind::<usize>::new(n);
        for e in edges {
            if e.older >= n || e.younger >= n {
                return Err(contract(format!("edge ({}, {}) out of range", e.older, e.younger)));
            }
            if retained[e.older] && retained[e.younger] {
                uf.union(e.older, e.younger);
            }
        }
        let mut label_of_root = vec![usize::MAX; n];
        let mut component = vec![None; n];
        let mut sizes = Vec::new();
        for v in 0..n {
            if !retained[v] {
                continue;
            }
            let root = uf.find_mut(v);
            if label_of_root[root] == usize::MAX {
                label_of_root[root] = sizes.len();
                sizes.push(0);
            }
            let label = label_of_root[root];
            sizes[label] += 1;
            component[v] = Some(label);
        }
        Ok(Self {
            p,
            retained,
            component,
            sizes,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn retained(&self) -> &[bool] {
        &self.retained
    }
    pub fn is_retained(&self, v: usize) -> bool {
        self.retained[v]
    }
    pub fn retained_count(&self) -> usize {
        self.sizes.iter().sum()
    }
    /// Component label of a vertex, `None` if it was removed.
    pub fn component_of(&self, v: usize) -> Option<usize> {
        self.component[v]
    }
    /// Size of each component, indexed by label.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
    /// Members of every component, indexed by label, each in id order.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.sizes.len()];
        for (v, c) in self.component.iter().enumerate() {
            if let Some(c) = c {
                out[*c].push(v);
            }
        }
        out
    }
}

/// Retains each vertex `v` iff its "perc" mark under `seed` is at most `p`.
pub fn percolate(g: &Graph, p: f64, seed: u64) -> Result<PercolationResult> {
    let mask = retention_mask(g.num_vertices(), p, seed)?;
    PercolationResult::from_mask(g.num_vertices(), g.edges(), mask, p)
}

/// The retention mask alone.
pub fn retention_mask(n: usize, p: f64, seed: u64) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(contract(format!("retention probability must lie in [0,1], got {p}")));
    }
    let marks = PairMarkOracle::new(seed).vertex_marks(PERCOLATION_PURPOSE);
    Ok((0..n).map(|v| marks.mark(v) <= p).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub largest: usize,
    pub second: usize,
    pub count: usize,
}

pub fn component_stats(r: &PercolationResult) -> ComponentStats {
    let (mut largest, mut second) = (0, 0);
    for &s in &r.sizes {
        if s > largest {
            second = largest;
            largest = s;
        } else if s > second {
            second = s;
        }
    }
    ComponentStats {
        largest,
        second,
        count: r.sizes.len(),
    }
}

/// Retained vertices in the component of the oldest retained vertex,
/// divided by `t`. Zero if nothing is retained.
pub fn fraction_connected_to_oldest(r: &PercolationResult, t: f64) -> f64 {
    match r.component.iter().find_map(|c| *c) {
        Some(label) => r.sizes[label] as f64 / t,
        None => 0.0,
    }
}

/// Fraction of retained vertices in components of at most `k` vertices.
pub fn finite_component_fraction(r: &PercolationResult, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(contract("component size bound must be at least 1"));
    }
    let total = r.retained_count();
    if total == 0 {
        return Ok(0.0);
    }
    let small: usize = r.sizes.iter().filter(|&&s| s <= k).sum();
    Ok(small as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{build_graph, Mode, View};
    use crate::model::ModelParams;

    fn edges(list: &[(usize, usize)]) -> Vec<Edge> {
        list.iter().map(|&(older, younger)| Edge { older, younger }).collect()
    }

    #[test]
    fn hand_union_find() {
        let r = PercolationResult::from_mask(6, &edges(&[(0, 1), (1, 2), (3, 4)]), vec![true; 6], 1.0).unwrap();
        let s = component_stats(&r);
        assert_eq!((s.largest, s.second, s.count), (3, 2, 3));
        let empty = PercolationResult::from_mask(0, &[], vec![], 1.0).unwrap();
        let s = component_stats(&empty);
        assert_eq!((s.largest, s.second, s.count), (0, 0, 0));
        assert_eq!(fraction_connected_to_oldest(&empty, 10.0), 0.0);
    }

    #[test]
    fn path_graph() {
        let n = 50;
        let path: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let r = PercolationResult::from_mask(n, &edges(&path), vec![true; n], 1.0).unwrap();
        let s = component_stats(&r);
        assert_eq!((s.largest, s.second, s.count), (n, 0, 1));
        assert_eq!(fraction_connected_to_oldest(&r, 100.0), n as f64 / 100.0);
        assert_eq!(finite_component_fraction(&r, n).unwrap(), 1.0);
    }

    #[test]
    fn oldest_isolated_and_matching() {
        let r = PercolationResult::from_mask(5, &edges(&[(1, 2), (3, 4)]), vec![true; 5], 1.0).unwrap();
        assert_eq!(fraction_connected_to_oldest(&r, 8.0), 1.0 / 8.0);
        let m = PercolationResult::from_mask(4, &edges(&[(0, 1), (2, 3)]), vec![true; 4], 1.0).unwrap();
        assert_eq!(finite_component_fraction(&m, 1).unwrap(), 0.0);
        assert!(finite_component_fraction(&m, 0).is_err());
    }

    #[test]
    fn retention_counts_and_extremes() {
        let mask = retention_mask(100_000, 0.3, 42).unwrap();
        let kept = mask.iter().filter(|&&b| b).count();
        assert!((29520..=30480).contains(&kept), "{kept}");
        let p = ModelParams::with_defaults(1, 0.6, 2.0).unwrap();
        let g = build_graph(&p, View::Stationary, 500.0, 3, Mode::RingSkip).unwrap();
        let full = percolate(&g, 1.0, 1).unwrap();
        assert_eq!(full.retained_count(), g.num_vertices());
        let none = percolate(&g, 0.0, 1).unwrap();
        assert_eq!(none.retained_count(), 0);
        assert!(percolate(&g, 1.5, 1).is_err());
    }
}
