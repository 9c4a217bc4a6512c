//! Combinatorial path objects: geodesics in a percolated graph, the quick
//! paths derived from them, their splitting into small parts with the
//! associated children sets, and one-dimensional traces.
//!
//! Vertex ids are birth ranks, so a smaller id always means an older vertex.

mod region;
mod split;

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::generator::{Adjacency, Graph};
use crate::percolation::{retention_mask, PercolationResult};
use crate::randomness::SeedSpec;

pub use region::{trace, trace_points, Region, RegionKind, Trace, TracePoints};
pub use split::{classify_part, decompose, split, PartDecomposition, PartType};

/// Shortest path from `from` to `to` in `adj`. Among shortest paths the one
/// whose vertex sequence is lexicographically smallest is returned.
pub fn geodesic(adj: &Adjacency, from: usize, to: usize) -> Result<Vec<usize>> {
    let n = adj.num_vertices();
    if from >= n || to >= n {
        return Err(contract(format!("vertex out of range for {n} vertices")));
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[to] = 0;
    queue.push_back(to);
    while let Some(u) = queue.pop_front() {
        if u == from {
            break;
        }
        for &w in adj.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    if dist[from] == usize::MAX {
        return Err(Error::Disconnected(from, to));
    }
    let mut path = vec![from];
    let mut cur = from;
    while cur != to {
        let want = dist[cur] - 1;
        cur = *adj
            .neighbors(cur)
            .iter()
            .find(|&&w| dist[w] == want)
            .expect("a BFS predecessor exists");
        path.push(cur);
    }
    Ok(path)
}

/// Position of a vertex relative to its path neighbours.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    /// Neither younger than all path neighbours nor an interior vertex older
    /// than both.
    Regular,
    /// Younger than every path neighbour.
    LocalMax,
    /// Interior and older than both neighbours.
    LocalMin,
}

/// A quick path: vertex ids with their roles and a flag marking the common
/// children inserted during construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuickPath {
    pub vertex_ids: Vec<usize>,
    pub roles: Vec<Role>,
    pub inserted: Vec<bool>,
}

impl QuickPath {
    pub fn len(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_ids.is_empty()
    }

    /// Whether position `i` is not a local maximum.
    pub fn is_regular(&self, i: usize) -> bool {
        self.roles[i] != Role::LocalMax
    }

    /// Birth times along the path.
    pub fn births(&self, g: &Graph) -> Vec<f64> {
        self.vertex_ids.iter().map(|&v| g.birth(v)).collect()
    }
}

/// Roles of the vertices of an id sequence.
pub fn roles_of(ids: &[usize]) -> Vec<Role> {
    let m = ids.len();
    (0..m)
        .map(|i| {
            let left = (i > 0).then(|| ids[i - 1]);
            let right = (i + 1 < m).then(|| ids[i + 1]);
            let older_than = |o: Option<usize>| o.is_some_and(|w| ids[i] < w);
            if m > 1 && left.is_none_or(|w| ids[i] > w) && right.is_none_or(|w| ids[i] > w) {
                Role::LocalMax
            } else if older_than(left) && older_than(right) {
                Role::LocalMin
            } else {
                Role::Regular
            }
        })
        .collect()
}

/// Common children of `a` and `b`: vertices adjacent to both and younger
/// than both, in increasing id order.
pub fn common_children(adj: &Adjacency, a: usize, b: usize) -> Vec<usize> {
    let floor = a.max(b);
    let (na, nb) = (adj.neighbors(a), adj.neighbors(b));
    let (mut i, mut j) = (na.partition_point(|&w| w <= floor), nb.partition_point(|&w| w <= floor));
    let mut out = Vec::new();
    while i < na.len() && j < nb.len() {
        match na[i].cmp(&nb[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(na[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn check_input_path(full: &Adjacency, retained: &[bool], path: &[usize]) -> Result<()> {
    let n = full.num_vertices();
    if path.is_empty() {
        return Err(contract("path is empty"));
    }
    if retained.len() != n {
        return Err(contract(format!("mask has {} entries for {n} vertices", retained.len())));
    }
    let mut seen = vec![false; n];
    for (i, &v) in path.iter().enumerate() {
        if v >= n {
            return Err(contract(format!("path vertex {v} out of range")));
        }
        if !retained[v] {
            return Err(contract(format!("path vertex {v} at position {i} is not retained")));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(contract(format!("path revisits vertex {v} at position {i}")));
        }
        if i > 0 && !full.has_edge(path[i - 1], v) {
            return Err(contract(format!("positions {} and {i} are not adjacent", i - 1)));
        }
    }
    Ok(())
}

/// Quick path associated with a path of retained vertices. `full` is the
/// adjacency of the whole graph; the result is checked before it is
/// returned and a failed check is reported as [`Error::Verification`].
pub fn quick_path(full: &Adjacency, retained: &[bool], path: &[usize]) -> Result<QuickPath> {
    check_input_path(full, retained, path)?;
    let position: HashMap<usize, usize> = path.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let last = path.len() - 1;

    // Select the retained skeleton: from the current index jump to the
    // furthest later index sharing a common child with it.
    let mut picks = vec![0usize];
    let mut cur = 0usize;
    while cur < last {
        let a = path[cur];
        let mut furthest = None::<usize>;
        for &c in full.neighbors(a).iter().filter(|&&c| c > a) {
            for &w in full.neighbors(c) {
                if w < c {
                    if let Some(&k) = position.get(&w) {
                        if k > cur && furthest.is_none_or(|f| k > f) {
                            furthest = Some(k);
                        }
                    }
                }
            }
        }
        cur = furthest.unwrap_or(cur + 1);
        picks.push(cur);
    }

    let mut ids = vec![path[0]];
    let mut inserted = vec![false];
    for w in picks.windows(2) {
        let (a, b) = (path[w[0]], path[w[1]]);
        if !full.has_edge(a, b) {
            let c = *common_children(full, a, b)
                .first()
                .expect("non-adjacent consecutive picks share a common child");
            ids.push(c);
            inserted.push(true);
        }
        ids.push(b);
        inserted.push(false);
    }
    let qp = QuickPath {
        roles: roles_of(&ids),
        vertex_ids: ids,
        inserted,
    };
    verify_quick_path(full, retained, &qp)?;
    Ok(qp)
}

/// Structural check of a quick path against the full graph.
pub fn verify_quick_path(full: &Adjacency, retained: &[bool], qp: &QuickPath) -> Result<()> {
    let ids = &qp.vertex_ids;
    let m = ids.len();
    let fail = |msg: String| Err(Error::Verification(msg));
    if m == 0 || qp.roles.len() != m || qp.inserted.len() != m {
        return fail("inconsistent quick path lengths".into());
    }
    if qp.roles != roles_of(ids) {
        return fail("roles do not match the birth order".into());
    }
    let mut position = HashMap::with_capacity(m);
    for (i, &v) in ids.iter().enumerate() {
        if position.insert(v, i).is_some() {
            return fail(format!("self-avoidance: vertex {v} repeats at position {i}"));
        }
        if i > 0 && !full.has_edge(ids[i - 1], v) {
            return fail(format!("positions {} and {i} are not adjacent", i - 1));
        }
    }
    for i in 0..m {
        if (i == 0 || qp.is_regular(i)) && !retained[ids[i]] {
            return fail(format!("property (i): regular position {i} (vertex {}) is not retained", ids[i]));
        }
        if qp.inserted[i] {
            if i == 0 || i + 1 == m || qp.roles[i] != Role::LocalMax {
                return fail(format!("inserted position {i} is not an interior local maximum"));
            }
            let oldest = common_children(full, ids[i - 1], ids[i + 1]).first().copied();
            if oldest != Some(ids[i]) {
                return fail(format!(
                    "inserted position {i}: vertex {} is not the oldest common child (found {oldest:?})",
                    ids[i]
                ));
            }
        }
    }
    for n in (0..m).filter(|&n| qp.is_regular(n)) {
        let z = ids[n];
        for &w in full.neighbors(z).iter().filter(|&&w| w > z) {
            if let Some(&k) = position.get(&w) {
                if k.abs_diff(n) >= 2 {
                    return fail(format!("property (ii): regular position {n} is adjacent to younger position {k}"));
                }
            }
        }
        let mut partners: Vec<usize> = Vec::new();
        for &c in full.neighbors(z).iter().filter(|&&c| c > z) {
            for &w in full.neighbors(c).iter().filter(|&&w| w < c) {
                if let Some(&k) = position.get(&w) {
                    if k >= n + 2 && qp.is_regular(k) {
                        partners.push(k);
                    }
                }
            }
        }
        partners.sort_unstable();
        partners.dedup();
        for k in partners {
            let shared = common_children(full, z, ids[k]);
            let ok = k == n + 2 && qp.roles[n + 1] == Role::LocalMax && shared.first() == Some(&ids[n + 1]);
            if !ok {
                return fail(format!(
                    "property (iii): regular positions {n} and {k} share children {shared:?}"
                ));
            }
        }
    }
    Ok(())
}

/// Children sets of the parts of a quick path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChildrenSets {
    /// One sorted set per part.
    pub sets: Vec<Vec<usize>>,
    /// Whether the sets are pairwise disjoint and avoid the path.
    pub disjoint: bool,
    /// First collision found, as (part, part or `None` for the path, vertex).
    pub collision: Option<(usize, Option<usize>, usize)>,
}

/// For every part, the children of its contributing vertices whose birth
/// lies strictly between the contributor's birth and the later of its path
/// neighbours' births, excluding those path neighbours themselves.
pub fn children_sets(g: &Graph, full: &Adjacency, qp: &QuickPath, dec: &PartDecomposition) -> ChildrenSets {
    let ids = &qp.vertex_ids;
    let m = ids.len();
    let mut sets = Vec::with_capacity(dec.num_parts());
    for contributors in &dec.contributors {
        let mut set = Vec::new();
        for &i in contributors {
            let z = ids[i];
            let lo = g.birth(z);
            let left = (i > 0).then(|| ids[i - 1]);
            let right = (i + 1 < m).then(|| ids[i + 1]);
            let hi = left.into_iter().chain(right).map(|v| g.birth(v)).fold(f64::NEG_INFINITY, f64::max);
            for &c in full.neighbors(z).iter().filter(|&&c| c > z) {
                if Some(c) == left || Some(c) == right {
                    continue;
                }
                let b = g.birth(c);
                if b > lo && b < hi {
                    set.push(c);
                }
            }
        }
        set.sort_unstable();
        set.dedup();
        sets.push(set);
    }
    let mut owner: HashMap<usize, Option<usize>> = ids.iter().map(|&v| (v, None)).collect();
    let mut collision = None;
    'outer: for (j, set) in sets.iter().enumerate() {
        for &c in set {
            if let Some(prev) = owner.insert(c, Some(j)) {
                collision = Some((j, prev, c));
                break 'outer;
            }
        }
    }
    ChildrenSets {
        disjoint: collision.is_none(),
        sets,
        collision,
    }
}

/// Everything derived from one sampled geodesic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub geodesic: Vec<usize>,
    pub quick_path: QuickPath,
    pub decomposition: PartDecomposition,
    pub children: ChildrenSets,
    pub trace: Option<Trace>,
}

/// Analyses the geodesic between two retained vertices of a percolated
/// graph. The trace is included for one-dimensional stationary graphs.
pub fn analyze_pair(
    g: &Graph,
    full: &Adjacency,
    percolated: &Adjacency,
    retained: &[bool],
    from: usize,
    to: usize,
) -> Result<PathSample> {
    let geo = geodesic(percolated, from, to)?;
    let qp = quick_path(full, retained, &geo)?;
    let decomposition = decompose(&qp.births(g))?;
    let children = children_sets(g, full, &qp, &decomposition);
    let trace = if region::trace_applies(g) {
        Some(trace(g, &qp, retained)?)
    } else {
        None
    };
    Ok(PathSample {
        geodesic: geo,
        quick_path: qp,
        decomposition,
        children,
        trace,
    })
}

/// Samples up to `samples` geodesics between distinct vertices of the
/// largest retained component; returns fewer only if that component has a
/// single vertex or none.
pub fn sample_paths(g: &Graph, p: f64, perc_seed: u64, samples: usize) -> Result<Vec<PathSample>> {
    let mask = retention_mask(g.num_vertices(), p, perc_seed)?;
    let perc = PercolationResult::from_mask(g.num_vertices(), g.edges(), mask.clone(), p)?;
    let Some((label, &size)) = perc.sizes().iter().enumerate().max_by_key(|&(l, &s)| (s, std::cmp::Reverse(l))) else {
        return Ok(Vec::new());
    };
    if size < 2 {
        return Ok(Vec::new());
    }
    let members: Vec<usize> = (0..g.num_vertices()).filter(|&v| perc.component_of(v) == Some(label)).collect();
    let full = g.adjacency();
    let percolated = Adjacency::new(g.num_vertices(), g.edges(), Some(&mask));
    let mut rng = SeedSpec::new(perc_seed, "pathlab", 0).rng();
    let mut out = Vec::with_capacity(samples);
    while out.len() < samples {
        let a = members[rng.random_range(0..members.len())];
        let b = members[rng.random_range(0..members.len())];
        if a != b {
            out.push(analyze_pair(g, &full, &percolated, &mask, a, b)?);
        }
    }
    Ok(out)
}
