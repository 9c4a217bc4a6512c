//! Brute-force oracles shared by the integration targets.
#![allow(dead_code)]

use std::collections::BTreeSet;

use spag::generator::{Adjacency, Graph};
use spag::pathlab::{classify_part, decompose, split, PartType, PathSample, Role};

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Part type read off the shape: position of the valleys relative to the
/// ends, without reference to orientation.
pub fn shape_type(u: &[f64]) -> Option<PartType> {
    let valleys: Vec<usize> = (1..u.len() - 1).filter(|&i| u[i] < u[i - 1] && u[i] < u[i + 1]).collect();
    let peaks = (1..u.len() - 1).filter(|&i| u[i] > u[i - 1] && u[i] > u[i + 1]).count();
    match (u.len(), valleys.len(), peaks) {
        (2, 0, 0) => Some(PartType::I),
        (3, 1, 0) => Some(PartType::II),
        (4, 1, 0) => {
            let v = valleys[0];
            let (short_end, long) = if v == 1 { (u[0], [u[2], u[3]]) } else { (u[3], [u[1], u[0]]) };
            let (lo, hi) = (long[0].min(long[1]), long[0].max(long[1]));
            if lo < short_end && short_end < hi {
                Some(PartType::III)
            } else if short_end > hi {
                Some(PartType::IV)
            } else {
                None
            }
        }
        (5, 2, 1) => {
            let deep = if u[1] < u[3] { 1 } else { 3 };
            let (near, far) = if deep == 1 { (u[0], u[4]) } else { (u[4], u[0]) };
            Some(if near > far { PartType::V } else { PartType::VI })
        }
        _ => None,
    }
}

/// Checks splitting and contribution accounting on every ordering of seven
/// distinct birth times; returns the number of orderings and part types seen.
pub fn check_all_orderings_of_seven() -> (usize, usize) {
    let mut orderings = 0;
    let mut seen_types = BTreeSet::new();
    for perm in permutations(7) {
        orderings += 1;
        let u: Vec<f64> = perm.iter().map(|&r| (r + 1) as f64 / 8.0).collect();
        let m = u.len();
        let cuts = split(&u).unwrap();
        assert_eq!(cuts.first(), Some(&0));
        assert_eq!(cuts.last(), Some(&(m - 1)));
        let dec = decompose(&u).unwrap();
        for (j, w) in cuts.windows(2).enumerate() {
            let part = &u[w[0]..=w[1]];
            assert!(part.len() <= 5, "{u:?}: part {j} has {} edges", part.len() - 1);
            assert_eq!(split(part).unwrap(), vec![0, part.len() - 1], "{u:?}");
            let ty = classify_part(part).unwrap();
            assert_eq!(Some(ty), shape_type(part), "{u:?} part {part:?}");
            assert_eq!(dec.part_types[j], ty);
            seen_types.insert(format!("{ty}"));
        }
        for i in 0..m {
            let local_max = (i == 0 || u[i] > u[i - 1]) && (i == m - 1 || u[i] > u[i + 1]);
            let local_min = i > 0 && i < m - 1 && u[i] < u[i - 1] && u[i] < u[i + 1];
            let parts: Vec<usize> = (0..dec.num_parts())
                .filter(|&j| {
                    let (lo, hi) = dec.part_range(j);
                    let part_max = || (i == lo || u[i] > u[i - 1]) && (i == hi || u[i] > u[i + 1]);
                    lo <= i && i <= hi && !part_max()
                })
                .collect();
            if local_max {
                assert!(parts.is_empty(), "{u:?}: local max {i} contributes to {parts:?}");
            } else {
                assert_eq!(parts.len(), 1, "{u:?}: vertex {i} contributes to {parts:?}");
            }
            if local_min {
                let (lo, hi) = dec.part_range(parts[0]);
                assert!(lo < i && i < hi, "{u:?}: local min {i} on a boundary");
            }
            for (j, c) in dec.contributors.iter().enumerate() {
                assert_eq!(c.contains(&i), parts.contains(&j));
            }
        }
    }
    (orderings, seen_types.len())
}

pub fn brute_common_children(g: &Graph, adj: &Adjacency, a: usize, b: usize) -> Vec<usize> {
    (0..g.num_vertices()).filter(|&v| v > a && v > b && adj.has_edge(v, a) && adj.has_edge(v, b)).collect()
}

pub fn check_sample(g: &Graph, adj: &Adjacency, s: &PathSample) {
    let qp = &s.quick_path;
    let ids = &qp.vertex_ids;
    let m = ids.len();
    assert_eq!(ids.first(), s.geodesic.first());
    assert_eq!(ids.last(), s.geodesic.last());
    for i in 0..m {
        if qp.inserted[i] {
            let cc = brute_common_children(g, adj, ids[i - 1], ids[i + 1]);
            assert_eq!(cc.first(), Some(&ids[i]), "inserted vertex is not the oldest common child");
            assert_eq!(qp.roles[i], Role::LocalMax);
        }
    }
    for n in (0..m).filter(|&n| qp.is_regular(n)) {
        for k in 0..m {
            if k.abs_diff(n) >= 2 && ids[k] > ids[n] {
                assert!(!adj.has_edge(ids[n], ids[k]), "regular {n} adjacent to younger {k}");
            }
        }
        for k in (n + 2..m).filter(|&k| qp.is_regular(k)) {
            let cc = brute_common_children(g, adj, ids[n], ids[k]);
            if !cc.is_empty() {
                assert_eq!(k, n + 2, "regular {n} and {k} share children");
                assert_eq!(qp.roles[n + 1], Role::LocalMax);
                assert_eq!(cc[0], ids[n + 1]);
            }
        }
    }
    // Children sets recomputed from the edge list.
    let births = qp.births(g);
    let mut expected: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); s.decomposition.num_parts()];
    for (j, contributors) in s.decomposition.contributors.iter().enumerate() {
        for &i in contributors {
            let hi = [i.checked_sub(1), (i + 1 < m).then_some(i + 1)]
                .into_iter()
                .flatten()
                .map(|k| births[k])
                .fold(f64::NEG_INFINITY, f64::max);
            for e in g.edges() {
                if e.older == ids[i] {
                    let c = e.younger;
                    let b = g.birth(c);
                    let neighbour = (i > 0 && ids[i - 1] == c) || (i + 1 < m && ids[i + 1] == c);
                    if !neighbour && b > births[i] && b < hi {
                        expected[j].insert(c);
                    }
                }
            }
        }
    }
    let got: Vec<BTreeSet<usize>> = s.children.sets.iter().map(|v| v.iter().copied().collect()).collect();
    assert_eq!(got, expected);
    let path_set: BTreeSet<usize> = ids.iter().copied().collect();
    let mut union = BTreeSet::new();
    for set in &expected {
        assert!(set.is_disjoint(&path_set), "children set meets the path");
        assert!(set.is_disjoint(&union), "children sets overlap");
        union.extend(set.iter().copied());
    }
    assert!(s.children.disjoint);
}

