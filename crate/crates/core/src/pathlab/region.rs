//! Space-time regions around one-dimensional vertices and the traces of
//! quick paths they induce.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::generator::{Graph, View};
use crate::geometry::{canonicalize, SpaceTimePoint};

use super::QuickPath;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    /// Younger points within `2/u - 1/u'` of the anchor.
    C,
    /// The enlarged region, which also admits older points.
    CPrime,
}

/// A region anchored at a vertex of a one-dimensional graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    anchor: SpaceTimePoint,
    kind: RegionKind,
    gamma: f64,
    /// Volume of the torus distances are wrapped on; plain line distance
    /// when absent.
    torus_volume: Option<f64>,
}

impl Region {
    pub fn new(anchor: SpaceTimePoint, kind: RegionKind, gamma: f64, torus_volume: Option<f64>) -> Result<Self> {
        if anchor.dim() != 1 {
            return Err(contract(format!("regions are one-dimensional, anchor has dimension {}", anchor.dim())));
        }
        if !(anchor.birth > 0.0) {
            return Err(contract("anchor birth time must be positive"));
        }
        if kind == RegionKind::CPrime && !(gamma > 0.0 && gamma < 1.0) {
            return Err(contract(format!("gamma must lie in (0,1), got {gamma}")));
        }
        Ok(Self {
            anchor,
            kind,
            gamma,
            torus_volume,
        })
    }

    pub fn anchor(&self) -> &SpaceTimePoint {
        &self.anchor
    }
    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    fn distance(&self, x: f64) -> f64 {
        let delta = x - self.anchor.position.coords()[0];
        match self.torus_volume {
            Some(side) => canonicalize(delta, side).abs(),
            None => delta.abs(),
        }
    }

    pub fn contains(&self, p: &SpaceTimePoint) -> Result<bool> {
        if p.dim() != 1 {
            return Err(contract(format!("regions are one-dimensional, point has dimension {}", p.dim())));
        }
        let u = self.anchor.birth;
        let v = p.birth;
        if !(v > 0.0) {
            return Err(contract("point birth time must be positive"));
        }
        let dist = self.distance(p.position.coords()[0]);
        Ok(match self.kind {
            RegionKind::C => v >= u && dist <= 2.0 / u - 1.0 / v,
            RegionKind::CPrime if v >= u => dist <= 2.0 / u + 1.0 / v,
            RegionKind::CPrime => dist <= 2.0 / u + u.powf(self.gamma - 1.0) * v.powf(-self.gamma),
        })
    }
}

/// Trace of a sequence of points: indices of the trace and of the vertices
/// inserted to form the almost quick path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoints {
    /// Indices selected by the trace, starting at 0.
    pub trace: Vec<usize>,
    /// Indices of the almost quick path, in order; a superset of `trace`.
    pub almost: Vec<usize>,
}

/// Computes the trace of `points`. From the current index the trace jumps
/// to the first later point outside the current point's region C; it stops
/// when there is none. Before a trace point whose predecessor in the
/// sequence was skipped and which lies outside the enlarged region of the
/// previous trace point, that predecessor is inserted.
pub fn trace_points(points: &[SpaceTimePoint], gamma: f64, torus_volume: Option<f64>) -> Result<TracePoints> {
    if points.is_empty() {
        return Err(contract("trace of an empty sequence"));
    }
    let mut trace = vec![0usize];
    let mut almost = vec![0usize];
    let mut cur = 0usize;
    loop {
        let region = Region::new(points[cur].clone(), RegionKind::C, gamma, torus_volume)?;
        let mut next = None;
        for (k, p) in points.iter().enumerate().skip(cur + 1) {
            if !region.contains(p)? {
                next = Some(k);
                break;
            }
        }
        let Some(k) = next else { break };
        if k - 1 > cur {
            let enlarged = Region::new(points[cur].clone(), RegionKind::CPrime, gamma, torus_volume)?;
            if !enlarged.contains(&points[k])? {
                almost.push(k - 1);
            }
        }
        trace.push(k);
        almost.push(k);
        cur = k;
    }
    Ok(TracePoints { trace, almost })
}

/// Trace of a quick path in a graph, with retention counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    /// Quick-path positions of the trace.
    pub positions: Vec<usize>,
    pub vertex_ids: Vec<usize>,
    /// Vertex ids of the almost quick path.
    pub almost_quick_path: Vec<usize>,
    pub retained: usize,
    pub retained_fraction: f64,
    /// The guaranteed lower bound `1/2 - 1/len` on the retained fraction.
    pub bound: f64,
}

impl Trace {
    pub fn meets_bound(&self) -> bool {
        self.retained_fraction >= self.bound
    }
}

pub(super) fn trace_applies(g: &Graph) -> bool {
    g.params().d() == 1 && g.view() == View::Stationary
}

/// Trace of a quick path of a one-dimensional graph in the stationary view.
pub fn trace(g: &Graph, qp: &QuickPath, retained: &[bool]) -> Result<Trace> {
    if !trace_applies(g) {
        return Err(contract("traces need a one-dimensional graph in the stationary view"));
    }
    if retained.len() != g.num_vertices() {
        return Err(contract("retention mask does not match the graph"));
    }
    let points: Vec<SpaceTimePoint> = qp.vertex_ids.iter().map(|&v| g.vertices()[v].clone()).collect();
    let tp = trace_points(&points, g.params().gamma(), Some(g.torus_volume()))?;
    let vertex_ids: Vec<usize> = tp.trace.iter().map(|&i| qp.vertex_ids[i]).collect();
    let kept = vertex_ids.iter().filter(|&&v| retained[v]).count();
    let len = vertex_ids.len() as f64;
    Ok(Trace {
        almost_quick_path: tp.almost.iter().map(|&i| qp.vertex_ids[i]).collect(),
        positions: tp.trace,
        vertex_ids,
        retained: kept,
        retained_fraction: kept as f64 / len,
        bound: 0.5 - 1.0 / len,
    })
}
