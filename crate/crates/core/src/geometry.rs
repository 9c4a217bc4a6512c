//! Torus geometry and the space-time rescaling between the growth view
//! (unit torus, births in `(0, t]`) and the stationary view (volume-`t`
//! torus, births in `(0, 1]`).

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Side length of a `d`-dimensional torus of the given volume.
pub fn torus_side(volume: f64, d: usize) -> f64 {
    match d {
        1 => volume,
        2 => volume.sqrt(),
        3 => volume.cbrt(),
        _ => volume.powf(1.0 / d as f64),
    }
}

/// Maps a coordinate into the half-open fundamental domain `(-side/2, side/2]`.
pub fn canonicalize(x: f64, side: f64) -> f64 {
    let half = 0.5 * side;
    if x > -half && x <= half {
        return x;
    }
    let y = x - side * ((x + half) / side).floor();
    if y <= -half {
        y + side
    } else if y > half {
        y - side
    } else {
        y
    }
}

/// A point of the torus `(-V^{1/d}/2, V^{1/d}/2]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    /// Builds a point on the torus of the given volume, wrapping each
    /// coordinate into the fundamental domain.
    pub fn new(coords: Vec<f64>, volume: f64) -> Result<Self> {
        if coords.is_empty() {
            return Err(contract("torus point needs at least one coordinate"));
        }
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(contract(format!("torus volume must be positive, got {volume}")));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(contract("torus coordinates must be finite"));
        }
        let side = torus_side(volume, coords.len());
        let coords = coords.into_iter().map(|c| canonicalize(c, side)).collect();
        Ok(Self { coords })
    }

    /// Wraps already canonical coordinates without checks.
    pub(crate) fn from_canonical(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// A vertex position together with its birth time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub position: TorusPoint,
    pub birth: f64,
}

impl SpaceTimePoint {
    pub fn new(position: TorusPoint, birth: f64) -> Result<Self> {
        if !(birth > 0.0) || !birth.is_finite() {
            return Err(contract(format!("birth time must be positive, got {birth}")));
        }
        Ok(Self { position, birth })
    }

    pub fn dim(&self) -> usize {
        self.position.dim()
    }
}

/// Squared wrap-around distance between two coordinate slices.
#[inline]
pub(crate) fn wrapped_sq_dist(x: &[f64], y: &[f64], side: f64) -> f64 {
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        let mut delta = (a - b).abs();
        if delta > 0.5 * side {
            delta = side - delta;
        }
        acc += delta * delta;
    }
    acc
}

/// Euclidean distance on the torus of the given volume, minimised over all
/// lattice shifts. The minimisation is done coordinate by coordinate.
pub fn torus_distance(x: &TorusPoint, y: &TorusPoint, volume: f64) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(contract(format!(
            "dimension mismatch: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    if !(volume > 0.0) {
        return Err(contract(format!("torus volume must be positive, got {volume}")));
    }
    let side = torus_side(volume, x.dim());
    Ok(wrapped_sq_dist(&x.coords, &y.coords, side).sqrt())
}

/// Direction of the rescaling map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Growth view to stationary view: `(x, s) -> (t^{1/d} x, s / t)`.
    Forward,
    /// Stationary view back to the growth view.
    Inverse,
}

/// Applies the space-time rescaling `h_t` or its inverse.
pub fn rescale(p: &SpaceTimePoint, t: f64, direction: Direction) -> Result<SpaceTimePoint> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(contract(format!("rescaling parameter must be positive, got {t}")));
    }
    let d = p.dim();
    let factor = torus_side(t, d);
    let (coords, birth, target_side) = match direction {
        Direction::Forward => {
            if !(p.birth > 0.0 && p.birth <= t) {
                return Err(contract(format!("birth {} outside (0, {t}]", p.birth)));
            }
            let c: Vec<f64> = p.position.coords.iter().map(|x| x * factor).collect();
            (c, p.birth / t, factor)
        }
        Direction::Inverse => {
            if !(p.birth > 0.0 && p.birth <= 1.0) {
                return Err(contract(format!("birth {} outside (0, 1]", p.birth)));
            }
            let c: Vec<f64> = p.position.coords.iter().map(|x| x / factor).collect();
            (c, p.birth * t, 1.0)
        }
    };
    let coords = coords
        .into_iter()
        .map(|c| canonicalize(c, target_side))
        .collect();
    Ok(SpaceTimePoint {
        position: TorusPoint::from_canonical(coords),
        birth,
    })
}
