//! Splitting a path into small parts by the pattern of its birth times.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Shape of a part, up to left-right reflection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartType {
    /// A single edge.
    I,
    /// A V with two edges.
    II,
    /// A V with three edges; the end of the short leg lies between the two
    /// vertices of the long leg.
    III,
    /// A V with three edges; both vertices of the long leg lie below the end
    /// of the short leg.
    IV,
    /// A W whose end on the side of the deeper valley is the higher end.
    V,
    /// A W whose end on the side of the deeper valley is the lower end.
    VI,
}

impl fmt::Display for PartType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartType::I => "i",
            PartType::II => "ii",
            PartType::III => "iii",
            PartType::IV => "iv",
            PartType::V => "v",
            PartType::VI => "vi",
        })
    }
}

fn check_distinct(times: &[f64]) -> Result<()> {
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(contract("birth times must be pairwise distinct"));
    }
    Ok(())
}

/// Split indices of a sequence of birth times. Index `i` splits when `u_i`
/// exceeds both its left neighbours or both its right neighbours; missing
/// neighbours impose no condition, so both ends always split.
pub fn split(times: &[f64]) -> Result<Vec<usize>> {
    check_distinct(times)?;
    let n = times.len();
    let above = |i: usize, j: Option<usize>| j.is_none_or(|j| times[i] > times[j]);
    let left = |i: usize, k: usize| i.checked_sub(k);
    let right = |i: usize, k: usize| (i + k < n).then_some(i + k);
    Ok((0..n)
        .filter(|&i| {
            (above(i, left(i, 1)) && above(i, left(i, 2))) || (above(i, right(i, 1)) && above(i, right(i, 2)))
        })
        .collect())
}

/// Type of a single part given its own birth times.
pub fn classify_part(times: &[f64]) -> Result<PartType> {
    let splits = split(times)?;
    let m = times.len();
    if m < 2 || splits != [0, m - 1] {
        return Err(contract(format!("sequence of length {m} is not a single part (splits {splits:?})")));
    }
    let u = times;
    match m {
        2 => Ok(PartType::I),
        3 => Ok(PartType::II),
        4 => {
            // Reflect so that the valley sits at index 1; the short leg is then
            // the single edge to u[0] and the long leg is u[2], u[3].
            let v: Vec<f64> = if u[1] < u[2] { u.to_vec() } else { u.iter().rev().copied().collect() };
            if v[0] < v[3] {
                Ok(PartType::III)
            } else {
                Ok(PartType::IV)
            }
        }
        5 => {
            if !(u[1] < u[0] && u[1] < u[2] && u[3] < u[2] && u[3] < u[4]) {
                return Err(contract("five-vertex part is not a W"));
            }
            let (deep_end, other_end) = if u[3] < u[1] { (u[4], u[0]) } else { (u[0], u[4]) };
            if deep_end > other_end {
                Ok(PartType::V)
            } else {
                Ok(PartType::VI)
            }
        }
        _ => Err(contract(format!("part with {m} vertices has no type"))),
    }
}

/// Whether path index `i` is a local maximum of the part spanning
/// `lo..=hi`.
fn is_part_maximum(times: &[f64], lo: usize, hi: usize, i: usize) -> bool {
    (i == lo || times[i] > times[i - 1]) && (i == hi || times[i] > times[i + 1])
}

/// Split indices, part types and, per part, the path indices contributing
/// to it (members that are not local maxima of the part).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartDecomposition {
    pub split_indices: Vec<usize>,
    pub part_types: Vec<PartType>,
    pub contributors: Vec<Vec<usize>>,
}

impl PartDecomposition {
    pub fn num_parts(&self) -> usize {
        self.part_types.len()
    }

    /// Path index range of part `j`.
    pub fn part_range(&self, j: usize) -> (usize, usize) {
        (self.split_indices[j], self.split_indices[j + 1])
    }
}

pub fn decompose(times: &[f64]) -> Result<PartDecomposition> {
    let split_indices = split(times)?;
    let mut part_types = Vec::new();
    let mut contributors = Vec::new();
    for w in split_indices.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        part_types.push(classify_part(&times[lo..=hi])?);
        contributors.push((lo..=hi).filter(|&i| !is_part_maximum(times, lo, hi, i)).collect());
    }
    Ok(PartDecomposition {
        split_indices,
        part_types,
        contributors,
    })
}
