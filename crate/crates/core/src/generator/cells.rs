//! Hierarchical cell index over the torus.
//!
//! Level 0 is a `G^d` grid of cells with `G = 2^levels`; every coarser level
//! merges `2^d` children. Each block keeps the number of inserted vertices
//! and a running maximum of their indegrees, so a younger vertex can bound
//! the connection probability to a whole block at once.

use crate::error::{contract, Result};

/// Largest dimension supported by the cell index.
pub const MAX_DIM: usize = 8;

pub(crate) type BlockCoords = [u32; MAX_DIM];

#[derive(Clone, Debug)]
pub struct CellIndex {
    d: usize,
    levels: usize,
    side: f64,
    cell_width: f64,
    /// Per vertex, its level-0 cell coordinates (flat, `d` per vertex).
    cell_coords: Vec<u32>,
    /// Inserted vertex ids of each level-0 cell, in insertion order.
    members: Vec<Vec<usize>>,
    /// Per level, number of inserted vertices in each block.
    count: Vec<Vec<u32>>,
    /// Per level, running maximum indegree of inserted vertices per block.
    max_indegree: Vec<Vec<u32>>,
}

/// Number of grid levels giving roughly `occupancy` vertices per cell.
pub fn levels_for(n: usize, d: usize, occupancy: f64) -> usize {
    let cells = (n as f64 / occupancy).max(1.0);
    let l = (cells.log2() / d as f64).round();
    (l.max(0.0) as usize).min(24 / d.max(1)).min(20)
}

impl CellIndex {
    /// Index for vertices with the given flat coordinates on a torus of side
    /// `side`. No vertex is inserted yet.
    pub fn new(d: usize, side: f64, levels: usize, coords: &[f64]) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(contract(format!("cell index supports 1..={MAX_DIM} dimensions, got {d}")));
        }
        let grid = 1usize << levels;
        let cell_width = side / grid as f64;
        let half = 0.5 * side;
        let cell_coords: Vec<u32> = coords
            .iter()
            .map(|&x| (((x + half) / cell_width).floor() as i64).clamp(0, grid as i64 - 1) as u32)
            .collect();
        let mut count = Vec::with_capacity(levels + 1);
        let mut max_indegree = Vec::with_capacity(levels + 1);
        for l in 0..=levels {
            let blocks = (grid >> l).pow(d as u32);
            count.push(vec![0u32; blocks]);
            max_indegree.push(vec![0u32; blocks]);
        }
        Ok(Self {
            d,
            levels,
            side,
            cell_width,
            cell_coords,
            members: vec![Vec::new(); grid.pow(d as u32)],
            count,
            max_indegree,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn grid(&self) -> usize {
        1 << self.levels
    }

    pub fn num_cells(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub(crate) fn block_index(&self, level: usize, b: &BlockCoords) -> usize {
        let per_side = self.grid() >> level;
        let mut idx = 0usize;
        for i in (0..self.d).rev() {
            idx = idx * per_side + b[i] as usize;
        }
        idx
    }

    #[inline]
    pub(crate) fn vertex_block(&self, v: usize, level: usize) -> BlockCoords {
        let mut b = [0u32; MAX_DIM];
        for i in 0..self.d {
            b[i] = self.cell_coords[v * self.d + i] >> level;
        }
        b
    }

    /// Level-0 cell of vertex `v` as a linear index.
    pub fn cell_of(&self, v: usize) -> usize {
        self.block_index(0, &self.vertex_block(v, 0))
    }

    pub fn insert(&mut self, v: usize, indegree: u32) {
        let cell = self.cell_of(v);
        self.members[cell].push(v);
        for l in 0..=self.levels {
            let idx = self.block_index(l, &self.vertex_block(v, l));
            self.count[l][idx] += 1;
            let m = &mut self.max_indegree[l][idx];
            *m = (*m).max(indegree);
        }
    }

    /// Records a new indegree for an inserted vertex.
    pub fn raise_indegree(&mut self, v: usize, indegree: u32) {
        for l in 0..=self.levels {
            let idx = self.block_index(l, &self.vertex_block(v, l));
            let m = &mut self.max_indegree[l][idx];
            if *m >= indegree {
                // Coarser blocks contain this one, so they are already at least as large.
                break;
            }
            *m = indegree;
        }
    }

    #[inline]
    pub(crate) fn block_count(&self, level: usize, idx: usize) -> u32 {
        self.count[level][idx]
    }

    #[inline]
    pub(crate) fn block_max_indegree(&self, level: usize, idx: usize) -> u32 {
        self.max_indegree[level][idx]
    }

    pub fn cell_members(&self, cell: usize) -> &[usize] {
        &self.members[cell]
    }

    /// Running maximum indegree recorded for a level-0 cell.
    pub fn cell_max_indegree(&self, cell: usize) -> u32 {
        self.max_indegree[0][cell]
    }

    /// Lower bound on the torus distance from `y` to any point of a block.
    /// A small absolute margin absorbs rounding in the cell assignment.
    #[inline]
    pub(crate) fn min_sq_distance(&self, y: &[f64], level: usize, b: &BlockCoords) -> f64 {
        let width = self.cell_width * (1u64 << level) as f64;
        if width >= self.side {
            return 0.0;
        }
        let half = 0.5 * self.side;
        let margin = 1e-9 * self.cell_width;
        let mut acc = 0.0;
        for i in 0..self.d {
            let lo = -half + b[i] as f64 * width;
            let hi = lo + width;
            let yi = y[i];
            if yi >= lo && yi <= hi {
                continue;
            }
            let circ = |a: f64| {
                let mut delta = (yi - a).abs();
                if delta > half {
                    delta = self.side - delta;
                }
                delta
            };
            let delta = (circ(lo).min(circ(hi)) - margin).max(0.0);
            acc += delta * delta;
        }
        acc
    }

    /// Children of a block at `level > 0`, as coordinates at `level - 1`.
    #[inline]
    pub(crate) fn children(&self, level: usize, b: &BlockCoords) -> impl Iterator<Item = BlockCoords> + '_ {
        debug_assert!(level > 0);
        let d = self.d;
        let b = *b;
        (0..1u32 << d).map(move |mask| {
            let mut c = [0u32; MAX_DIM];
            for i in 0..d {
                c[i] = 2 * b[i] + ((mask >> i) & 1);
            }
            c
        })
    }

    /// The `i`-th inserted vertex of a block, in child-major order.
    pub(crate) fn locate(&self, level: usize, b: &BlockCoords, mut i: u32) -> usize {
        let mut level = level;
        let mut b = *b;
        while level > 0 {
            let mut next = None;
            for c in self.children(level, &b) {
                let k = self.count[level - 1][self.block_index(level - 1, &c)];
                if i < k {
                    next = Some(c);
                    break;
                }
                i -= k;
            }
            b = next.expect("index within block count");
            level -= 1;
        }
        self.members[self.block_index(0, &b)][i as usize]
    }

    /// Wrapped Chebyshev distance in cells between two level-0 cells.
    pub fn cell_ring(&self, a: usize, b: usize) -> usize {
        let g = self.grid();
        let mut ring = 0;
        let (mut a, mut b) = (a, b);
        for _ in 0..self.d {
            let (ia, ib) = (a % g, b % g);
            a /= g;
            b /= g;
            let delta = ia.abs_diff(ib);
            ring = ring.max(delta.min(g - delta));
        }
        ring
    }
}
