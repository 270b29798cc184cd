//! Ray/voxel traversal and per-modality coverage sets.
//!
//! `traverse` walks the voxels a ray pierces inside the ROI using
//! parametric incremental stepping (the 3D generalization of Bresenham's
//! integer DDA): clip the ray to the ROI box, locate the entry voxel, then
//! repeatedly step across whichever axis boundary comes next along the
//! ray. `coverage` unions those walks over a whole ray set into a dense
//! bitset, one bit per voxel in linear-index order.

use std::path::Path;

use nalgebra::Point3;

use rayon::prelude::*;

use crate::geometry::{RoiGrid, VoxelIndex};
use crate::sensors::Ray;

/// Fixed-size set of voxel bits, one per linear index.
///
/// Bit `i` lives in word `i / 64` at bit `i % 64` (LSB first), which is
/// also the serialized layout: words little-endian, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    /// Empty set over a domain of `len` bits.
    pub fn new(len: usize) -> Self {
        BitSet {
            words: vec![0u64; len.div_ceil(64)],
            len,
        }
    }

    /// Domain size (number of addressable bits).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    /// Clear every bit, keeping the domain size.
    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    pub fn contains(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    /// Number of set bits.
    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// In-place union.
    pub fn union_with(&mut self, other: &BitSet) {
        assert_eq!(self.len, other.len, "bitset domains differ");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// True if every bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BitSet) -> bool {
        self.len == other.len
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    /// Indices of set bits in ascending order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + bit)
            })
        })
    }

    /// Backing words (little-endian serialization order).
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Rebuild from serialized words; bits beyond `len` must be clear.
    pub fn from_words(words: Vec<u64>, len: usize) -> Option<Self> {
        if words.len() != len.div_ceil(64) {
            return None;
        }
        let tail_bits = len % 64;
        if tail_bits != 0 {
            let tail = *words.last()?;
            if tail >> tail_bits != 0 {
                return None;
            }
        }
        Some(BitSet { words, len })
    }
}

/// The voxels of one grid reached by at least one ray of a modality.
///
/// Carries the grid it was built on so downstream consumers can reject
/// mixing coverage with occupancy data from a different voxelization.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSet {
    grid: RoiGrid,
    bits: BitSet,
}

impl CoverageSet {
    pub fn empty(grid: &RoiGrid) -> Self {
        CoverageSet {
            grid: grid.clone(),
            bits: BitSet::new(grid.voxel_count()),
        }
    }

    /// Wrap an existing bit domain; its size must match the grid.
    pub fn from_bits(grid: &RoiGrid, bits: BitSet) -> crate::Result<Self> {
        if bits.len() != grid.voxel_count() {
            return Err(crate::Error::invalid(format!(
                "coverage bitmask has {} bits but the grid has {} voxels",
                bits.len(),
                grid.voxel_count()
            )));
        }
        Ok(CoverageSet {
            grid: grid.clone(),
            bits,
        })
    }

    pub fn grid(&self) -> &RoiGrid {
        &self.grid
    }

    pub fn voxel_count(&self) -> usize {
        self.bits.len()
    }

    /// Number of covered voxels.
    pub fn covered_count(&self) -> usize {
        self.bits.count()
    }

    pub fn contains_linear(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn insert_linear(&mut self, i: usize) {
        self.bits.set(i);
    }

    pub fn union_with(&mut self, other: &CoverageSet) {
        assert!(
            self.grid.same_layout(&other.grid),
            "coverage sets built on different grids"
        );
        self.bits.union_with(&other.bits);
    }

    pub fn is_subset_of(&self, other: &CoverageSet) -> bool {
        self.grid.same_layout(&other.grid) && self.bits.is_subset_of(&other.bits)
    }

    /// Covered linear indices, ascending.
    pub fn iter_linear(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn bits(&self) -> &BitSet {
        &self.bits
    }

    /// Dump the raster as a flat binary bitmask: one bit per voxel in
    /// linear-index order, packed into little-endian 64-bit words. The
    /// file carries no header; pair it with the ROI that produced it.
    pub fn write_mask(&self, path: &Path) -> crate::Result<()> {
        let file = std::fs::File::create(path).map_err(|e| crate::Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        for word in self.bits.words() {
            std::io::Write::write_all(&mut w, &word.to_le_bytes())
                .map_err(|e| crate::Error::io(path, e))?;
        }
        std::io::Write::flush(&mut w).map_err(|e| crate::Error::io(path, e))
    }

    /// Read back a mask written by [`CoverageSet::write_mask`] for `grid`.
    pub fn read_mask(path: &Path, grid: &RoiGrid) -> crate::Result<Self> {
        let raw = std::fs::read(path).map_err(|e| crate::Error::io(path, e))?;
        let n = grid.voxel_count();
        let expected = n.div_ceil(64) * 8;
        if raw.len() != expected {
            return Err(crate::Error::invalid(format!(
                "coverage mask is {} bytes but a {n}-voxel grid needs {expected}",
                raw.len()
            )));
        }
        let words = raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let bits = BitSet::from_words(words, n).ok_or_else(|| {
            crate::Error::invalid("coverage mask has bits set beyond the voxel count")
        })?;
        CoverageSet::from_bits(grid, bits)
    }
}

/// One step's worth of clipping state per axis.
struct AxisWalk {
    index: isize,
    step: isize,
    /// Ray parameter at which the walk leaves the current voxel across
    /// this axis.
    t_next: f64,
    /// Parameter distance between consecutive boundaries of this axis.
    t_delta: f64,
    limit: isize,
}

/// Walk the voxels `ray` pierces inside `grid`, calling `visit` with each
/// linear index in travel order. Returns without calling `visit` if the
/// ray misses the ROI.
pub fn traverse_into<F: FnMut(usize)>(ray: &Ray, grid: &RoiGrid, mut visit: F) {
    let o = ray.origin;
    let d = ray.direction;
    let min = grid.origin;
    let max = grid.max_corner();

    // Clip [0, inf) against the ROI slab on each axis. Axes the ray runs
    // parallel to contribute no t bounds but must contain the origin
    // (half-open, so sliding along the max face counts as outside).
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for axis in 0..3 {
        if d[axis] == 0.0 {
            if !(min[axis] <= o[axis] && o[axis] < max[axis]) {
                return;
            }
        } else {
            let ta = (min[axis] - o[axis]) / d[axis];
            let tb = (max[axis] - o[axis]) / d[axis];
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
    }
    if t0 > t1 {
        return;
    }

    let entry = Point3::new(o.x + t0 * d.x, o.y + t0 * d.y, o.z + t0 * d.z);
    let n = [grid.nx as isize, grid.ny as isize, grid.nz as isize];
    let mut axes: [AxisWalk; 3] = std::array::from_fn(|axis| {
        // Entry voxel: floor with clamp, absorbing the rounding of o + t0*d
        // landing a hair outside the cell the ray actually enters.
        let idx = (((entry[axis] - min[axis]) / grid.delta).floor() as isize).clamp(0, n[axis] - 1);
        if d[axis] > 0.0 {
            AxisWalk {
                index: idx,
                step: 1,
                t_next: (min[axis] + (idx + 1) as f64 * grid.delta - o[axis]) / d[axis],
                t_delta: grid.delta / d[axis],
                limit: n[axis],
            }
        } else if d[axis] < 0.0 {
            AxisWalk {
                index: idx,
                step: -1,
                t_next: (min[axis] + idx as f64 * grid.delta - o[axis]) / d[axis],
                t_delta: -grid.delta / d[axis],
                limit: -1,
            }
        } else {
            AxisWalk {
                index: idx,
                step: 0,
                t_next: f64::INFINITY,
                t_delta: f64::INFINITY,
                limit: n[axis],
            }
        }
    });

    let plane = grid.nx * grid.ny;
    loop {
        visit(
            axes[2].index as usize * plane
                + axes[1].index as usize * grid.nx
                + axes[0].index as usize,
        );
        // Cross the nearest boundary; ties resolve x, then y, then z.
        let axis = if axes[0].t_next <= axes[1].t_next && axes[0].t_next <= axes[2].t_next {
            0
        } else if axes[1].t_next <= axes[2].t_next {
            1
        } else {
            2
        };
        let w = &mut axes[axis];
        w.index += w.step;
        if w.index == w.limit {
            return;
        }
        w.t_next += w.t_delta;
    }
}

/// Voxels pierced by `ray`, in travel order, each listed once.
pub fn traverse(ray: &Ray, grid: &RoiGrid) -> Vec<VoxelIndex> {
    let mut out = Vec::new();
    traverse_into(ray, grid, |linear| out.push(grid.from_linear(linear)));
    out
}

/// Union of [`traverse`] over a ray set.
///
/// Work is distributed over rayon's current thread pool; since the result
/// is a pure union, it is identical for any worker count or chunk split.
pub fn coverage(rays: &[Ray], grid: &RoiGrid) -> CoverageSet {
    // Chunking keeps per-task bitset allocations bounded while giving the
    // scheduler enough pieces to balance.
    let chunk = rays.len().div_ceil(4 * rayon::current_num_threads().max(1)).max(1);
    rays.par_chunks(chunk)
        .fold(
            || CoverageSet::empty(grid),
            |mut acc, chunk| {
                for ray in chunk {
                    traverse_into(ray, grid, |linear| acc.insert_linear(linear));
                }
                acc
            },
        )
        .reduce(
            || CoverageSet::empty(grid),
            |mut a, b| {
                a.union_with(&b);
                a
            },
        )
}
