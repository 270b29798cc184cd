//! Probabilistic occupancy grid (POG) and the entropy-based metrics.
//!
//! For each object class, the POG estimates per voxel the probability of
//! being occupied: `counts[i]` is the number of frames whose ground truth
//! places voxel `i` inside at least one box of the class, and the
//! probability is `counts[i] / T` over `T` frames. Each voxel is an
//! independent Bernoulli variable, so
//!
//! * total entropy is the sum of per-voxel binary entropies,
//! * conditional entropy given a coverage set keeps the prior entropy of
//!   *uncovered* voxels only (a traversed voxel is observed and carries no
//!   residual uncertainty),
//! * S-MIG is the negated conditional entropy (0 is perfect; more
//!   negative is worse), and
//! * S-MS fuses the two modalities: `lambda * camera_smig + lidar_smig`.
//!
//! Entropies are summed by binning voxels over their integer frame counts
//! (there are only `T + 1` possible probabilities), which makes every sum
//! independent of voxel order and parallelism, and makes the coverage
//! monotonicity of conditional entropy hold exactly in floating point:
//! shrinking a coverage set can only grow the per-bin populations, and
//! both the bin products and the fixed-order bin sum round monotonically.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::Error;
use crate::geometry::{voxels_in_box, RoiGrid};
use crate::traversal::{BitSet, CoverageSet};
use crate::Result;

/// Per-class occupancy statistics over a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    grid: RoiGrid,
    class_label: String,
    /// Number of frames the statistics were accumulated over.
    frame_count: u32,
    /// Per-voxel occupied-frame counts, linear index order.
    counts: Vec<u32>,
}

impl OccupancyGrid {
    pub fn grid(&self) -> &RoiGrid {
        &self.grid
    }

    pub fn class_label(&self) -> &str {
        &self.class_label
    }

    pub fn frame_count(&self) -> u32 {
        self.frame_count
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Occupancy probability of voxel `i`: `counts[i] / T`.
    pub fn prob(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.frame_count as f64
    }

    /// Merge statistics accumulated over disjoint frame batches: counts
    /// add per voxel, frame counts add.
    pub fn merge(&self, other: &OccupancyGrid) -> Result<OccupancyGrid> {
        if !self.grid.same_layout(&other.grid) {
            return Err(Error::invalid(
                "cannot merge occupancy grids with different voxelizations",
            ));
        }
        if self.class_label != other.class_label {
            return Err(Error::invalid(format!(
                "cannot merge occupancy grids for classes '{}' and '{}'",
                self.class_label, other.class_label
            )));
        }
        let frame_count = self
            .frame_count
            .checked_add(other.frame_count)
            .ok_or_else(|| Error::invalid("merged frame count overflows"))?;
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        Ok(OccupancyGrid {
            grid: self.grid.clone(),
            class_label: self.class_label.clone(),
            frame_count,
            counts,
        })
    }
}

/// Estimate the POG of one class over every frame of `ds`.
///
/// A voxel counts as occupied in a frame if its center lies in at least
/// one box of the class; several overlapping boxes in the same frame
/// still count once. Frames are processed in parallel; the per-frame
/// indicator counts are merged by integer addition, so the result is
/// identical for any worker count.
pub fn build_pog(ds: &Dataset, grid: &RoiGrid, class_label: &str) -> Result<OccupancyGrid> {
    if ds.frames.is_empty() {
        return Err(Error::invalid(
            "cannot build an occupancy grid from an empty dataset",
        ));
    }
    let n = grid.voxel_count();
    let frame_count = u32::try_from(ds.frames.len())
        .map_err(|_| Error::invalid("dataset exceeds u32 frame count"))?;

    let chunk = ds
        .frames
        .len()
        .div_ceil(4 * rayon::current_num_threads().max(1))
        .max(1);
    let counts = ds
        .frames
        .par_chunks(chunk)
        .fold(
            || (vec![0u32; n], BitSet::new(n)),
            |(mut counts, mut seen), frames| {
                for frame in frames {
                    seen.clear();
                    for b in &frame.boxes {
                        if b.class != class_label {
                            continue;
                        }
                        for v in voxels_in_box(&b.shape, grid) {
                            seen.set(grid.linear_index(v));
                        }
                    }
                    for i in seen.iter_ones() {
                        counts[i] += 1;
                    }
                }
                (counts, seen)
            },
        )
        .map(|(counts, _)| counts)
        .reduce(
            || vec![0u32; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        );

    Ok(OccupancyGrid {
        grid: grid.clone(),
        class_label: class_label.to_string(),
        frame_count,
        counts,
    })
}

/// Binary (Bernoulli) entropy in nats: `-p ln p - (1-p) ln(1-p)`, with
/// `0 ln 0 := 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    Ok(binary_entropy_unchecked(p))
}

fn binary_entropy_unchecked(p: f64) -> f64 {
    let term = |q: f64| if q == 0.0 { 0.0 } else { -q * q.ln() };
    term(p) + term(1.0 - p)
}

/// `hist[k]` = number of voxels with count k, over the voxels `keep`
/// selects.
fn count_histogram(pog: &OccupancyGrid, mut keep: impl FnMut(usize) -> bool) -> Vec<u64> {
    let mut hist = vec![0u64; pog.frame_count as usize + 1];
    for (i, &c) in pog.counts.iter().enumerate() {
        if keep(i) {
            hist[c as usize] += 1;
        }
    }
    hist
}

/// Entropy sum over a count histogram, in fixed bin order. Bins 0 and T
/// (probabilities 0 and 1) contribute nothing.
fn entropy_of_histogram(hist: &[u64], frame_count: u32) -> f64 {
    let t = frame_count as f64;
    let mut sum = 0.0;
    for (k, &population) in hist.iter().enumerate().skip(1) {
        if k as u32 == frame_count {
            break;
        }
        if population > 0 {
            sum += population as f64 * binary_entropy_unchecked(k as f64 / t);
        }
    }
    sum
}

/// Total entropy of the POG: sum of per-voxel binary entropies, in nats.
pub fn total_entropy(pog: &OccupancyGrid) -> f64 {
    entropy_of_histogram(&count_histogram(pog, |_| true), pog.frame_count)
}

fn check_same_grid(pog: &OccupancyGrid, cov: &CoverageSet) -> Result<()> {
    if !pog.grid.same_layout(cov.grid()) {
        return Err(Error::invalid(
            "coverage set and occupancy grid use different voxelizations",
        ));
    }
    Ok(())
}

/// Entropy remaining after observing every covered voxel: the sum of
/// binary entropies over voxels *not* in `cov`.
pub fn conditional_entropy(pog: &OccupancyGrid, cov: &CoverageSet) -> Result<f64> {
    check_same_grid(pog, cov)?;
    let hist = count_histogram(pog, |i| !cov.contains_linear(i));
    Ok(entropy_of_histogram(&hist, pog.frame_count))
}

/// Surrogate metric of maximal information gain: the negated conditional
/// entropy. Always <= 0; equals 0 exactly when coverage removes all
/// residual uncertainty.
pub fn s_mig(pog: &OccupancyGrid, cov: &CoverageSet) -> Result<f64> {
    // `0.0 - h` rather than `-h` keeps the fully-covered case at +0.0.
    Ok(0.0 - conditional_entropy(pog, cov)?)
}

/// Uncertainty removed by the coverage: total minus conditional entropy.
pub fn information_gain(pog: &OccupancyGrid, cov: &CoverageSet) -> Result<f64> {
    Ok(total_entropy(pog) - conditional_entropy(pog, cov)?)
}

/// Fused multi-sensor score: `lambda * camera_s_mig + lidar_s_mig`.
pub fn s_ms(camera_s_mig: f64, lidar_s_mig: f64, lambda: f64) -> f64 {
    lambda * camera_s_mig + lidar_s_mig
}

/// Entropy bundle for one modality's coverage of one class POG.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalityMetric {
    pub total_entropy: f64,
    pub conditional_entropy: f64,
    pub information_gain: f64,
    pub s_mig: f64,
}

impl ModalityMetric {
    pub fn compute(pog: &OccupancyGrid, cov: &CoverageSet) -> Result<ModalityMetric> {
        let total = total_entropy(pog);
        let conditional = conditional_entropy(pog, cov)?;
        Ok(ModalityMetric {
            total_entropy: total,
            conditional_entropy: conditional,
            information_gain: total - conditional,
            s_mig: 0.0 - conditional,
        })
    }
}

/// Camera and LiDAR metrics for one class, fused by `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionMetric {
    pub lambda: f64,
    pub camera: ModalityMetric,
    pub lidar: ModalityMetric,
    pub s_ms: f64,
}

impl FusionMetric {
    pub fn new(camera: ModalityMetric, lidar: ModalityMetric, lambda: f64) -> FusionMetric {
        FusionMetric {
            lambda,
            camera,
            lidar,
            s_ms: s_ms(camera.s_mig, lidar.s_mig, lambda),
        }
    }
}

const POG_MAGIC: &[u8; 4] = b"POGC";
const POG_VERSION: u16 = 1;
/// Written little-endian; a reader on the wrong byte order sees 0xFF00.
const POG_ENDIAN_TAG: u16 = 0x00FF;

/// Serialize the POG: a fixed header (magic, version, endianness tag,
/// grid geometry, frame count, class label) followed by the `N` 32-bit
/// counts, everything little-endian.
pub fn write_pog(pog: &OccupancyGrid, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);

    w.write_all(POG_MAGIC).map_err(io_err)?;
    w.write_all(&POG_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&POG_ENDIAN_TAG.to_le_bytes()).map_err(io_err)?;
    for c in [pog.grid.origin.x, pog.grid.origin.y, pog.grid.origin.z] {
        w.write_all(&c.to_le_bytes()).map_err(io_err)?;
    }
    w.write_all(&pog.grid.delta.to_le_bytes()).map_err(io_err)?;
    for n in [pog.grid.nx, pog.grid.ny, pog.grid.nz] {
        w.write_all(&(n as u64).to_le_bytes()).map_err(io_err)?;
    }
    w.write_all(&pog.frame_count.to_le_bytes()).map_err(io_err)?;
    let label = pog.class_label.as_bytes();
    let label_len = u16::try_from(label.len())
        .map_err(|_| Error::invalid("class label longer than 65535 bytes"))?;
    w.write_all(&label_len.to_le_bytes()).map_err(io_err)?;
    w.write_all(label).map_err(io_err)?;
    for &c in &pog.counts {
        w.write_all(&c.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Read back a file produced by [`write_pog`].
pub fn read_pog(path: &Path) -> Result<OccupancyGrid> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut read_exact = |buf: &mut [u8]| -> Result<()> {
        r.read_exact(buf).map_err(|e| Error::io(path, e))
    };

    let mut b4 = [0u8; 4];
    read_exact(&mut b4)?;
    if &b4 != POG_MAGIC {
        return Err(Error::parse(path, "not an occupancy grid file (bad magic)"));
    }
    let mut b2 = [0u8; 2];
    read_exact(&mut b2)?;
    let version = u16::from_le_bytes(b2);
    if version != POG_VERSION {
        return Err(Error::parse(
            path,
            format!("unsupported occupancy file version {version}"),
        ));
    }
    read_exact(&mut b2)?;
    if u16::from_le_bytes(b2) != POG_ENDIAN_TAG {
        return Err(Error::parse(path, "endianness tag mismatch"));
    }

    let mut b8 = [0u8; 8];
    let mut read_f64 = || -> Result<f64> {
        read_exact(&mut b8)?;
        Ok(f64::from_le_bytes(b8))
    };
    let (ox, oy, oz, delta) = (read_f64()?, read_f64()?, read_f64()?, read_f64()?);
    let mut read_u64 = || -> Result<u64> {
        read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let (nx, ny, nz) = (read_u64()?, read_u64()?, read_u64()?);
    let mut b4 = [0u8; 4];
    read_exact(&mut b4)?;
    let frame_count = u32::from_le_bytes(b4);
    if frame_count == 0 {
        return Err(Error::parse(path, "frame count must be positive"));
    }
    read_exact(&mut b2)?;
    let mut label = vec![0u8; u16::from_le_bytes(b2) as usize];
    read_exact(&mut label)?;
    let class_label = String::from_utf8(label)
        .map_err(|_| Error::parse(path, "class label is not valid UTF-8"))?;

    let grid = RoiGrid::new(
        nalgebra::Point3::new(ox, oy, oz),
        nx as f64 * delta,
        ny as f64 * delta,
        nz as f64 * delta,
        delta,
    )?;
    let n = grid.voxel_count();
    let mut counts = vec![0u32; n];
    for c in counts.iter_mut() {
        read_exact(&mut b4)?;
        *c = u32::from_le_bytes(b4);
        if *c > frame_count {
            return Err(Error::parse(
                path,
                format!("voxel count {c} exceeds frame count {frame_count}"),
            ));
        }
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::parse(path, "trailing bytes after counts"));
    }

    Ok(OccupancyGrid {
        grid,
        class_label,
        frame_count,
        counts,
    })
}
