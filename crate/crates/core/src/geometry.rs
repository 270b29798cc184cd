//! ROI voxel grid and oriented ground-truth boxes.
//!
//! The region of interest is an axis-aligned cuboid anchored at a minimum
//! corner and cut into cubic voxels of side `delta`. Voxels are addressed
//! either by `(ix, iy, iz)` triples or by a row-major linear index with x
//! fastest: `iz * (nx * ny) + iy * nx + ix`. The linear layout is part of
//! the public contract because coverage bitmasks and occupancy dumps are
//! serialized in that order.

use nalgebra::{Point3, Vector3};

use crate::error::Error;
use crate::Result;

/// Relative tolerance when checking that an extent is a whole multiple of
/// the resolution. Extents in config files go through decimal round-trips,
/// so exact divisibility cannot be required bit-for-bit.
const DIVISIBILITY_REL_TOL: f64 = 1e-9;

/// Axis-aligned region of interest divided into cubic voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiGrid {
    /// Minimum corner of the ROI in world coordinates.
    pub origin: Point3<f64>,
    /// Extent along x in meters.
    pub length: f64,
    /// Extent along y in meters.
    pub width: f64,
    /// Extent along z in meters.
    pub height: f64,
    /// Voxel side length in meters.
    pub delta: f64,
    /// Voxel counts per axis.
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

/// Integer address of one voxel inside a [`RoiGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelIndex {
    pub ix: usize,
    pub iy: usize,
    pub iz: usize,
}

/// Ground-truth bounding box: axis-aligned in its body frame, rotated
/// about z by `yaw` in the world frame. Sizes are full extents
/// (length along body x, width along body y, height along z).
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedBox {
    pub center: Point3<f64>,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    /// Rotation about z, normalized to [-pi, pi).
    pub yaw: f64,
}

fn checked_axis_count(extent: f64, delta: f64, axis: &str) -> Result<usize> {
    let ratio = extent / delta;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > DIVISIBILITY_REL_TOL * ratio.abs() {
        return Err(Error::invalid(format!(
            "{axis} not divisible by delta ({extent} / {delta} = {ratio})"
        )));
    }
    Ok(rounded as usize)
}

impl RoiGrid {
    /// Build a grid, validating that each extent is a whole number of
    /// voxels (within a small relative tolerance for decimal inputs).
    pub fn new(
        origin: Point3<f64>,
        length: f64,
        width: f64,
        height: f64,
        delta: f64,
    ) -> Result<Self> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::invalid(format!("delta must be positive, got {delta}")));
        }
        for (label, extent) in [("L", length), ("W", width), ("H", height)] {
            if !extent.is_finite() || extent <= 0.0 {
                return Err(Error::invalid(format!(
                    "{label} must be positive, got {extent}"
                )));
            }
        }
        if !origin.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("grid origin must be finite".to_string()));
        }
        let nx = checked_axis_count(length, delta, "L")?;
        let ny = checked_axis_count(width, delta, "W")?;
        let nz = checked_axis_count(height, delta, "H")?;
        Ok(RoiGrid {
            origin,
            length,
            width,
            height,
            delta,
            nx,
            ny,
            nz,
        })
    }

    /// Total voxel count `nx * ny * nz`.
    pub fn voxel_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// Maximum corner of the ROI (`origin + extents`).
    pub fn max_corner(&self) -> Point3<f64> {
        self.origin + Vector3::new(self.length, self.width, self.height)
    }

    /// Row-major linear index (x fastest) of a voxel.
    pub fn linear_index(&self, v: VoxelIndex) -> usize {
        debug_assert!(self.is_valid(v));
        v.iz * (self.nx * self.ny) + v.iy * self.nx + v.ix
    }

    /// Inverse of [`RoiGrid::linear_index`].
    pub fn from_linear(&self, linear: usize) -> VoxelIndex {
        debug_assert!(linear < self.voxel_count());
        let plane = self.nx * self.ny;
        VoxelIndex {
            ix: linear % self.nx,
            iy: (linear / self.nx) % self.ny,
            iz: linear / plane,
        }
    }

    /// True if `v` addresses a voxel of this grid.
    pub fn is_valid(&self, v: VoxelIndex) -> bool {
        v.ix < self.nx && v.iy < self.ny && v.iz < self.nz
    }

    /// Map a world point to its voxel, or `None` if the point lies outside
    /// the ROI. Cells are half-open: a point on the minimum face of the ROI
    /// is inside, a point on the maximum face is outside.
    pub fn voxel_index(&self, p: Point3<f64>) -> Option<VoxelIndex> {
        let max = self.max_corner();
        for axis in 0..3 {
            if !(self.origin[axis] <= p[axis] && p[axis] < max[axis]) {
                return None;
            }
        }
        // The range check above already guarantees 0 <= floor(offset/delta);
        // clamp to n-1 guards against floating-point spill at the top edge
        // (offset/delta can round up to exactly n for points just inside).
        let cell = |offset: f64, n: usize| -> usize {
            (((offset / self.delta).floor()) as usize).min(n - 1)
        };
        Some(VoxelIndex {
            ix: cell(p.x - self.origin.x, self.nx),
            iy: cell(p.y - self.origin.y, self.ny),
            iz: cell(p.z - self.origin.z, self.nz),
        })
    }

    /// World coordinates of a voxel's center.
    pub fn voxel_center(&self, v: VoxelIndex) -> Result<Point3<f64>> {
        if !self.is_valid(v) {
            return Err(Error::invalid(format!(
                "voxel index ({}, {}, {}) out of range for {}x{}x{} grid",
                v.ix, v.iy, v.iz, self.nx, self.ny, self.nz
            )));
        }
        Ok(Point3::new(
            self.origin.x + (v.ix as f64 + 0.5) * self.delta,
            self.origin.y + (v.iy as f64 + 0.5) * self.delta,
            self.origin.z + (v.iz as f64 + 0.5) * self.delta,
        ))
    }

    /// True if two grids describe the same voxelization (used to reject
    /// mixing coverage/occupancy data built on different grids).
    pub fn same_layout(&self, other: &RoiGrid) -> bool {
        self.origin == other.origin
            && self.delta == other.delta
            && self.nx == other.nx
            && self.ny == other.ny
            && self.nz == other.nz
    }
}

/// Wrap an angle to [-pi, pi).
pub fn normalize_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrapped = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    // rem_euclid can return exactly two_pi's upper bound after the shift
    // when rounding is unkind; fold it back.
    if wrapped >= std::f64::consts::PI {
        wrapped - two_pi
    } else {
        wrapped
    }
}

impl OrientedBox {
    /// Build a box, normalizing yaw to [-pi, pi).
    pub fn new(center: Point3<f64>, length: f64, width: f64, height: f64, yaw: f64) -> Result<Self> {
        for (label, v) in [("length", length), ("width", width), ("height", height)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!(
                    "box {label} must be positive, got {v}"
                )));
            }
        }
        if !yaw.is_finite() || !center.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("box pose must be finite".to_string()));
        }
        Ok(OrientedBox {
            center,
            length,
            width,
            height,
            yaw: normalize_angle(yaw),
        })
    }

    /// True iff `p` lies inside the box, faces inclusive. The point is
    /// rotated into the body frame and compared against the half extents.
    pub fn contains(&self, p: Point3<f64>) -> bool {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        let dz = p.z - self.center.z;
        let (sin_yaw, cos_yaw) = self.yaw.sin_cos();
        // Inverse yaw rotation of the offset vector.
        let u = cos_yaw * dx + sin_yaw * dy;
        let v = -sin_yaw * dx + cos_yaw * dy;
        u.abs() <= self.length / 2.0 && v.abs() <= self.width / 2.0 && dz.abs() <= self.height / 2.0
    }

    /// Half extents of the box's world-frame axis-aligned bounding box.
    fn aabb_half_extents(&self) -> Vector3<f64> {
        let (sin_yaw, cos_yaw) = self.yaw.sin_cos();
        let ex = (cos_yaw.abs() * self.length + sin_yaw.abs() * self.width) / 2.0;
        let ey = (sin_yaw.abs() * self.length + cos_yaw.abs() * self.width) / 2.0;
        Vector3::new(ex, ey, self.height / 2.0)
    }
}

/// All voxels of `grid` whose centers lie inside `b`.
///
/// Scans only the voxel window under the box's world AABB (padded one cell
/// to absorb floating-point slack in the window bounds); the result is
/// identical to testing every voxel center in the grid.
pub fn voxels_in_box(b: &OrientedBox, grid: &RoiGrid) -> Vec<VoxelIndex> {
    let half = b.aabb_half_extents();
    let lo = b.center - half;
    let hi = b.center + half;

    // Convert the AABB to an inclusive index window, clamped to the grid.
    let mut lo_idx = [0usize; 3];
    let mut hi_idx = [0usize; 3];
    let n = [grid.nx, grid.ny, grid.nz];
    for axis in 0..3 {
        let lo_cell = ((lo[axis] - grid.origin[axis]) / grid.delta).floor() - 1.0;
        let hi_cell = ((hi[axis] - grid.origin[axis]) / grid.delta).floor() + 1.0;
        if hi_cell < 0.0 || lo_cell >= n[axis] as f64 {
            return Vec::new();
        }
        lo_idx[axis] = lo_cell.max(0.0) as usize;
        hi_idx[axis] = (hi_cell as usize).min(n[axis] - 1);
    }

    let mut out = Vec::new();
    for iz in lo_idx[2]..=hi_idx[2] {
        for iy in lo_idx[1]..=hi_idx[1] {
            for ix in lo_idx[0]..=hi_idx[0] {
                let v = VoxelIndex { ix, iy, iz };
                let center = grid
                    .voxel_center(v)
                    .expect("window indices are clamped to the grid");
                if b.contains(center) {
                    out.push(v);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(origin: (f64, f64, f64), l: f64, w: f64, h: f64, delta: f64) -> RoiGrid {
        RoiGrid::new(Point3::new(origin.0, origin.1, origin.2), l, w, h, delta).unwrap()
    }

    #[test]
    fn unit_cube_splits_into_eight() {
        let g = grid((0.0, 0.0, 0.0), 1.0, 1.0, 1.0, 0.5);
        assert_eq!((g.nx, g.ny, g.nz), (2, 2, 2));
        assert_eq!(g.voxel_count(), 8);
    }

    #[test]
    fn default_roi_has_640k_voxels() {
        let g = grid((-50.0, -50.0, -2.0), 100.0, 100.0, 8.0, 0.5);
        assert_eq!((g.nx, g.ny, g.nz), (200, 200, 16));
        assert_eq!(g.voxel_count(), 640_000);
    }

    #[test]
    fn non_divisible_extent_names_the_axis() {
        let err = RoiGrid::new(Point3::origin(), 1.0, 1.0, 1.0, 0.3).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("L not divisible by delta"), "got: {msg}");

        let err = RoiGrid::new(Point3::origin(), 0.9, 1.0, 0.9, 0.3).unwrap_err();
        assert!(err.to_string().contains("W not divisible"), "got: {err}");
    }

    #[test]
    fn decimal_extents_within_tolerance_accepted() {
        // 0.1 is not exactly representable; 10 * 0.1 != 1.0 in binary.
        let g = grid((0.0, 0.0, 0.0), 1.0, 1.0, 1.0, 0.1);
        assert_eq!((g.nx, g.ny, g.nz), (10, 10, 10));
    }

    #[test]
    fn voxel_index_basic_and_boundaries() {
        let g = grid((-50.0, -50.0, -3.0), 100.0, 100.0, 8.0, 0.5);
        assert_eq!(
            g.voxel_index(Point3::new(0.0, 0.0, 0.0)),
            Some(VoxelIndex { ix: 100, iy: 100, iz: 6 })
        );
        // Just below the minimum corner.
        assert_eq!(g.voxel_index(Point3::new(-50.01, 0.0, 0.0)), None);
        // Minimum corner itself is inside (half-open cells).
        assert_eq!(
            g.voxel_index(Point3::new(-50.0, -50.0, -3.0)),
            Some(VoxelIndex { ix: 0, iy: 0, iz: 0 })
        );
        // Maximum corner is outside.
        assert_eq!(g.voxel_index(Point3::new(50.0, 50.0, 5.0)), None);
        assert!(g.voxel_index(Point3::new(49.999, 49.999, 4.999)).is_some());
    }

    #[test]
    fn voxel_center_examples() {
        let g = grid((0.0, 0.0, 0.0), 2.0, 2.0, 2.0, 1.0);
        assert_eq!(
            g.voxel_center(VoxelIndex { ix: 0, iy: 0, iz: 0 }).unwrap(),
            Point3::new(0.5, 0.5, 0.5)
        );
        let g = grid((-1.0, -1.0, -1.0), 2.0, 2.0, 2.0, 2.0);
        assert_eq!(
            g.voxel_center(VoxelIndex { ix: 0, iy: 0, iz: 0 }).unwrap(),
            Point3::new(0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn voxel_center_rejects_out_of_range() {
        let g = grid((0.0, 0.0, 0.0), 1.0, 1.0, 1.0, 0.5);
        assert!(g.voxel_center(VoxelIndex { ix: 2, iy: 0, iz: 0 }).is_err());
    }

    #[test]
    fn linear_index_is_row_major_x_fastest() {
        let g = grid((0.0, 0.0, 0.0), 3.0, 2.0, 2.0, 1.0);
        assert_eq!(g.linear_index(VoxelIndex { ix: 0, iy: 0, iz: 0 }), 0);
        assert_eq!(g.linear_index(VoxelIndex { ix: 1, iy: 0, iz: 0 }), 1);
        assert_eq!(g.linear_index(VoxelIndex { ix: 0, iy: 1, iz: 0 }), 3);
        assert_eq!(g.linear_index(VoxelIndex { ix: 0, iy: 0, iz: 1 }), 6);
        assert_eq!(g.linear_index(VoxelIndex { ix: 2, iy: 1, iz: 1 }), 11);
    }

    #[test]
    fn point_in_obb_examples() {
        let unit = OrientedBox::new(Point3::origin(), 1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(unit.contains(Point3::new(0.4, 0.0, 0.0)));
        assert!(!unit.contains(Point3::new(0.6, 0.0, 0.0)));
        // Face-inclusive.
        assert!(unit.contains(Point3::new(0.5, 0.0, 0.0)));
        assert!(unit.contains(Point3::new(0.5, 0.5, 0.5)));

        // Quarter-turn swaps the long axis from x to y.
        let long = OrientedBox::new(
            Point3::origin(),
            2.0,
            1.0,
            1.0,
            std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        assert!(!long.contains(Point3::new(0.9, 0.0, 0.0)));
        assert!(long.contains(Point3::new(0.0, 0.9, 0.0)));
    }

    #[test]
    fn yaw_is_normalized() {
        let b = OrientedBox::new(Point3::origin(), 1.0, 1.0, 1.0, 3.0 * std::f64::consts::PI)
            .unwrap();
        assert!((b.yaw - (-std::f64::consts::PI)).abs() < 1e-12);
        let b = OrientedBox::new(Point3::origin(), 1.0, 1.0, 1.0, std::f64::consts::PI).unwrap();
        assert!((b.yaw - (-std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn box_around_single_center_hits_one_voxel() {
        let g = grid((0.0, 0.0, 0.0), 4.0, 4.0, 4.0, 1.0);
        // Cell (1,2,3) shrunk 10% around its center.
        let b = OrientedBox::new(Point3::new(1.5, 2.5, 3.5), 0.9, 0.9, 0.9, 0.0).unwrap();
        assert_eq!(
            voxels_in_box(&b, &g),
            vec![VoxelIndex { ix: 1, iy: 2, iz: 3 }]
        );
    }

    #[test]
    fn axis_aligned_box_covers_2x2x2_block() {
        let g = grid((0.0, 0.0, 0.0), 4.0, 4.0, 4.0, 1.0);
        // Spans centers at 1.5 and 2.5 on each axis.
        let b = OrientedBox::new(Point3::new(2.0, 2.0, 2.0), 1.2, 1.2, 1.2, 0.0).unwrap();
        let got = voxels_in_box(&b, &g);
        assert_eq!(got.len(), 8);
        for v in &got {
            assert!((1..=2).contains(&v.ix));
            assert!((1..=2).contains(&v.iy));
            assert!((1..=2).contains(&v.iz));
        }
    }

    #[test]
    fn box_outside_grid_is_empty() {
        let g = grid((0.0, 0.0, 0.0), 4.0, 4.0, 4.0, 1.0);
        let b = OrientedBox::new(Point3::new(100.0, 0.0, 0.0), 2.0, 2.0, 2.0, 0.7).unwrap();
        assert!(voxels_in_box(&b, &g).is_empty());
    }

    /// Brute-force reference: test every voxel center in the grid.
    fn voxels_in_box_exhaustive(b: &OrientedBox, g: &RoiGrid) -> Vec<VoxelIndex> {
        let mut out = Vec::new();
        for iz in 0..g.nz {
            for iy in 0..g.ny {
                for ix in 0..g.nx {
                    let v = VoxelIndex { ix, iy, iz };
                    if b.contains(g.voxel_center(v).unwrap()) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn windowed_scan_matches_full_scan(
            cx in -5.0f64..13.0,
            cy in -5.0f64..13.0,
            cz in -3.0f64..7.0,
            l in 0.2f64..6.0,
            w in 0.2f64..6.0,
            h in 0.2f64..4.0,
            yaw in -3.2f64..3.2,
        ) {
            let g = grid((0.0, 0.0, 0.0), 8.0, 8.0, 4.0, 1.0);
            let b = OrientedBox::new(Point3::new(cx, cy, cz), l, w, h, yaw).unwrap();
            prop_assert_eq!(voxels_in_box(&b, &g), voxels_in_box_exhaustive(&b, &g));
        }

        #[test]
        fn center_roundtrips_through_index(
            ix in 0usize..8, iy in 0usize..8, iz in 0usize..4,
        ) {
            let g = grid((-4.0, -4.0, -2.0), 8.0, 8.0, 4.0, 1.0);
            let v = VoxelIndex { ix, iy, iz };
            let c = g.voxel_center(v).unwrap();
            prop_assert_eq!(g.voxel_index(c), Some(v));
            let lin = g.linear_index(v);
            prop_assert_eq!(g.from_linear(lin), v);
        }

        #[test]
        fn yaw_full_turn_leaves_membership_unchanged(
            cx in 1.0f64..7.0,
            cy in 1.0f64..7.0,
            l in 0.3f64..3.0,
            w in 0.3f64..3.0,
            yaw in -3.0f64..3.0,
        ) {
            let g = grid((0.0, 0.0, 0.0), 8.0, 8.0, 4.0, 1.0);
            let b1 = OrientedBox::new(Point3::new(cx, cy, 1.3), l, w, 1.0, yaw).unwrap();
            let b2 = OrientedBox::new(
                Point3::new(cx, cy, 1.3), l, w, 1.0, yaw + 2.0 * std::f64::consts::PI,
            ).unwrap();
            prop_assert_eq!(voxels_in_box(&b1, &g), voxels_in_box(&b2, &g));
        }

        #[test]
        fn quarter_turn_with_swapped_extents_matches(
            cx in 2.0f64..6.0,
            cy in 2.0f64..6.0,
            // Offsets keep voxel centers away from box faces so the
            // inclusive-boundary decision can't flip under the rotated
            // (bitwise different) arithmetic.
            l in 0.55f64..3.0,
            w in 0.35f64..3.0,
        ) {
            let g = grid((0.0, 0.0, 0.0), 8.0, 8.0, 4.0, 1.0);
            let eps = 0.01;
            let b1 = OrientedBox::new(Point3::new(cx, cy, 1.3), l + eps, w - eps, 1.0, 0.0)
                .unwrap();
            let b2 = OrientedBox::new(
                Point3::new(cx, cy, 1.3), w - eps, l + eps, 1.0, std::f64::consts::FRAC_PI_2,
            ).unwrap();
            prop_assert_eq!(voxels_in_box(&b1, &g), voxels_in_box(&b2, &g));
        }
    }
}
