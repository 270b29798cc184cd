//! Scoring of camera-LiDAR sensor rigs for 3D-detection suitability.
//!
//! The library voxelizes a region of interest around the ego vehicle,
//! estimates a per-class probabilistic occupancy grid (POG) from annotated
//! ground-truth frames, casts the ray sets of a rig's cameras and LiDARs
//! through the grid, and scores the rig by how much occupancy uncertainty
//! the rays remove:
//!
//! * **S-MIG** per modality: the negated entropy that remains in voxels no
//!   ray of that modality traverses (higher, i.e. closer to zero, is better).
//! * **S-MS** combined: `lambda * camera_smig + lidar_smig`.
//!
//! Modules follow the pipeline:
//!
//! * [`geometry`] — ROI voxel grid, world/voxel mapping, oriented boxes.
//! * [`sensors`] — declarative camera/LiDAR configs and their ray sets.
//! * [`traversal`] — voxel walk along rays and per-modality coverage sets.
//! * [`occupancy`] — POG estimation, entropies, S-MIG / S-MS.
//! * [`dataset`] — frame/rig/ROI file formats and synthetic scenes.

pub mod dataset;
pub mod error;
pub mod geometry;
pub mod occupancy;
pub mod sensors;
pub mod traversal;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
