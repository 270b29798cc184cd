//! Rig and ROI configuration files (TOML).
//!
//! A rig file names the rig and lists its sensors; angles are degrees,
//! distances meters. Each camera gives either `fov_deg` (converted to a
//! pixel focal length from the sensor width) or `focal_px`, never both:
//!
//! ```toml
//! name = "wide-center"
//!
//! [[cameras]]
//! position = [1.7, 0.0, 1.5]
//! yaw_deg = 0.0
//! sensor_width = 1600
//! sensor_height = 900
//! ray_width = 64
//! ray_height = 36
//! fov_deg = 70.0
//!
//! [[lidars]]
//! position = [0.0, 0.0, 1.85]
//! horizontal_fov_deg = 360.0
//! vertical_fov_deg = 50.0
//! horizontal_steps = 900
//! channels = 32
//! ```
//!
//! An ROI file fixes the scored region:
//!
//! ```toml
//! origin = [-50.0, -50.0, -2.0]
//! length = 100.0
//! width = 100.0
//! height = 8.0
//! delta = 0.5
//! ```

use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::RoiGrid;
use crate::sensors::{focal_from_fov, CameraConfig, LidarConfig, MountPose, SensorRig};
use crate::Result;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoiFile {
    origin: [f64; 3],
    length: f64,
    width: f64,
    height: f64,
    delta: f64,
}

/// Load and validate an ROI file.
pub fn load_roi(path: &Path) -> Result<RoiGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: RoiFile = toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    RoiGrid::new(
        Point3::new(file.origin[0], file.origin[1], file.origin[2]),
        file.length,
        file.width,
        file.height,
        file.delta,
    )
    .map_err(|e| Error::parse(path, e.to_string()))
}

/// Write an ROI file that [`load_roi`] parses back to the same grid.
pub fn save_roi(grid: &RoiGrid, path: &Path) -> Result<()> {
    let file = RoiFile {
        origin: [grid.origin.x, grid.origin.y, grid.origin.z],
        length: grid.length,
        width: grid.width,
        height: grid.height,
        delta: grid.delta,
    };
    let text = toml::to_string(&file)
        .map_err(|e| Error::invalid(format!("cannot serialize ROI: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RigFile {
    name: String,
    #[serde(default)]
    cameras: Vec<CameraEntry>,
    #[serde(default)]
    lidars: Vec<LidarEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraEntry {
    position: [f64; 3],
    #[serde(default)]
    yaw_deg: f64,
    #[serde(default)]
    pitch_deg: f64,
    #[serde(default)]
    roll_deg: f64,
    sensor_width: f64,
    sensor_height: f64,
    ray_width: usize,
    ray_height: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    fov_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    focal_px: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LidarEntry {
    position: [f64; 3],
    #[serde(default)]
    yaw_deg: f64,
    #[serde(default)]
    pitch_deg: f64,
    #[serde(default)]
    roll_deg: f64,
    horizontal_fov_deg: f64,
    vertical_fov_deg: f64,
    horizontal_steps: usize,
    channels: usize,
}

fn mount_from(position: [f64; 3], yaw_deg: f64, pitch_deg: f64, roll_deg: f64) -> MountPose {
    MountPose {
        position: Point3::new(position[0], position[1], position[2]),
        yaw: yaw_deg.to_radians(),
        pitch: pitch_deg.to_radians(),
        roll: roll_deg.to_radians(),
    }
}

/// Load and fully validate a rig file. Sensor-model invariants are
/// enforced here, so a successfully loaded rig always generates rays.
pub fn load_rig(path: &Path) -> Result<SensorRig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: RigFile = toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;

    let mut cameras = Vec::with_capacity(file.cameras.len());
    for (i, c) in file.cameras.into_iter().enumerate() {
        let at = |msg: String| Error::parse(path, format!("camera {i}: {msg}"));
        let focal_px = match (c.fov_deg, c.focal_px) {
            (Some(fov), None) => {
                focal_from_fov(c.sensor_width, fov).map_err(|e| at(e.to_string()))?
            }
            (None, Some(f)) => f,
            (Some(_), Some(_)) => {
                return Err(at("fov_deg and focal_px are mutually exclusive".into()))
            }
            (None, None) => return Err(at("one of fov_deg or focal_px is required".into())),
        };
        let cfg = CameraConfig {
            mount: mount_from(c.position, c.yaw_deg, c.pitch_deg, c.roll_deg),
            sensor_width: c.sensor_width,
            sensor_height: c.sensor_height,
            ray_width: c.ray_width,
            ray_height: c.ray_height,
            focal_px,
        };
        cfg.validate().map_err(|e| at(e.to_string()))?;
        cameras.push(cfg);
    }

    let mut lidars = Vec::with_capacity(file.lidars.len());
    for (i, l) in file.lidars.into_iter().enumerate() {
        let cfg = LidarConfig {
            mount: mount_from(l.position, l.yaw_deg, l.pitch_deg, l.roll_deg),
            horizontal_fov_deg: l.horizontal_fov_deg,
            vertical_fov_deg: l.vertical_fov_deg,
            horizontal_steps: l.horizontal_steps,
            channels: l.channels,
        };
        cfg.validate()
            .map_err(|e| Error::parse(path, format!("lidar {i}: {e}")))?;
        lidars.push(cfg);
    }

    let rig = SensorRig {
        name: file.name,
        lidars,
        cameras,
    };
    rig.validate().map_err(|e| Error::parse(path, e.to_string()))?;
    Ok(rig)
}

/// Write a rig file that [`load_rig`] parses back to the same rig.
/// Cameras are written with their resolved `focal_px` (the normalized
/// form), not the `fov_deg` they may have been specified with.
pub fn save_rig(rig: &SensorRig, path: &Path) -> Result<()> {
    let file = RigFile {
        name: rig.name.clone(),
        cameras: rig
            .cameras
            .iter()
            .map(|c| CameraEntry {
                position: [c.mount.position.x, c.mount.position.y, c.mount.position.z],
                yaw_deg: c.mount.yaw.to_degrees(),
                pitch_deg: c.mount.pitch.to_degrees(),
                roll_deg: c.mount.roll.to_degrees(),
                sensor_width: c.sensor_width,
                sensor_height: c.sensor_height,
                ray_width: c.ray_width,
                ray_height: c.ray_height,
                fov_deg: None,
                focal_px: Some(c.focal_px),
            })
            .collect(),
        lidars: rig
            .lidars
            .iter()
            .map(|l| LidarEntry {
                position: [l.mount.position.x, l.mount.position.y, l.mount.position.z],
                yaw_deg: l.mount.yaw.to_degrees(),
                pitch_deg: l.mount.pitch.to_degrees(),
                roll_deg: l.mount.roll.to_degrees(),
                horizontal_fov_deg: l.horizontal_fov_deg,
                vertical_fov_deg: l.vertical_fov_deg,
                horizontal_steps: l.horizontal_steps,
                channels: l.channels,
            })
            .collect(),
    };
    let text = toml::to_string(&file)
        .map_err(|e| Error::invalid(format!("cannot serialize rig: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
