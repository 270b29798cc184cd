//! Sensor models: declarative camera/LiDAR configurations and the ray
//! sets they emit.
//!
//! Frames and conventions:
//!
//! * Ego/world frame: x forward, y left, z up.
//! * A sensor's mount frame uses the same axes; its pose maps mount frame
//!   to world frame by rotating yaw about z, then pitch about the new y
//!   (positive pitch tilts the forward axis upward), then roll about the
//!   resulting x, and finally translating to the mount position.
//! * A ray with yaw `theta` and pitch `psi` in some frame points along
//!   `(cos psi * cos theta, cos psi * sin theta, sin psi)`.

use nalgebra::{Point3, Rotation3, Vector3};

use crate::error::Error;
use crate::Result;

/// One ray cast from a sensor, in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub origin: Point3<f64>,
    /// Unit direction (|direction| = 1 within 1e-12).
    pub direction: Vector3<f64>,
    /// Azimuth of `direction`: atan2(y, x).
    pub yaw: f64,
    /// Elevation of `direction`: asin(z).
    pub pitch: f64,
}

impl Ray {
    /// Build a ray from an arbitrary non-zero direction vector; the
    /// direction is normalized and yaw/pitch derived from it.
    pub fn from_direction(origin: Point3<f64>, direction: Vector3<f64>) -> Self {
        let direction = direction.normalize();
        Ray {
            origin,
            yaw: direction.y.atan2(direction.x),
            pitch: direction.z.clamp(-1.0, 1.0).asin(),
            direction,
        }
    }
}

/// Pose of a sensor on the ego vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountPose {
    pub position: Point3<f64>,
    /// Rotation about z (radians).
    pub yaw: f64,
    /// Elevation (radians); positive tilts the sensor's forward axis up.
    pub pitch: f64,
    /// Rotation about the sensor's forward axis (radians).
    pub roll: f64,
}

impl MountPose {
    pub fn level(position: Point3<f64>, yaw: f64) -> Self {
        MountPose {
            position,
            yaw,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    /// Mount-frame to world-frame rotation.
    ///
    /// nalgebra's Euler order is Rz(yaw) * Ry(pitch) * Rx(roll) with Ry
    /// depressing the forward axis for positive angles; the sign flip
    /// makes our pitch elevation-positive.
    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_euler_angles(self.roll, -self.pitch, self.yaw)
    }
}

/// Spinning (or FOV-limited) multi-channel LiDAR.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarConfig {
    pub mount: MountPose,
    /// Azimuth sweep in degrees; 360 for rotating units.
    pub horizontal_fov_deg: f64,
    /// Vertical aperture in degrees, centered on the mount's horizon.
    pub vertical_fov_deg: f64,
    /// Firings per sweep (azimuth sample count).
    pub horizontal_steps: usize,
    /// Beam channels (pitch sample count).
    pub channels: usize,
}

impl LidarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizontal_steps == 0 {
            return Err(Error::invalid("lidar horizontal_steps must be >= 1"));
        }
        if self.channels == 0 {
            return Err(Error::invalid("lidar channels must be >= 1"));
        }
        if !(0.0..=360.0).contains(&self.horizontal_fov_deg) {
            return Err(Error::invalid(format!(
                "lidar horizontal_fov {} out of range [0, 360]",
                self.horizontal_fov_deg
            )));
        }
        if self.vertical_fov_deg <= 0.0 || self.vertical_fov_deg >= 180.0 {
            return Err(Error::invalid(format!(
                "lidar vertical_fov {} out of range (0, 180)",
                self.vertical_fov_deg
            )));
        }
        if self.channels == 1 && self.vertical_fov_deg > 0.0 {
            return Err(Error::invalid(
                "lidar with 1 channel and nonzero vertical_fov: pitch spacing undefined",
            ));
        }
        Ok(())
    }
}

/// Pinhole camera casting one ray per pixel of a downscaled image.
///
/// `sensor_width`/`sensor_height` describe the full-resolution sensor;
/// rays are cast for a `ray_width` x `ray_height` resampling of it, so the
/// ray count stays tractable while the optics (focal length in original
/// pixels) stay those of the real camera.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraConfig {
    pub mount: MountPose,
    /// Native sensor size in pixels.
    pub sensor_width: f64,
    pub sensor_height: f64,
    /// Ray-grid size in pixels (one ray per cell).
    pub ray_width: usize,
    pub ray_height: usize,
    /// Focal length in native pixels.
    pub focal_px: f64,
}

impl CameraConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sensor_width <= 0.0 || self.sensor_height <= 0.0 {
            return Err(Error::invalid("camera sensor size must be positive"));
        }
        if self.ray_width == 0 || self.ray_height == 0 {
            return Err(Error::invalid("camera ray grid must be at least 1x1"));
        }
        if self.ray_width as f64 > self.sensor_width || self.ray_height as f64 > self.sensor_height
        {
            return Err(Error::invalid(format!(
                "camera ray grid {}x{} exceeds sensor {}x{}: upsampling forbidden",
                self.ray_width, self.ray_height, self.sensor_width, self.sensor_height
            )));
        }
        if !self.focal_px.is_finite() || self.focal_px <= 0.0 {
            return Err(Error::invalid(format!(
                "camera focal length must be positive, got {}",
                self.focal_px
            )));
        }
        Ok(())
    }
}

/// A complete rig: every sensor mounted on the ego vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorRig {
    pub name: String,
    pub lidars: Vec<LidarConfig>,
    pub cameras: Vec<CameraConfig>,
}

impl SensorRig {
    pub fn validate(&self) -> Result<()> {
        if self.lidars.is_empty() && self.cameras.is_empty() {
            return Err(Error::invalid(format!(
                "rig '{}' has no sensors",
                self.name
            )));
        }
        for l in &self.lidars {
            l.validate()?;
        }
        for c in &self.cameras {
            c.validate()?;
        }
        Ok(())
    }
}

/// Focal length in pixels for a sensor of width `w0` pixels and the given
/// horizontal field of view: `f = (w0/2) / tan(fov/2)`.
pub fn focal_from_fov(sensor_width: f64, fov_deg: f64) -> Result<f64> {
    if !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(Error::invalid(format!(
            "camera fov {fov_deg} out of range (0, 180)"
        )));
    }
    Ok(sensor_width / 2.0 / (fov_deg.to_radians() / 2.0).tan())
}

fn direction_from_angles(yaw: f64, pitch: f64) -> Vector3<f64> {
    let (sin_yaw, cos_yaw) = yaw.sin_cos();
    let (sin_pitch, cos_pitch) = pitch.sin_cos();
    Vector3::new(cos_pitch * cos_yaw, cos_pitch * sin_yaw, sin_pitch)
}

/// All rays of one LiDAR: `horizontal_steps * channels` rays on a uniform
/// angular lattice.
///
/// Azimuths step by `hfov / I` starting at 0 (a rotating unit thus covers
/// the full circle without duplicating the wrap-around direction); pitches
/// span `[-vfov/2, +vfov/2]` inclusive with `J` evenly spaced channels.
pub fn lidar_rays(cfg: &LidarConfig) -> Result<Vec<Ray>> {
    cfg.validate()?;
    let rot = cfg.mount.rotation();
    let hfov = cfg.horizontal_fov_deg.to_radians();
    let vfov = cfg.vertical_fov_deg.to_radians();
    let i_count = cfg.horizontal_steps;
    let j_count = cfg.channels;

    let mut rays = Vec::with_capacity(i_count * j_count);
    for i in 0..i_count {
        let theta = hfov * i as f64 / i_count as f64;
        for j in 0..j_count {
            let psi = -vfov / 2.0 + vfov * j as f64 / (j_count - 1) as f64;
            let dir = rot * direction_from_angles(theta, psi);
            rays.push(Ray::from_direction(cfg.mount.position, dir));
        }
    }
    Ok(rays)
}

/// All rays of one camera: one per cell of the ray grid, sampled at cell
/// centers and projected through the pinhole.
///
/// Ray-grid pixel `(u, v)` maps to native pixel `(w, h) = ((u + 0.5) *
/// w0/u0, (v + 0.5) * h0/v0)`; the camera-frame offset from the principal
/// point then gives the mount-frame direction `(f, -(w - w0/2), -(h -
/// h0/2))` (image x runs right = -y in the mount frame, image y runs down
/// = -z), which the mount pose rotates into the world.
pub fn camera_rays(cfg: &CameraConfig) -> Result<Vec<Ray>> {
    cfg.validate()?;
    let rot = cfg.mount.rotation();
    let w0 = cfg.sensor_width;
    let h0 = cfg.sensor_height;
    let u0 = cfg.ray_width;
    let v0 = cfg.ray_height;

    let mut rays = Vec::with_capacity(u0 * v0);
    for v in 0..v0 {
        let h = (v as f64 + 0.5) * h0 / v0 as f64;
        for u in 0..u0 {
            let w = (u as f64 + 0.5) * w0 / u0 as f64;
            let dir_mount = Vector3::new(cfg.focal_px, -(w - w0 / 2.0), -(h - h0 / 2.0));
            rays.push(Ray::from_direction(cfg.mount.position, rot * dir_mount));
        }
    }
    Ok(rays)
}

/// Ray sets of a whole rig, kept separate by modality (the metric scores
/// cameras and LiDARs independently before fusing).
pub fn rig_rays(rig: &SensorRig) -> Result<(Vec<Ray>, Vec<Ray>)> {
    rig.validate()?;
    let mut camera = Vec::new();
    for cfg in &rig.cameras {
        camera.extend(camera_rays(cfg)?);
    }
    let mut lidar = Vec::new();
    for cfg in &rig.lidars {
        lidar.extend(lidar_rays(cfg)?);
    }
    Ok((camera, lidar))
}
