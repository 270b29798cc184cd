//! Dataset ingestion: annotated ground-truth frames, synthetic scene
//! generation, and rig/ROI configuration files.
//!
//! The frame file format is line-delimited JSON, UTF-8 with LF endings,
//! one frame per line:
//!
//! ```text
//! {"frame_id":"f000001","boxes":[{"class":"Car","center":[12.0,-1.5,0.9],"size":[4.5,1.9,1.7],"yaw":0.12}]}
//! ```
//!
//! `center` is the box center in meters (world frame), `size` is
//! `[length, width, height]` in meters, `yaw` is radians about z. The
//! format streams line by line, so arbitrarily large datasets never need
//! to fit in memory twice, and diffs stay line-local.

mod config;
mod synth;

pub use config::{load_rig, load_roi, save_rig, save_roi};
pub use synth::{synth_scene, ClassSpec, SceneSpec};

use std::collections::HashSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::{OrientedBox, RoiGrid};
use crate::Result;

/// Object classes scored by default, in report order.
pub const DEFAULT_CLASSES: [&str; 3] = ["Car", "Bicycle", "Pedestrian"];

/// One annotated box: its class plus the oriented geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBox {
    pub class: String,
    pub shape: OrientedBox,
}

/// One annotated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_id: String,
    pub boxes: Vec<LabeledBox>,
}

/// A full dataset: frames plus the declared class set (in report order).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub frames: Vec<Frame>,
    pub classes: Vec<String>,
}

impl Dataset {
    /// Frame count `T`.
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Total box count for one class across all frames.
    pub fn box_count(&self, class: &str) -> usize {
        self.frames
            .iter()
            .map(|f| f.boxes.iter().filter(|b| b.class == class).count())
            .sum()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxRecord {
    class: String,
    center: [f64; 3],
    size: [f64; 3],
    yaw: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    frame_id: String,
    boxes: Vec<BoxRecord>,
}

/// Load a line-delimited frame file, validating every record against the
/// declared classes. Duplicate frame ids and unknown classes are errors;
/// parse errors carry the 1-based line number.
pub fn load_frames(path: &Path, classes: &[String]) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut frames = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FrameRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse_at(path, line_no, e.to_string()))?;
        if !seen_ids.insert(record.frame_id.clone()) {
            return Err(Error::parse_at(
                path,
                line_no,
                format!("duplicate frame_id '{}'", record.frame_id),
            ));
        }
        let mut boxes = Vec::with_capacity(record.boxes.len());
        for (box_no, b) in record.boxes.into_iter().enumerate() {
            if !classes.iter().any(|c| c == &b.class) {
                return Err(Error::parse_at(
                    path,
                    line_no,
                    format!(
                        "box {}: unknown class '{}' (allowed: {})",
                        box_no,
                        b.class,
                        classes.join(", ")
                    ),
                ));
            }
            let shape = OrientedBox::new(
                Point3::new(b.center[0], b.center[1], b.center[2]),
                b.size[0],
                b.size[1],
                b.size[2],
                b.yaw,
            )
            .map_err(|e| Error::parse_at(path, line_no, format!("box {box_no}: {e}")))?;
            boxes.push(LabeledBox {
                class: b.class,
                shape,
            });
        }
        frames.push(Frame {
            frame_id: record.frame_id,
            boxes,
        });
    }
    if frames.is_empty() {
        return Err(Error::parse(path, "dataset contains no frames"));
    }
    Ok(Dataset {
        frames,
        classes: classes.to_vec(),
    })
}

/// Write a dataset in the line-delimited format read by [`load_frames`].
pub fn write_frames(ds: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for frame in &ds.frames {
        let record = FrameRecord {
            frame_id: frame.frame_id.clone(),
            boxes: frame
                .boxes
                .iter()
                .map(|b| BoxRecord {
                    class: b.class.clone(),
                    center: [b.shape.center.x, b.shape.center.y, b.shape.center.z],
                    size: [b.shape.length, b.shape.width, b.shape.height],
                    yaw: b.shape.yaw,
                })
                .collect(),
        };
        let line = serde_json::to_string(&record)
            .map_err(|e| Error::invalid(format!("cannot serialize frame: {e}")))?;
        w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Drop boxes whose centers fall outside the grid. Frames are kept even
/// when emptied: they still count toward the POG denominator `T`.
pub fn clip_to_roi(ds: &Dataset, grid: &RoiGrid) -> Dataset {
    Dataset {
        frames: ds
            .frames
            .iter()
            .map(|f| Frame {
                frame_id: f.frame_id.clone(),
                boxes: f
                    .boxes
                    .iter()
                    .filter(|b| grid.voxel_index(b.shape.center).is_some())
                    .cloned()
                    .collect(),
            })
            .collect(),
        classes: ds.classes.clone(),
    }
}

#[cfg(test)]
pub(crate) fn default_classes() -> Vec<String> {
    DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_lines(lines: &[&str]) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.jsonl");
        std::fs::write(&path, lines.join("\n")).unwrap();
        (dir, path)
    }

    #[test]
    fn single_frame_single_car() {
        let (_dir, path) = write_lines(&[
            r#"{"frame_id":"f0","boxes":[{"class":"Car","center":[1.0,2.0,0.8],"size":[4.0,2.0,1.6],"yaw":0.3}]}"#,
        ]);
        let ds = load_frames(&path, &default_classes()).unwrap();
        assert_eq!(ds.frame_count(), 1);
        assert_eq!(ds.frames[0].frame_id, "f0");
        assert_eq!(ds.frames[0].boxes.len(), 1);
        assert_eq!(ds.frames[0].boxes[0].class, "Car");
        assert_eq!(ds.box_count("Car"), 1);
        assert_eq!(ds.box_count("Bicycle"), 0);
    }

    #[test]
    fn missing_yaw_names_field_and_line() {
        let (_dir, path) = write_lines(&[
            r#"{"frame_id":"f0","boxes":[]}"#,
            r#"{"frame_id":"f1","boxes":[{"class":"Car","center":[0,0,0],"size":[1,1,1]}]}"#,
        ]);
        let err = load_frames(&path, &default_classes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2:"), "line number missing: {msg}");
        assert!(msg.contains("yaw"), "field name missing: {msg}");
    }

    #[test]
    fn unknown_class_lists_allowed() {
        let (_dir, path) = write_lines(&[
            r#"{"frame_id":"f0","boxes":[{"class":"Truck","center":[0,0,0],"size":[1,1,1],"yaw":0}]}"#,
        ]);
        let err = load_frames(&path, &default_classes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Truck"), "{msg}");
        assert!(msg.contains("Car, Bicycle, Pedestrian"), "{msg}");
    }

    #[test]
    fn duplicate_frame_id_is_rejected() {
        let (_dir, path) = write_lines(&[
            r#"{"frame_id":"f0","boxes":[]}"#,
            r#"{"frame_id":"f0","boxes":[]}"#,
        ]);
        let err = load_frames(&path, &default_classes()).unwrap_err();
        assert!(err.to_string().contains("duplicate frame_id"), "{err}");
    }

    #[test]
    fn empty_file_is_rejected() {
        let (_dir, path) = write_lines(&[]);
        assert!(load_frames(&path, &default_classes()).is_err());
    }

    #[test]
    fn nonpositive_size_is_rejected_with_line() {
        let (_dir, path) = write_lines(&[
            r#"{"frame_id":"f0","boxes":[{"class":"Car","center":[0,0,0],"size":[0,1,1],"yaw":0}]}"#,
        ]);
        let err = load_frames(&path, &default_classes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":1:"), "{msg}");
        assert!(msg.contains("length"), "{msg}");
    }

    #[test]
    fn write_then_load_roundtrips() {
        let spec = SceneSpec::small_for_tests(7, 5);
        let ds = synth_scene(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        write_frames(&ds, &path).unwrap();
        let back = load_frames(&path, &ds.classes).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn clip_drops_outside_centers_and_keeps_frames() {
        let grid = RoiGrid::new(Point3::new(-5.0, -5.0, 0.0), 10.0, 10.0, 4.0, 1.0).unwrap();
        let inside = LabeledBox {
            class: "Car".into(),
            shape: OrientedBox::new(Point3::new(0.0, 0.0, 1.0), 4.0, 2.0, 1.5, 0.0).unwrap(),
        };
        let outside = LabeledBox {
            class: "Car".into(),
            shape: OrientedBox::new(Point3::new(40.0, 0.0, 1.0), 4.0, 2.0, 1.5, 0.0).unwrap(),
        };
        let ds = Dataset {
            frames: vec![
                Frame {
                    frame_id: "f0".into(),
                    boxes: vec![inside.clone(), outside.clone()],
                },
                Frame {
                    frame_id: "f1".into(),
                    boxes: vec![outside],
                },
            ],
            classes: default_classes(),
        };
        let clipped = clip_to_roi(&ds, &grid);
        assert_eq!(clipped.frame_count(), 2, "emptied frame still counts");
        assert_eq!(clipped.frames[0].boxes, vec![inside]);
        assert!(clipped.frames[1].boxes.is_empty());
        // Idempotent.
        assert_eq!(clip_to_roi(&clipped, &grid), clipped);
    }
}
