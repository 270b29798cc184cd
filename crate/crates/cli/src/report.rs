//! Report payloads and their CSV / text renderings.
//!
//! CSV carries every float at full precision (shortest representation
//! that parses back to the same bits); the text rendering of metric
//! scores uses the compact convention of scaling by 10^-3 and keeping
//! two decimals.

use rigscore::geometry::RoiGrid;

/// Logarithm base for the entropy unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LogBase {
    /// Natural log; scores in nats.
    E,
    /// Log base 2; scores in bits.
    #[value(name = "2")]
    Two,
}

impl LogBase {
    /// Nats divided by this give the report unit.
    pub fn divisor(self) -> f64 {
        match self {
            LogBase::E => 1.0,
            LogBase::Two => std::f64::consts::LN_2,
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            LogBase::E => "nats",
            LogBase::Two => "bits",
        }
    }
}

/// Output rendering selected by `--format`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

/// Shortest decimal form that parses back to the same float.
fn full(v: f64) -> String {
    format!("{v}")
}

/// Table-style display: value scaled by 10^-3, two decimals.
fn milli(v: f64) -> String {
    format!("{:.2}", v / 1000.0)
}

fn csv_render(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("csv write to memory");
    for row in rows {
        w.write_record(row).expect("csv write to memory");
    }
    String::from_utf8(w.into_inner().expect("csv flush to memory")).expect("csv is utf-8")
}

/// Per-class scores of one rig on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    pub class: String,
    /// Boxes of this class inside the ROI, totalled over all frames.
    pub boxes: usize,
    pub camera_smig: f64,
    pub lidar_smig: f64,
    pub s_ms: f64,
}

/// Full scoring report for one rig: the per-class score rows plus the
/// geometry and dataset digest needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rig: String,
    pub grid: RoiGrid,
    pub lambda: f64,
    pub log_base: LogBase,
    pub frames: u32,
    pub camera_rays: usize,
    pub lidar_rays: usize,
    pub rows: Vec<ClassScores>,
}

impl MetricReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Text => self.to_text(),
        }
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    self.rig.clone(),
                    r.class.clone(),
                    self.frames.to_string(),
                    r.boxes.to_string(),
                    self.grid.voxel_count().to_string(),
                    full(self.lambda),
                    self.camera_rays.to_string(),
                    self.lidar_rays.to_string(),
                    full(r.camera_smig),
                    full(r.lidar_smig),
                    full(r.s_ms),
                ]
            })
            .collect();
        csv_render(
            &[
                "rig",
                "class",
                "frames",
                "class_boxes",
                "voxels",
                "lambda",
                "camera_rays",
                "lidar_rays",
                "camera_smig",
                "lidar_smig",
                "s_ms",
            ],
            &rows,
        )
    }

    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let mut out = String::new();
        out.push_str(&format!("rig: {}\n", self.rig));
        out.push_str(&format!(
            "roi: {} x {} x {} m, delta {} m, {} voxels, origin ({}, {}, {})\n",
            g.length,
            g.width,
            g.height,
            g.delta,
            g.voxel_count(),
            g.origin.x,
            g.origin.y,
            g.origin.z
        ));
        out.push_str(&format!("dataset: {} frames\n", self.frames));
        out.push_str(&format!("lambda: {}\n", self.lambda));
        out.push_str(&format!(
            "rays: camera {}, lidar {}\n",
            self.camera_rays, self.lidar_rays
        ));
        out.push_str(&format!("scores (10^3 {}):\n", self.log_base.unit()));
        let name_w = self
            .rows
            .iter()
            .map(|r| r.class.len())
            .chain([5])
            .max()
            .unwrap();
        out.push_str(&format!(
            "  {:name_w$}  {:>7}  {:>11}  {:>10}  {:>8}\n",
            "class", "boxes", "camera_smig", "lidar_smig", "s_ms"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "  {:name_w$}  {:>7}  {:>11}  {:>10}  {:>8}\n",
                r.class,
                r.boxes,
                milli(r.camera_smig),
                milli(r.lidar_smig),
                milli(r.s_ms)
            ));
        }
        if self.camera_rays == 0 {
            out.push_str("note: rig has no camera rays; camera coverage is empty\n");
        }
        if self.lidar_rays == 0 {
            out.push_str("note: rig has no lidar rays; lidar coverage is empty\n");
        }
        out
    }
}

/// One ranked row of a comparison: rigs are ordered per class by
/// combined score, best first. Per-modality cells are empty when a
/// precomputed table supplied only the combined column.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub class: String,
    pub rank: usize,
    pub config: String,
    pub camera_smig: Option<f64>,
    pub lidar_smig: Option<f64>,
    pub s_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub lambda: f64,
    /// Grouped by class, rank ascending within each group.
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Text => self.to_text(),
        }
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.class.clone(),
                    r.rank.to_string(),
                    r.config.clone(),
                    r.camera_smig.map(full).unwrap_or_default(),
                    r.lidar_smig.map(full).unwrap_or_default(),
                    full(r.s_ms),
                ]
            })
            .collect();
        csv_render(
            &["class", "rank", "config", "camera_smig", "lidar_smig", "s_ms"],
            &rows,
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("ranking by s_ms, best first (lambda = {})\n", self.lambda);
        let mut current = None;
        for r in &self.rows {
            if current != Some(&r.class) {
                out.push_str(&format!("class {}:\n", r.class));
                current = Some(&r.class);
            }
            let cell = |v: Option<f64>| v.map(full).unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "  {:>2}. {}  s_ms {}  (camera {}, lidar {})\n",
                r.rank,
                r.config,
                full(r.s_ms),
                cell(r.camera_smig),
                cell(r.lidar_smig)
            ));
        }
        out
    }
}

/// One (configuration, metric, accuracy) observation of a group.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationPair {
    pub config: String,
    pub metric: f64,
    pub accuracy: f64,
}

/// Correlation of one (detector series, class) column pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGroup {
    pub series: String,
    pub class: String,
    pub pairs: Vec<CorrelationPair>,
    pub pearson_r: f64,
    pub spearman_rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub groups: Vec<CorrelationGroup>,
}

impl CorrelationReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Text => self.to_text(),
        }
    }

    /// One row per pair, with the group statistics repeated on each row,
    /// so the file plots directly as a scatter.
    pub fn to_csv(&self) -> String {
        let mut rows = Vec::new();
        for g in &self.groups {
            for p in &g.pairs {
                rows.push(vec![
                    g.series.clone(),
                    g.class.clone(),
                    p.config.clone(),
                    full(p.metric),
                    full(p.accuracy),
                    g.pairs.len().to_string(),
                    full(g.pearson_r),
                    full(g.spearman_rho),
                ]);
            }
        }
        csv_render(
            &[
                "series",
                "class",
                "config",
                "metric",
                "accuracy",
                "n",
                "pearson_r",
                "spearman_rho",
            ],
            &rows,
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            out.push_str(&format!(
                "{} / {}: n = {}, pearson r = {:.4}, spearman rho = {:.4}\n",
                g.series,
                g.class,
                g.pairs.len(),
                g.pearson_r,
                g.spearman_rho
            ));
            for p in &g.pairs {
                out.push_str(&format!(
                    "  {}  metric {}  accuracy {}\n",
                    p.config,
                    full(p.metric),
                    full(p.accuracy)
                ));
            }
        }
        out
    }
}
