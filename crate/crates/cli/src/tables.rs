//! CSV tables consumed by `compare --precomputed` and `correlate`.
//!
//! A metric table holds one row per (configuration, class) with the
//! per-modality scores; `cmd_metric` output files satisfy the schema, so
//! reports feed straight back into the other subcommands. Columns beyond
//! the schema are ignored.
//!
//! ```text
//! config,class,camera_smig,lidar_smig,s_ms     # label column may be "rig"
//! wide-center,Car,-73080,-6450,-13758
//! ```
//!
//! An accuracy table adds the detector series the numbers came from:
//!
//! ```text
//! series,class,config,map
//! TF-PP,Car,wide-center,87.08
//! ```

use std::collections::HashSet;
use std::path::Path;

use rigscore::{Error, Result};

/// One (configuration, class) row of a metric table. Either `s_ms` or
/// both per-modality scores are present; files carrying all three keep
/// their published combined value alongside the inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub config: String,
    pub class: String,
    pub camera_smig: Option<f64>,
    pub lidar_smig: Option<f64>,
    pub s_ms: Option<f64>,
}

/// One (series, class, configuration) accuracy observation.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub series: String,
    pub class: String,
    pub config: String,
    pub map: f64,
}

/// Column positions resolved against a header record.
struct Columns<'h> {
    path: &'h Path,
    names: Vec<String>,
}

impl<'h> Columns<'h> {
    fn new(path: &'h Path, header: &csv::StringRecord) -> Columns<'h> {
        Columns {
            path,
            names: header.iter().map(|f| f.trim().to_string()).collect(),
        }
    }

    fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.find(name)
            .ok_or_else(|| Error::parse(self.path, format!("missing column '{name}'")))
    }

    fn field<'r>(&self, record: &'r csv::StringRecord, col: usize, line: usize) -> Result<&'r str> {
        record.get(col).map(str::trim).ok_or_else(|| {
            Error::parse_at(
                self.path,
                line,
                format!("row has no '{}' field", self.names[col]),
            )
        })
    }

    fn number(&self, record: &csv::StringRecord, col: usize, line: usize) -> Result<f64> {
        let raw = self.field(record, col, line)?;
        raw.parse().map_err(|_| {
            Error::parse_at(
                self.path,
                line,
                format!("'{raw}' in column '{}' is not a number", self.names[col]),
            )
        })
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().flexible(true).from_reader(file))
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

/// Read a metric table. The label column may be named `config` or `rig`;
/// the file must provide `s_ms`, or both `camera_smig` and `lidar_smig`,
/// or all three. Duplicate (config, class) rows are rejected.
pub fn read_metric_table(path: &Path) -> Result<Vec<MetricRow>> {
    let mut reader = open_csv(path)?;
    let header = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .clone();
    let cols = Columns::new(path, &header);

    let label = cols
        .find("config")
        .or_else(|| cols.find("rig"))
        .ok_or_else(|| Error::parse(path, "missing column 'config' (or 'rig')"))?;
    let class = cols.require("class")?;
    let camera = cols.find("camera_smig");
    let lidar = cols.find("lidar_smig");
    let s_ms = cols.find("s_ms");
    match (camera, lidar, s_ms) {
        (Some(_), Some(_), _) | (_, _, Some(_)) => {}
        _ => {
            return Err(Error::parse(
                path,
                "need column 's_ms', or both 'camera_smig' and 'lidar_smig'",
            ))
        }
    }

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = record_line(&record);
        let row = MetricRow {
            config: cols.field(&record, label, line)?.to_string(),
            class: cols.field(&record, class, line)?.to_string(),
            camera_smig: camera.map(|c| cols.number(&record, c, line)).transpose()?,
            lidar_smig: lidar.map(|c| cols.number(&record, c, line)).transpose()?,
            s_ms: s_ms.map(|c| cols.number(&record, c, line)).transpose()?,
        };
        if !seen.insert((row.config.clone(), row.class.clone())) {
            return Err(Error::parse_at(
                path,
                line,
                format!("duplicate row for config '{}' class '{}'", row.config, row.class),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "metric table has no data rows"));
    }
    Ok(rows)
}

/// Read an accuracy table (`series,class,config,map`). Duplicate
/// (series, class, config) rows are rejected.
pub fn read_accuracy_table(path: &Path) -> Result<Vec<AccuracyRow>> {
    let mut reader = open_csv(path)?;
    let header = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .clone();
    let cols = Columns::new(path, &header);
    let series = cols.require("series")?;
    let class = cols.require("class")?;
    let config = cols.require("config")?;
    let map = cols.require("map")?;

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = record_line(&record);
        let row = AccuracyRow {
            series: cols.field(&record, series, line)?.to_string(),
            class: cols.field(&record, class, line)?.to_string(),
            config: cols.field(&record, config, line)?.to_string(),
            map: cols.number(&record, map, line)?,
        };
        let key = (row.series.clone(), row.class.clone(), row.config.clone());
        if !seen.insert(key) {
            return Err(Error::parse_at(
                path,
                line,
                format!(
                    "duplicate row for series '{}' class '{}' config '{}'",
                    row.series, row.class, row.config
                ),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "accuracy table has no data rows"));
    }
    Ok(rows)
}
