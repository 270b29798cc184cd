//! End-to-end composition behind the subcommands: load configs and
//! frames, build per-class occupancy, cast the rig's rays, and score.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rigscore::dataset::{
    clip_to_roi, load_frames, load_rig, load_roi, synth_scene, Dataset, SceneSpec,
    DEFAULT_CLASSES,
};
use rigscore::geometry::RoiGrid;
use rigscore::occupancy::{build_pog, s_mig, s_ms, OccupancyGrid};
use rigscore::sensors::{rig_rays, SensorRig};
use rigscore::traversal::{coverage, CoverageSet};
use rigscore::{Error, Result};

use crate::report::{
    ClassScores, CompareReport, CompareRow, CorrelationGroup, CorrelationPair,
    CorrelationReport, Format, LogBase, MetricReport,
};
use crate::stats;
use crate::tables::{read_accuracy_table, read_metric_table, MetricRow};

/// Run `f` on a dedicated pool of `threads` workers, or inline on the
/// default pool when no count was requested.
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> Result<T> + Send,
{
    match threads {
        None => f(),
        Some(0) => Err(Error::invalid("--threads needs at least one worker")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("cannot build a {n}-thread pool: {e}")))?;
            pool.install(f)
        }
    }
}

fn validate_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(format!(
            "lambda must be a finite non-negative weight, got {lambda}"
        )));
    }
    Ok(())
}

/// A scene's placement band must lie inside the scored region; boxes
/// spawned outside would silently vanish at the clipping step.
fn check_scene_in_roi(spec: &SceneSpec, grid: &RoiGrid) -> Result<()> {
    let max = grid.max_corner();
    let x_ok = grid.origin.x <= spec.x_range.0 && spec.x_range.1 <= max.x;
    let y_ok = grid.origin.y <= spec.y_range.0 && spec.y_range.1 <= max.y;
    if !(x_ok && y_ok) {
        return Err(Error::invalid(format!(
            "scene placement band x [{}, {}], y [{}, {}] exceeds the ROI footprint \
             x [{}, {}], y [{}, {}]",
            spec.x_range.0,
            spec.x_range.1,
            spec.y_range.0,
            spec.y_range.1,
            grid.origin.x,
            max.x,
            grid.origin.y,
            max.y
        )));
    }
    Ok(())
}

/// Load a dataset for scoring: a `.toml` path is a scene spec to
/// synthesize (`seed` overrides the file's seed), anything else is a
/// frame file checked against `classes`.
pub fn load_dataset(
    path: &Path,
    classes: Option<&[String]>,
    seed: Option<u64>,
    grid: &RoiGrid,
) -> Result<Dataset> {
    if path.extension().is_some_and(|e| e == "toml") {
        if classes.is_some() {
            return Err(Error::invalid(
                "--classes cannot override a scene spec; the scene declares its own classes",
            ));
        }
        let mut spec = SceneSpec::load(path)?;
        if let Some(seed) = seed {
            spec.seed = seed;
        }
        check_scene_in_roi(&spec, grid)?;
        synth_scene(&spec)
    } else {
        if seed.is_some() {
            return Err(Error::invalid("--seed applies only to scene specs (.toml)"));
        }
        let default: Vec<String> = DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect();
        load_frames(path, classes.unwrap_or(&default))
    }
}

/// Per-class occupancy grids in dataset class order, built once so a
/// multi-rig comparison does not rescan the frames per rig.
fn class_pogs(ds: &Dataset, grid: &RoiGrid) -> Result<Vec<OccupancyGrid>> {
    ds.classes
        .iter()
        .map(|class| build_pog(ds, grid, class))
        .collect()
}

fn score_rig(
    rig: &SensorRig,
    pogs: &[OccupancyGrid],
    clipped: &Dataset,
    grid: &RoiGrid,
    lambda: f64,
    log_base: LogBase,
) -> Result<MetricReport> {
    let (camera_rays, lidar_rays) = rig_rays(rig)?;
    let camera_cov = coverage(&camera_rays, grid);
    let lidar_cov = coverage(&lidar_rays, grid);
    let divisor = log_base.divisor();
    let rows = pogs
        .iter()
        .map(|pog| {
            let camera_smig = s_mig(pog, &camera_cov)? / divisor;
            let lidar_smig = s_mig(pog, &lidar_cov)? / divisor;
            Ok(ClassScores {
                class: pog.class_label().to_string(),
                boxes: clipped.box_count(pog.class_label()),
                camera_smig,
                lidar_smig,
                s_ms: s_ms(camera_smig, lidar_smig, lambda),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport {
        rig: rig.name.clone(),
        grid: grid.clone(),
        lambda,
        log_base,
        frames: u32::try_from(clipped.frame_count())
            .map_err(|_| Error::invalid("frame count exceeds u32"))?,
        camera_rays: camera_rays.len(),
        lidar_rays: lidar_rays.len(),
        rows,
    })
}

/// Score each rig against the same dataset and region. The heavy
/// per-class occupancy pass runs once, shared across rigs.
pub fn compute_metric_reports(
    rigs: &[SensorRig],
    ds: &Dataset,
    grid: &RoiGrid,
    lambda: f64,
    log_base: LogBase,
) -> Result<Vec<MetricReport>> {
    validate_lambda(lambda)?;
    let clipped = clip_to_roi(ds, grid);
    let pogs = class_pogs(&clipped, grid)?;
    rigs.iter()
        .map(|rig| score_rig(rig, &pogs, &clipped, grid, lambda, log_base))
        .collect()
}

/// Single-rig convenience wrapper around [`compute_metric_reports`].
pub fn compute_metric_report(
    rig: &SensorRig,
    ds: &Dataset,
    grid: &RoiGrid,
    lambda: f64,
    log_base: LogBase,
) -> Result<MetricReport> {
    let mut reports =
        compute_metric_reports(std::slice::from_ref(rig), ds, grid, lambda, log_base)?;
    Ok(reports.pop().expect("one report per rig"))
}

/// Rank full pipeline reports: per class (dataset order), by combined
/// score descending, ties broken by rig name.
pub fn rank_reports(reports: &[MetricReport], lambda: f64) -> CompareReport {
    let mut rows = Vec::new();
    let class_order: Vec<&str> = reports
        .first()
        .map(|r| r.rows.iter().map(|row| row.class.as_str()).collect())
        .unwrap_or_default();
    for class in class_order {
        let mut group: Vec<CompareRow> = reports
            .iter()
            .flat_map(|report| {
                report.rows.iter().filter(|r| r.class == class).map(|r| CompareRow {
                    class: r.class.clone(),
                    rank: 0,
                    config: report.rig.clone(),
                    camera_smig: Some(r.camera_smig),
                    lidar_smig: Some(r.lidar_smig),
                    s_ms: r.s_ms,
                })
            })
            .collect();
        sort_and_rank(&mut group);
        rows.extend(group);
    }
    CompareReport { lambda, rows }
}

/// Rank a precomputed metric table. Rows carrying an `s_ms` column are
/// ranked by it as supplied; otherwise the combined score is formed from
/// the per-modality columns with `lambda`.
pub fn rank_table(table: &[MetricRow], lambda: f64) -> Result<CompareReport> {
    validate_lambda(lambda)?;
    let configs: BTreeSet<&str> = table.iter().map(|r| r.config.as_str()).collect();
    if configs.len() < 2 {
        return Err(Error::invalid(
            "compare needs at least two configurations in the table",
        ));
    }
    let mut class_order: Vec<&str> = Vec::new();
    for row in table {
        if !class_order.contains(&row.class.as_str()) {
            class_order.push(&row.class);
        }
    }
    let mut rows = Vec::new();
    for class in class_order {
        let mut group: Vec<CompareRow> = table
            .iter()
            .filter(|r| r.class == class)
            .map(|r| {
                let combined = match (r.s_ms, r.camera_smig, r.lidar_smig) {
                    (Some(v), _, _) => v,
                    (None, Some(cam), Some(lid)) => s_ms(cam, lid, lambda),
                    _ => unreachable!("table reader enforces the column contract"),
                };
                CompareRow {
                    class: r.class.clone(),
                    rank: 0,
                    config: r.config.clone(),
                    camera_smig: r.camera_smig,
                    lidar_smig: r.lidar_smig,
                    s_ms: combined,
                }
            })
            .collect();
        sort_and_rank(&mut group);
        rows.extend(group);
    }
    Ok(CompareReport { lambda, rows })
}

fn sort_and_rank(group: &mut [CompareRow]) {
    group.sort_by(|a, b| {
        b.s_ms
            .total_cmp(&a.s_ms)
            .then_with(|| a.config.cmp(&b.config))
    });
    for (i, row) in group.iter_mut().enumerate() {
        row.rank = i + 1;
    }
}

/// Correlate a metric table against an accuracy table, one group per
/// (detector series, class) in accuracy-table order. The two tables must
/// list identical configurations within every group.
pub fn correlate_tables(
    metric_path: &Path,
    accuracy_path: &Path,
    lambda: f64,
) -> Result<CorrelationReport> {
    validate_lambda(lambda)?;
    let metric = read_metric_table(metric_path)?;
    let accuracy = read_accuracy_table(accuracy_path)?;

    let mut metric_by: HashMap<(&str, &str), f64> = HashMap::new();
    for r in &metric {
        let value = match (r.s_ms, r.camera_smig, r.lidar_smig) {
            (Some(v), _, _) => v,
            (None, Some(cam), Some(lid)) => s_ms(cam, lid, lambda),
            _ => unreachable!("table reader enforces the column contract"),
        };
        metric_by.insert((r.config.as_str(), r.class.as_str()), value);
    }

    let mut group_order: Vec<(&str, &str)> = Vec::new();
    for r in &accuracy {
        let key = (r.series.as_str(), r.class.as_str());
        if !group_order.contains(&key) {
            group_order.push(key);
        }
    }

    let mut groups = Vec::new();
    for (series, class) in group_order {
        let rows: Vec<_> = accuracy
            .iter()
            .filter(|r| r.series == series && r.class == class)
            .collect();
        let missing_metric: Vec<&str> = rows
            .iter()
            .filter(|r| !metric_by.contains_key(&(r.config.as_str(), class)))
            .map(|r| r.config.as_str())
            .collect();
        let accuracy_configs: BTreeSet<&str> =
            rows.iter().map(|r| r.config.as_str()).collect();
        let missing_accuracy: Vec<&str> = metric
            .iter()
            .filter(|m| m.class == class && !accuracy_configs.contains(m.config.as_str()))
            .map(|m| m.config.as_str())
            .collect();
        if !(missing_metric.is_empty() && missing_accuracy.is_empty()) {
            let mut msg = format!("config labels differ for series '{series}' class '{class}':");
            if !missing_metric.is_empty() {
                msg.push_str(&format!(" metric table lacks [{}]", missing_metric.join(", ")));
            }
            if !missing_accuracy.is_empty() {
                msg.push_str(&format!(
                    " accuracy table lacks [{}]",
                    missing_accuracy.join(", ")
                ));
            }
            return Err(Error::invalid(msg));
        }

        let pairs: Vec<CorrelationPair> = rows
            .iter()
            .map(|r| CorrelationPair {
                config: r.config.clone(),
                metric: metric_by[&(r.config.as_str(), class)],
                accuracy: r.map,
            })
            .collect();
        let metric_vals: Vec<f64> = pairs.iter().map(|p| p.metric).collect();
        let accuracy_vals: Vec<f64> = pairs.iter().map(|p| p.accuracy).collect();
        groups.push(CorrelationGroup {
            series: series.to_string(),
            class: class.to_string(),
            pearson_r: stats::pearson(&metric_vals, &accuracy_vals)?,
            spearman_rho: stats::spearman(&metric_vals, &accuracy_vals)?,
            pairs,
        });
    }
    Ok(CorrelationReport { groups })
}

fn write_or_print(rendered: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, rendered).map_err(|e| Error::io(path, e)),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

/// `metric` subcommand arguments after clap parsing.
pub struct MetricArgs {
    pub rig: PathBuf,
    pub dataset: PathBuf,
    pub roi: PathBuf,
    pub lambda: f64,
    pub log_base: LogBase,
    pub classes: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Score one rig and emit the report.
pub fn cmd_metric(args: &MetricArgs) -> Result<MetricReport> {
    let rig = load_rig(&args.rig)?;
    let grid = load_roi(&args.roi)?;
    let ds = load_dataset(&args.dataset, args.classes.as_deref(), args.seed, &grid)?;
    let report = with_threads(args.threads, || {
        compute_metric_report(&rig, &ds, &grid, args.lambda, args.log_base)
    })?;
    write_or_print(&report.render(args.format), args.out.as_deref())?;
    Ok(report)
}

/// `compare` subcommand arguments after clap parsing.
pub struct CompareArgs {
    pub rigs: Vec<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub roi: Option<PathBuf>,
    pub precomputed: Option<PathBuf>,
    pub lambda: f64,
    pub log_base: LogBase,
    pub classes: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Rank rigs, either by running the full pipeline on `--rig` files or by
/// reading a precomputed metric table.
pub fn cmd_compare(args: &CompareArgs) -> Result<CompareReport> {
    let report = if let Some(table_path) = &args.precomputed {
        if !args.rigs.is_empty() || args.dataset.is_some() || args.roi.is_some() {
            return Err(Error::invalid(
                "--precomputed replaces --rig, --dataset, and --roi",
            ));
        }
        rank_table(&read_metric_table(table_path)?, args.lambda)?
    } else {
        if args.rigs.len() < 2 {
            return Err(Error::invalid("compare needs at least two --rig files"));
        }
        let (dataset, roi) = match (&args.dataset, &args.roi) {
            (Some(d), Some(r)) => (d, r),
            _ => {
                return Err(Error::invalid(
                    "compare needs --dataset and --roi (or --precomputed)",
                ))
            }
        };
        let rigs: Vec<SensorRig> = args
            .rigs
            .iter()
            .map(|p| load_rig(p))
            .collect::<Result<_>>()?;
        for (i, rig) in rigs.iter().enumerate() {
            if rigs[..i].iter().any(|r| r.name == rig.name) {
                return Err(Error::invalid(format!(
                    "two rig files share the name '{}'",
                    rig.name
                )));
            }
        }
        let grid = load_roi(roi)?;
        let ds = load_dataset(dataset, args.classes.as_deref(), args.seed, &grid)?;
        let reports = with_threads(args.threads, || {
            compute_metric_reports(&rigs, &ds, &grid, args.lambda, args.log_base)
        })?;
        rank_reports(&reports, args.lambda)
    };
    write_or_print(&report.render(args.format), args.out.as_deref())?;
    Ok(report)
}

/// `correlate` subcommand arguments after clap parsing.
pub struct CorrelateArgs {
    pub precomputed: PathBuf,
    pub accuracy: PathBuf,
    pub lambda: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Correlate metric values against accuracy values.
pub fn cmd_correlate(args: &CorrelateArgs) -> Result<CorrelationReport> {
    let report = correlate_tables(&args.precomputed, &args.accuracy, args.lambda)?;
    write_or_print(&report.render(args.format), args.out.as_deref())?;
    Ok(report)
}

/// Ray set selector for the coverage dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Modality {
    Camera,
    Lidar,
    All,
}

/// `coverage` subcommand arguments after clap parsing.
pub struct CoverageArgs {
    pub rig: PathBuf,
    pub roi: PathBuf,
    pub out: PathBuf,
    pub modality: Modality,
    pub threads: Option<usize>,
}

/// Voxel counts behind a coverage dump.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSummary {
    pub rig: String,
    pub rays: usize,
    pub covered: usize,
    pub total: usize,
}

/// Dump the coverage raster of one rig as a flat binary bitmask.
pub fn cmd_coverage(args: &CoverageArgs) -> Result<CoverageSummary> {
    let rig = load_rig(&args.rig)?;
    let grid = load_roi(&args.roi)?;
    let (mut rays, lidar) = rig_rays(&rig)?;
    match args.modality {
        Modality::Camera => {}
        Modality::Lidar => rays = lidar,
        Modality::All => rays.extend(lidar),
    }
    let cov: CoverageSet = with_threads(args.threads, || Ok(coverage(&rays, &grid)))?;
    cov.write_mask(&args.out)?;
    Ok(CoverageSummary {
        rig: rig.name,
        rays: rays.len(),
        covered: cov.covered_count(),
        total: cov.voxel_count(),
    })
}
