//! End-to-end checks against the installed binary (exit codes, stdout
//! shape) plus an oracle that recomposes the metric pipeline by hand from
//! library calls and demands exact agreement with the subcommand.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rigscore::dataset::{clip_to_roi, load_rig, load_roi, synth_scene, SceneSpec};
use rigscore::occupancy::{build_pog, s_mig, s_ms};
use rigscore::sensors::rig_rays;
use rigscore::traversal::{coverage, CoverageSet};
use rigscore_cli::pipeline::{cmd_compare, CompareArgs};
use rigscore_cli::report::{Format, LogBase};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rigscore"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn successful_metric_run_exits_zero_and_prints_csv() {
    let rig = fixture("rigs/narrow-line.toml");
    let scene = fixture("scenes/desk.toml");
    let roi = fixture("roi/default.toml");
    let out = run(&[
        "metric",
        "--rig",
        rig.to_str().unwrap(),
        "--dataset",
        scene.to_str().unwrap(),
        "--roi",
        roi.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rig,class,frames,class_boxes,voxels,lambda,camera_rays,lidar_rays,camera_smig,lidar_smig,s_ms"
    );
    assert_eq!(text.lines().count(), 4, "header plus one row per class");
    for line in lines {
        assert!(line.starts_with("narrow-line,"), "unexpected row: {line}");
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["metric", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_and_validation_errors_exit_one() {
    // Missing required arguments.
    let out = run(&["metric"]);
    assert_eq!(out.status.code(), Some(1));

    // Unknown subcommand.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    // Arguments parse but fail validation.
    let rig = fixture("rigs/narrow-line.toml");
    let scene = fixture("scenes/desk.toml");
    let roi = fixture("roi/default.toml");
    let out = run(&[
        "metric",
        "--rig",
        rig.to_str().unwrap(),
        "--dataset",
        scene.to_str().unwrap(),
        "--roi",
        roi.to_str().unwrap(),
        "--lambda=-0.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("lambda"),
        "stderr should name the bad flag: {}",
        stderr(&out)
    );
}

#[test]
fn missing_input_file_exits_two() {
    let scene = fixture("scenes/desk.toml");
    let roi = fixture("roi/default.toml");
    let out = run(&[
        "metric",
        "--rig",
        "/nonexistent/rig.toml",
        "--dataset",
        scene.to_str().unwrap(),
        "--roi",
        roi.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stderr(&out).starts_with("error: "), "stderr: {}", stderr(&out));
}

#[test]
fn coverage_dump_roundtrips_through_the_mask_file() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("lidar.mask");
    let rig = fixture("rigs/wide-pyramid.toml");
    let roi = fixture("roi/default.toml");
    let out = run(&[
        "coverage",
        "--rig",
        rig.to_str().unwrap(),
        "--roi",
        roi.to_str().unwrap(),
        "--modality",
        "lidar",
        "--out",
        mask.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let grid = load_roi(&roi).unwrap();
    let loaded = CoverageSet::read_mask(&mask, &grid).unwrap();

    let (_, lidar_rays) = rig_rays(&load_rig(&rig).unwrap()).unwrap();
    let expected = coverage(&lidar_rays, &grid);
    assert_eq!(loaded.covered_count(), expected.covered_count());
    assert!(loaded.is_subset_of(&expected) && expected.is_subset_of(&loaded));

    let summary = stdout(&out);
    assert!(
        summary.contains(&format!("{} of {} voxels", expected.covered_count(), grid.voxel_count())),
        "summary line: {summary}"
    );
}

/// Ranking a stored table must keep the better score first within each
/// camera family, for every class.
#[test]
fn precomputed_ranking_orders_each_family_by_score() {
    let report = cmd_compare(&CompareArgs {
        rigs: vec![],
        dataset: None,
        roi: None,
        precomputed: Some(fixture("tables/reference_smig.csv")),
        lambda: 0.1,
        log_base: LogBase::E,
        classes: None,
        seed: None,
        threads: None,
        out: Some(tempfile::tempdir().unwrap().path().join("ranks.csv")),
        format: Format::Csv,
    })
    .unwrap();

    let rank = |class: &str, config: &str| -> usize {
        report
            .rows
            .iter()
            .find(|r| r.class == class && r.config == config)
            .unwrap_or_else(|| panic!("no row for {config}/{class}"))
            .rank
    };
    for class in ["Car", "Bicycle", "Pedestrian"] {
        for family in ["wide", "narrow"] {
            let order = ["trapezoid", "line", "pyramid", "center"]
                .map(|layout| rank(class, &format!("{family}-{layout}")));
            assert!(
                order.windows(2).all(|w| w[0] < w[1]),
                "{class}/{family}: ranks {order:?} not in score order"
            );
        }
    }
}

/// The metric subcommand must agree exactly with the same pipeline
/// composed by hand from library calls.
#[test]
fn metric_subcommand_matches_hand_composed_pipeline() {
    let rig_path = fixture("rigs/narrow-pyramid.toml");
    let scene_path = fixture("scenes/desk.toml");
    let roi_path = fixture("roi/default.toml");
    let lambda = 0.25;

    let report = rigscore_cli::pipeline::cmd_metric(&rigscore_cli::pipeline::MetricArgs {
        rig: rig_path.clone(),
        dataset: scene_path.clone(),
        roi: roi_path.clone(),
        lambda,
        log_base: LogBase::E,
        classes: None,
        seed: None,
        threads: None,
        out: Some(tempfile::tempdir().unwrap().path().join("metric.csv")),
        format: Format::Csv,
    })
    .unwrap();

    let rig = load_rig(&rig_path).unwrap();
    let grid = load_roi(&roi_path).unwrap();
    let ds = synth_scene(&SceneSpec::load(&scene_path).unwrap()).unwrap();
    let clipped = clip_to_roi(&ds, &grid);
    let (camera_rays, lidar_rays) = rig_rays(&rig).unwrap();
    let camera_cov = coverage(&camera_rays, &grid);
    let lidar_cov = coverage(&lidar_rays, &grid);

    assert_eq!(report.rig, rig.name);
    assert_eq!(report.frames as usize, clipped.frame_count());
    assert_eq!(report.camera_rays, camera_rays.len());
    assert_eq!(report.lidar_rays, lidar_rays.len());
    assert_eq!(report.rows.len(), clipped.classes.len());

    for (row, class) in report.rows.iter().zip(&clipped.classes) {
        let pog = build_pog(&clipped, &grid, class).unwrap();
        let camera = s_mig(&pog, &camera_cov).unwrap();
        let lidar = s_mig(&pog, &lidar_cov).unwrap();
        assert_eq!(row.class, *class);
        assert_eq!(row.boxes, clipped.box_count(class));
        assert_eq!(row.camera_smig, camera, "{class}: camera score differs");
        assert_eq!(row.lidar_smig, lidar, "{class}: lidar score differs");
        assert_eq!(row.s_ms, s_ms(camera, lidar, lambda), "{class}: fused score differs");
    }
}
