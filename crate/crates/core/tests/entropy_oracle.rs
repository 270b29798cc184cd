//! Entropy and POG computations checked against independent brute-force
//! oracles: a naive per-voxel summation for the entropies, a per-frame
//! containment count for the POG, and random nested coverage pairs for
//! the monotonicity of the conditional entropy.

use nalgebra::Point3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rigscore::dataset::{Dataset, Frame, LabeledBox};
use rigscore::geometry::{OrientedBox, RoiGrid};
use rigscore::occupancy::{
    binary_entropy, build_pog, conditional_entropy, s_mig, total_entropy,
};
use rigscore::traversal::CoverageSet;

/// 100-voxel grid for the summation oracle.
fn grid_100() -> RoiGrid {
    RoiGrid::new(Point3::new(0.0, 0.0, 0.0), 5.0, 5.0, 4.0, 1.0).unwrap()
}

fn random_dataset(rng: &mut ChaCha8Rng, frames: usize) -> Dataset {
    let classes = vec!["Car".to_string()];
    let frames = (0..frames)
        .map(|t| {
            let n_boxes = rng.random_range(0..4usize);
            let boxes = (0..n_boxes)
                .map(|_| LabeledBox {
                    class: "Car".into(),
                    shape: OrientedBox::new(
                        Point3::new(
                            rng.random_range(0.0..5.0),
                            rng.random_range(0.0..5.0),
                            rng.random_range(0.5..3.5),
                        ),
                        rng.random_range(0.5..3.0),
                        rng.random_range(0.5..3.0),
                        rng.random_range(0.5..2.0),
                        rng.random_range(-3.1..3.1),
                    )
                    .unwrap(),
                })
                .collect();
            Frame {
                frame_id: format!("f{t:04}"),
                boxes,
            }
        })
        .collect();
    Dataset { frames, classes }
}

#[test]
fn total_entropy_matches_naive_summation() {
    let grid = grid_100();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc_0001);
    for _ in 0..50 {
        let ds = random_dataset(&mut rng, 16);
        let pog = build_pog(&ds, &grid, "Car").unwrap();
        let naive: f64 = (0..grid.voxel_count())
            .map(|i| binary_entropy(pog.prob(i)).unwrap())
            .sum();
        let fast = total_entropy(&pog);
        let diff = (fast - naive).abs();
        let scale = naive.abs().max(1.0);
        assert!(
            diff <= 1e-9 * scale,
            "entropy mismatch: fast {fast}, naive {naive}"
        );
    }
}

#[test]
fn conditional_entropy_matches_naive_summation() {
    let grid = grid_100();
    let n = grid.voxel_count();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc_0002);
    for _ in 0..50 {
        let ds = random_dataset(&mut rng, 12);
        let pog = build_pog(&ds, &grid, "Car").unwrap();
        let mut cov = CoverageSet::empty(&grid);
        for i in 0..n {
            if rng.random_range(0.0..1.0) < 0.4 {
                cov.insert_linear(i);
            }
        }
        let naive: f64 = (0..n)
            .filter(|&i| !cov.contains_linear(i))
            .map(|i| binary_entropy(pog.prob(i)).unwrap())
            .sum();
        let fast = conditional_entropy(&pog, &cov).unwrap();
        let diff = (fast - naive).abs();
        assert!(
            diff <= 1e-9 * naive.abs().max(1.0),
            "conditional entropy mismatch: fast {fast}, naive {naive}"
        );
    }
}

/// Dataset of four frames whose box placements are counted by hand via
/// per-frame brute-force containment over every voxel center.
#[test]
fn four_frame_pog_matches_brute_force_counts() {
    let grid = RoiGrid::new(Point3::new(0.0, 0.0, 0.0), 8.0, 8.0, 4.0, 1.0).unwrap();
    let car = |cx: f64, cy: f64, l: f64, w: f64, yaw: f64| LabeledBox {
        class: "Car".into(),
        shape: OrientedBox::new(Point3::new(cx, cy, 1.0), l, w, 2.2, yaw).unwrap(),
    };
    // Overlapping placements so different voxels accumulate 1..4 hits;
    // frame 1 has two overlapping boxes that must still count once.
    let frames = vec![
        Frame {
            frame_id: "f0".into(),
            boxes: vec![car(2.5, 2.5, 3.0, 2.0, 0.0)],
        },
        Frame {
            frame_id: "f1".into(),
            boxes: vec![car(2.5, 2.5, 3.0, 2.0, 0.0), car(2.5, 2.5, 2.0, 2.0, 0.4)],
        },
        Frame {
            frame_id: "f2".into(),
            boxes: vec![car(3.5, 2.5, 3.0, 2.0, 0.9), car(6.5, 6.5, 2.0, 1.5, -0.7)],
        },
        Frame {
            frame_id: "f3".into(),
            boxes: vec![car(2.5, 2.5, 4.0, 3.0, 0.2)],
        },
    ];
    let ds = Dataset {
        frames,
        classes: vec!["Car".into()],
    };
    let pog = build_pog(&ds, &grid, "Car").unwrap();
    assert_eq!(pog.frame_count(), 4);

    let mut probs_seen = std::collections::BTreeSet::new();
    for iz in 0..grid.nz {
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let v = rigscore::geometry::VoxelIndex { ix, iy, iz };
                let center = grid.voxel_center(v).unwrap();
                let expected = ds
                    .frames
                    .iter()
                    .filter(|f| f.boxes.iter().any(|b| b.shape.contains(center)))
                    .count() as u32;
                let i = grid.linear_index(v);
                assert_eq!(
                    pog.counts()[i],
                    expected,
                    "voxel {v:?}: pog count {} vs brute force {expected}",
                    pog.counts()[i]
                );
                let p = pog.prob(i);
                assert!(
                    [0.0, 0.25, 0.5, 0.75, 1.0].contains(&p),
                    "probability {p} not a multiple of 1/4"
                );
                probs_seen.insert((p * 4.0) as u32);
            }
        }
    }
    // The construction must actually produce a spread of probabilities.
    assert!(probs_seen.len() >= 4, "degenerate test data: {probs_seen:?}");
    // A half-occupied voxel carries ln 2 nats.
    let h = binary_entropy(0.5).unwrap();
    assert!((h - std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn s_mig_is_exactly_monotone_on_nested_coverage() {
    let grid = RoiGrid::new(Point3::new(0.0, 0.0, 0.0), 8.0, 8.0, 4.0, 1.0).unwrap();
    let n = grid.voxel_count();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc_0003);
    for case in 0..100 {
        let ds = random_dataset(&mut rng, 10);
        let pog = build_pog(&ds, &grid, "Car").unwrap();

        // B random, A = B minus random removals, so A is a strict subset
        // almost always and a subset always.
        let mut b = CoverageSet::empty(&grid);
        for i in 0..n {
            if rng.random_range(0.0..1.0) < 0.5 {
                b.insert_linear(i);
            }
        }
        let mut a = CoverageSet::empty(&grid);
        for i in b.iter_linear() {
            if rng.random_range(0.0..1.0) < 0.7 {
                a.insert_linear(i);
            }
        }
        assert!(a.is_subset_of(&b));

        let sa = s_mig(&pog, &a).unwrap();
        let sb = s_mig(&pog, &b).unwrap();
        assert!(
            sa <= sb,
            "case {case}: s_mig not monotone, subset {sa} > superset {sb}"
        );
    }
}
