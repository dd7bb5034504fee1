//! Acceptance suite: the numbered guarantees the project ships under.
//!
//! Each test is one criterion, self-contained and deterministic (seeded).
//! Oracles are computed independently of the code under test — Monte-Carlo
//! volume estimates, closed-form trigonometry, and constructed scenes with
//! known answers.

mod common;

use std::fs;
use std::time::Instant;

use camgen3d::camera::{fov, fov_of_extent, pixel_size, scale_intrinsics, Intrinsics};
use camgen3d::dataio::{parse_label_file, serialize_label_file, size_stats, SizeStats};
use camgen3d::gcos::{gcos_augment, stat_ratio, BlendMode, ObjectProvenance};
use camgen3d::geom3d::{
    bev_iou, bev_rect, dim_replacement_analysis, iou3d, visible_faces, Box3D, Dims, Label,
    Visibility,
};
use camgen3d::pit::{
    pit_forward_axis, pit_forward_point, pit_inverse_axis, pit_inverse_point, pit_unwarp_image,
    pit_warp_image, pixel_size_map, PitFrame,
};
use camgen3d::scaledepth::DepthCodec;
use camgen3d::ImageShape;
use common::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_intrinsics(rng: &mut ChaCha8Rng) -> Intrinsics {
    Intrinsics::new(
        rng.random_range(200.0..1500.0),
        rng.random_range(200.0..1500.0),
        rng.random_range(200.0..1000.0),
        rng.random_range(100.0..500.0),
    )
    .unwrap()
}

/// 1. Field of view is invariant under joint rescaling of intrinsics and
///    image extents, to 1e-12, for 100 random cameras and ratios in
///    [0.3, 3]. Runs in under 0.1 s.
#[test]
fn criterion_01_fov_invariance_under_joint_scaling() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut max = 0.0f64;
    for _ in 0..100 {
        let k = random_intrinsics(&mut rng);
        let w = rng.random_range(320.0..2048.0f64).round();
        let h = rng.random_range(240.0..1024.0f64).round();
        let r = rng.random_range(0.3..3.0);
        let before = fov_of_extent(&k, w, h);
        let scaled = scale_intrinsics(&k, r, r).unwrap();
        let after = fov_of_extent(&scaled, r * w, r * h);
        max = max
            .max((before.fov_w - after.fov_w).abs())
            .max((before.fov_h - after.fov_h).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!("criterion 1: max |Δfov| = {max:.3e} rad in {elapsed:.3} s");
    assert!(max < 1e-12, "fov drifted by {max}");
    assert!(elapsed < 0.1, "took {elapsed} s");
}

/// 2. Rescaling and the position-invariant transform commute: 10⁴ random
///    (x, f, r) give residuals under 1e-9 in both the transformed and the
///    source coordinate, including the worked half-scale case. Under 0.5 s.
#[test]
fn criterion_02_rescale_transform_commutation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (mut max_du, mut max_dx) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let f = rng.random_range(100.0..2000.0);
        let x = rng.random_range(-3.0..3.0) * f;
        let r = rng.random_range(0.3..3.0);
        let u1 = pit_forward_axis(r * f, r * x);
        let u2 = r * pit_forward_axis(f, x);
        let x2 = pit_inverse_axis(r * f, u2).unwrap();
        max_du = max_du.max((u1 - u2).abs());
        max_dx = max_dx.max((x2 - r * x).abs());
    }
    // Worked case: x = 100, f = 500, r = 1/2; both orders give
    // 250·atan(1/5).
    let u1 = pit_forward_axis(250.0, 50.0);
    let u2 = 0.5 * pit_forward_axis(500.0, 100.0);
    assert!((u1 - 49.34888996247019).abs() < 1e-9, "u1 = {u1}");
    assert!((u2 - 49.34888996247019).abs() < 1e-9, "u2 = {u2}");
    assert!((u1 - u2).abs() < 1e-9);
    let elapsed = start.elapsed().as_secs_f64();
    println!("criterion 2: max |Δu| = {max_du:.3e}, max |Δx| = {max_dx:.3e} in {elapsed:.3} s");
    assert!(max_du < 1e-9 && max_dx < 1e-9);
    assert!(elapsed < 0.5, "took {elapsed} s");
}

/// 3. Transform roundtrips: 10⁴ random points return within 1e-9, and a
///    256×256 smooth gradient survives warp+unwarp within 2 gray levels
///    over the central 80%. Under 2 s.
#[test]
fn criterion_03_transform_roundtrips() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut max = 0.0f64;
    for _ in 0..10_000 {
        let k = random_intrinsics(&mut rng);
        let tx: f64 = rng.random_range(-1.3..1.3);
        let ty: f64 = rng.random_range(-1.3..1.3);
        let p = (k.fx * tx.tan(), k.fy * ty.tan());
        let q = pit_forward_point(&k, p);
        let back = pit_inverse_point(&k, q).unwrap();
        max = max.max((back.0 - p.0).abs()).max((back.1 - p.1).abs());
    }
    assert!(max < 1e-9, "point roundtrip drifted by {max}");

    let img = smooth_image(256, 256);
    let k = Intrinsics::new(200.0, 200.0, 127.5, 127.5).unwrap();
    let frame = PitFrame::new(k, ImageShape::new(256, 256));
    let warped = pit_warp_image(&frame, &img).unwrap();
    let back = pit_unwarp_image(&frame, &warped).unwrap();
    let mut max_px = 0.0f32;
    for y in 26..230 {
        for x in 26..230 {
            for (a, b) in back.pixel(x, y).iter().zip(img.pixel(x, y)) {
                max_px = max_px.max((a - b).abs());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "criterion 3: point {max:.3e} px, image {:.3} gray levels in {elapsed:.3} s",
        max_px * 255.0
    );
    assert!(max_px < 2.0 / 255.0, "image roundtrip error {max_px}");
    assert!(elapsed < 2.0, "took {elapsed} s");
}

/// 4. Depth codec: decode∘encode is the identity to 1e-12, and shrinking
///    the camera by r scales the encoded depth by exactly 1/r (to 1e-12 on
///    the intrinsics algebra).
#[test]
fn criterion_04_depth_codec_exactness_and_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let codec = DepthCodec::default();
    for _ in 0..1000 {
        let k = random_intrinsics(&mut rng);
        let d = rng.random_range(0.5..120.0);
        let encoded = codec.encode(d, &k).unwrap();
        let decoded = codec.decode(encoded, &k).unwrap();
        assert!((decoded - d).abs() < 1e-12, "roundtrip {d} -> {decoded}");

        let r = rng.random_range(0.3..1.0);
        let shrunk = scale_intrinsics(&k, r, r).unwrap();
        let coarse = codec.encode(d, &shrunk).unwrap();
        // Shrinking by r makes pixels 1/r times larger, so the encoded
        // depth grows by the same factor.
        assert!(
            (r * coarse - encoded).abs() <= 1e-12 * encoded,
            "expected 1/r scaling, got {coarse} vs {encoded} at r = {r}"
        );
    }
    println!("criterion 4: 1000 roundtrips and shrink checks exact to 1e-12");
}

/// 5. The per-pixel size map reproduces the camera's pixel size at the
///    principal point (1e-6) and doubles one focal length out (sec² π/4,
///    within 1%).
#[test]
fn criterion_05_weight_map_calibration() {
    let k = Intrinsics::new(500.0, 500.0, 620.0, 187.5).unwrap();
    let frame = PitFrame::new(k, ImageShape::new(1242, 375));
    let map = pixel_size_map(&frame).unwrap();
    let (du, dv) = frame.offset();
    let at = |coord: f64, off: f64| (coord - off).round().max(0.0) as u32;

    let (uc, vc) = (at(0.0, du), at(0.0, dv));
    let center_err = (map.s_at(uc, vc) - pixel_size(&k)).abs();
    assert!(center_err < 1e-6, "center deviates by {center_err}");

    let u_far = at(500.0 * std::f64::consts::FRAC_PI_4, du);
    let ratio = map.wx_at(u_far, vc) / 2.0;
    assert!((ratio - 1.0).abs() < 0.01, "width at X=f off by {ratio}");
    println!("criterion 5: center |Δs| = {center_err:.3e}, X=f ratio = {ratio:.5}");
}

/// 6. Scaling anchors over 10³ random boxes × ratios in [0.5, 2]: anchored
///    midpoint/corner drift < 1e-9, ground contact and yaw bitwise
///    unchanged, dimensions exact products. Under 1 s.
#[test]
fn criterion_06_scaling_anchor_stability() {
    use camgen3d::gcos::scale_box_geometry_consistent;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut max_drift = 0.0f64;
    let (mut one_face, mut two_faces) = (0, 0);
    for _ in 0..1000 {
        let b = Box3D::new(
            [
                rng.random_range(-30.0..30.0),
                rng.random_range(0.5..2.5),
                rng.random_range(6.0..60.0),
            ],
            Dims {
                h: rng.random_range(0.8..2.5),
                w: rng.random_range(0.4..3.0),
                l: rng.random_range(0.5..6.0),
            },
            rng.random_range(-3.1..3.1),
        )
        .unwrap();
        let ratios = (
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..2.0),
        );
        let vis = visible_faces(&b).expect("footprint excludes the camera by construction");
        let scaled = scale_box_geometry_consistent(&b, ratios).unwrap();
        assert_eq!(scaled.location[1], b.location[1], "ground contact moved");
        assert_eq!(scaled.yaw, b.yaw, "heading changed");
        assert_eq!(scaled.dims.h, ratios.0 * b.dims.h);
        assert_eq!(scaled.dims.w, ratios.1 * b.dims.w);
        assert_eq!(scaled.dims.l, ratios.2 * b.dims.l);
        let before = bev_rect(&b);
        let after = bev_rect(&scaled);
        let drift = match vis {
            Visibility::OneFace { edge } => {
                one_face += 1;
                let j = (edge + 1) % 4;
                let bx = (before[edge].x + before[j].x) / 2.0;
                let bz = (before[edge].z + before[j].z) / 2.0;
                let ax = (after[edge].x + after[j].x) / 2.0;
                let az = (after[edge].z + after[j].z) / 2.0;
                (ax - bx).hypot(az - bz)
            }
            Visibility::TwoFaces { corner } => {
                two_faces += 1;
                (after[corner].x - before[corner].x).hypot(after[corner].z - before[corner].z)
            }
        };
        max_drift = max_drift.max(drift);
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "criterion 6: max drift {max_drift:.3e} m ({one_face} one-face, {two_faces} two-face) in {elapsed:.3} s"
    );
    assert!(max_drift < 1e-9);
    assert!(one_face > 50 && two_faces > 50, "degenerate visibility mix");
    assert!(elapsed < 1.0, "took {elapsed} s");
}

/// 7. Applying the fixed ratio between two population means moves the
///    augmented mean height onto the target to 1e-6.
#[test]
fn criterion_07_stat_scaling_moves_the_mean() {
    let k = Intrinsics::new(100.0, 100.0, 100.0, 75.0).unwrap();
    let shape = ImageShape::new(200, 150);
    let image = smooth_image(200, 150);

    // 40 cars in 10 frames, heights balanced around 1.71 m.
    let deltas = [0.02, 0.05, 0.08, 0.11, 0.14];
    let mut frames: Vec<Vec<Label>> = Vec::new();
    for j in 0..10 {
        let d = deltas[j % deltas.len()];
        let d2 = deltas[(j + 2) % deltas.len()];
        let heights = [1.71 + d, 1.71 - d, 1.71 + d2, 1.71 - d2];
        let xs = [-4.0, 0.0, 4.0, -1.0];
        let zs = [12.0, 18.0, 25.0, 33.0];
        frames.push(
            (0..4)
                .map(|i| {
                    car_label(&k, shape, car_box(xs[i], zs[i], 0.3 * i as f64 - 0.4, heights[i]))
                })
                .collect(),
        );
    }
    let source = size_stats(&frames, "Car").unwrap();
    assert!((source.mean_h - 1.71).abs() < 1e-9, "source mean is {}", source.mean_h);

    // Ratio between the two population means, heights 1.71 → 1.52.
    let target = SizeStats {
        class: "Car".to_string(),
        count: source.count,
        mean_h: 1.52,
        mean_w: source.mean_w,
        mean_l: source.mean_l,
    };
    let spec = stat_ratio(&source, &target).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let augmented: Vec<Vec<Label>> = frames
        .iter()
        .map(|labels| {
            let out = gcos_augment(&image, &k, labels, &spec, BlendMode::Off, &mut rng);
            for (i, p) in out.provenance.iter().enumerate() {
                assert!(
                    matches!(p, ObjectProvenance::Scaled { .. }),
                    "object {i} skipped: {p:?}"
                );
            }
            out.labels
        })
        .collect();
    let result = size_stats(&augmented, "Car").unwrap();
    let err = (result.mean_h - 1.52).abs();
    println!("criterion 7: augmented mean height = {} (|Δ| = {err:.3e})", result.mean_h);
    assert!(err < 1e-6);
}

fn inside_bev(b: &Box3D, x: f64, z: f64) -> bool {
    let (s, c) = b.yaw.sin_cos();
    let dx = x - b.location[0];
    let dz = z - b.location[2];
    (dx * c - dz * s).abs() <= b.dims.l / 2.0 && (dx * s + dz * c).abs() <= b.dims.w / 2.0
}

/// 8. Rotated BEV IoU and 3D IoU agree with Monte-Carlo estimates (10⁵
///    samples each) within 0.01 over 50 random pairs. Under 30 s.
#[test]
fn criterion_08_overlap_vs_monte_carlo() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let random_box = |rng: &mut ChaCha8Rng| {
        Box3D::new(
            [rng.random_range(-8.0..8.0), rng.random_range(0.8..2.2), rng.random_range(8.0..40.0)],
            Dims {
                h: rng.random_range(1.0..2.2),
                w: rng.random_range(1.4..2.2),
                l: rng.random_range(3.0..5.5),
            },
            rng.random_range(-3.1..3.1),
        )
        .unwrap()
    };
    for pair in 0..50 {
        let a = random_box(&mut rng);
        let b = Box3D::new(
            [
                a.location[0] + rng.random_range(-1.5..1.5),
                a.location[1] + rng.random_range(-0.4..0.4),
                a.location[2] + rng.random_range(-1.5..1.5),
            ],
            Dims {
                h: a.dims.h * rng.random_range(0.7..1.3),
                w: a.dims.w * rng.random_range(0.7..1.3),
                l: a.dims.l * rng.random_range(0.7..1.3),
            },
            a.yaw + rng.random_range(-0.6..0.6),
        )
        .unwrap();

        let ra = (a.dims.l.hypot(a.dims.w)) / 2.0;
        let rb = (b.dims.l.hypot(b.dims.w)) / 2.0;
        let x0 = (a.location[0] - ra).min(b.location[0] - rb);
        let x1 = (a.location[0] + ra).max(b.location[0] + rb);
        let z0 = (a.location[2] - ra).min(b.location[2] - rb);
        let z1 = (a.location[2] + ra).max(b.location[2] + rb);
        let y1 = a.location[1].max(b.location[1]);
        let y0 = (a.location[1] - a.dims.h).min(b.location[1] - b.dims.h);

        let n = 100_000;
        let (mut both2, mut either2, mut both3, mut either3) = (0u32, 0u32, 0u32, 0u32);
        for _ in 0..n {
            let x = rng.random_range(x0..x1);
            let z = rng.random_range(z0..z1);
            let (ia, ib) = (inside_bev(&a, x, z), inside_bev(&b, x, z));
            both2 += u32::from(ia && ib);
            either2 += u32::from(ia || ib);
            let y = rng.random_range(y0..y1);
            let ya = y <= a.location[1] && y >= a.location[1] - a.dims.h;
            let yb = y <= b.location[1] && y >= b.location[1] - b.dims.h;
            both3 += u32::from(ia && ya && ib && yb);
            either3 += u32::from((ia && ya) || (ib && yb));
        }
        let mc2 = if either2 == 0 { 0.0 } else { f64::from(both2) / f64::from(either2) };
        let mc3 = if either3 == 0 { 0.0 } else { f64::from(both3) / f64::from(either3) };
        let d2 = (bev_iou(&a, &b) - mc2).abs();
        let d3 = (iou3d(&a, &b) - mc3).abs();
        assert!(d2 < 0.01, "pair {pair}: BEV off by {d2}");
        assert!(d3 < 0.01, "pair {pair}: 3D off by {d3}");
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!("criterion 8: 50 pairs within 0.01 of Monte-Carlo in {elapsed:.2} s");
    assert!(elapsed < 30.0, "took {elapsed} s");
}

/// 9. With predictions equal to ground truth except dimensions inflated
///    15%, stepwise replacement h → h,w → h,w,l yields monotonically
///    non-decreasing mean matched 3D IoU, reaching exactly 1.0.
#[test]
fn criterion_09_dimension_replacement_ladder() {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut gts = Vec::new();
    let mut preds = Vec::new();
    for _ in 0..12 {
        let b = Box3D::new(
            [rng.random_range(-15.0..15.0), rng.random_range(1.0..2.0), rng.random_range(8.0..50.0)],
            Dims {
                h: rng.random_range(1.3..1.9),
                w: rng.random_range(1.5..1.9),
                l: rng.random_range(3.5..4.5),
            },
            rng.random_range(-3.1..3.1),
        )
        .unwrap();
        let inflated = Box3D::new(
            b.location,
            Dims { h: 1.15 * b.dims.h, w: 1.15 * b.dims.w, l: 1.15 * b.dims.l },
            b.yaw,
        )
        .unwrap();
        gts.push(Label::from_box("Car", b));
        preds.push(Label::from_box("Car", inflated));
    }
    let analysis = dim_replacement_analysis(&preds, &gts, 0.1);
    assert_eq!(analysis.matched, 12);
    assert_eq!(analysis.steps.len(), 4);
    for pair in analysis.steps.windows(2) {
        assert!(
            pair[1].mean_iou3d >= pair[0].mean_iou3d,
            "ladder decreased: {} ({}) -> {} ({})",
            pair[0].dims,
            pair[0].mean_iou3d,
            pair[1].dims,
            pair[1].mean_iou3d
        );
    }
    assert!(analysis.steps[0].mean_iou3d < 1.0);
    assert_eq!(analysis.steps[3].mean_iou3d, 1.0, "full replacement must coincide");
    let path: Vec<String> =
        analysis.steps.iter().map(|s| format!("{}={:.4}", s.dims, s.mean_iou3d)).collect();
    println!("criterion 9: {}", path.join(" → "));
}

/// 10. Determinism and roundtrip: the augmentation command is byte-stable
///     under a fixed seed, and 100 canonical label files survive
///     parse∘serialize byte-identically.
#[test]
fn criterion_10_determinism_and_label_roundtrip() {
    // (a) Same dataset, same seed, run twice into the same output root.
    let data = tempfile::tempdir().unwrap();
    let k = Intrinsics::new(120.0, 120.0, 96.0, 54.0).unwrap();
    let shape = ImageShape::new(192, 108);
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    for i in 0..3 {
        let labels: Vec<Label> = (0..3)
            .map(|j| {
                car_label(
                    &k,
                    shape,
                    car_box(
                        rng.random_range(-3.0..3.0),
                        10.0 + 7.0 * j as f64 + rng.random_range(0.0..2.0),
                        rng.random_range(-3.1..3.1),
                        rng.random_range(1.4..1.8),
                    ),
                )
            })
            .collect();
        write_sample(data.path(), &format!("{i:06}"), &smooth_image(192, 108), &k, Some(&labels));
    }
    let out = tempfile::tempdir().unwrap();
    let gcos_args = [
        "gcos", "--mode", "random", "--random-range", "0.8,1.2", "--blend", "random", "--seed",
        "42",
    ];
    run_ok(bin().args(gcos_args).arg("--data").arg(data.path()).arg("--out").arg(out.path()));
    let first = dir_snapshot(out.path());
    run_ok(bin().args(gcos_args).arg("--data").arg(data.path()).arg("--out").arg(out.path()));
    let second = dir_snapshot(out.path());
    assert_snapshots_identical(&first, &second);

    // (b) 100-file canonical corpus roundtrip.
    let corpus = tempfile::tempdir().unwrap();
    let classes = ["Car", "Pedestrian", "Cyclist", "Van", "Truck"];
    for i in 0..100 {
        let labels: Vec<Label> = (0..rng.random_range(1..8))
            .map(|_| {
                let mut label = Label::from_box(
                    classes[rng.random_range(0..classes.len())],
                    Box3D::new(
                        [
                            rng.random_range(-30.0..30.0),
                            rng.random_range(0.5..2.5),
                            rng.random_range(5.0..80.0),
                        ],
                        Dims {
                            h: rng.random_range(0.5..3.0),
                            w: rng.random_range(0.5..3.0),
                            l: rng.random_range(0.5..15.0),
                        },
                        rng.random_range(-3.1..3.1),
                    )
                    .unwrap(),
                );
                label.truncated = rng.random_range(0.0..1.0);
                label.occluded = rng.random_range(0..4);
                label.alpha = rng.random_range(-3.1..3.1);
                if rng.random_bool(0.3) {
                    label.score = Some(rng.random_range(0.0..1.0));
                }
                label
            })
            .collect();
        fs::write(corpus.path().join(format!("{i:06}.txt")), serialize_label_file(&labels))
            .unwrap();
    }
    for entry in fs::read_dir(corpus.path()).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let reparsed = serialize_label_file(&parse_label_file(&text).unwrap());
        assert_eq!(text, reparsed, "roundtrip broke on {}", path.display());
    }
    println!("criterion 10: augmentation byte-stable; 100-file corpus roundtrips");
}

/// 11. The three published camera rows (shape + field of view) are
///     self-consistent: focal lengths inverted from each row reproduce the
///     row's angles through fov() within 0.5°.
#[test]
fn criterion_11_fov_table_self_consistency() {
    // (height px, width px, vertical fov °, horizontal fov °)
    let rows = [
        (375.0, 1242.0, 29.0, 81.0),
        (900.0, 1600.0, 39.0, 65.0),
        (1024.0, 1224.0, 60.0, 70.0),
    ];
    let invert = |extent: f64, fov_deg: f64| extent / (2.0 * (fov_deg.to_radians() / 2.0).tan());
    for (i, (h, w, fov_h, fov_w)) in rows.into_iter().enumerate() {
        let fx = invert(w, fov_w);
        let fy = invert(h, fov_h);
        let k = Intrinsics::new(fx, fy, w / 2.0, h / 2.0).unwrap();
        let got = fov(&k, ImageShape::new(w as u32, h as u32));
        assert!(
            (got.fov_w_deg() - fov_w).abs() < 0.5,
            "row {i}: horizontal fov {} vs {fov_w}",
            got.fov_w_deg()
        );
        assert!(
            (got.fov_h_deg() - fov_h).abs() < 0.5,
            "row {i}: vertical fov {} vs {fov_h}",
            got.fov_h_deg()
        );
        println!(
            "criterion 11 row {i}: f = ({fx:.1}, {fy:.1}) px → fov ({:.2}°, {:.2}°)",
            got.fov_w_deg(),
            got.fov_h_deg()
        );
    }
    // The first row's inverted focal lengths land on the familiar ~727/725.
    assert!((invert(1242.0, 81.0) - 727.1).abs() < 0.1);
    assert!((invert(375.0, 29.0) - 725.0).abs() < 0.1);
}
