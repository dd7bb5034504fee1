//! `verify`: run the geometric invariant suite and print pass/fail lines.
//!
//! Every check is a randomized (but seeded, hence reproducible) version of
//! a property the library guarantees: field-of-view invariance under joint
//! rescaling, order-independence of rescaling and the position-invariant
//! transform, transform roundtrips at point and image level, depth codec
//! exactness, size-map calibration, and scaling anchor stability.

use anyhow::Result;
use camgen3d::camera::{fov_of_extent, pixel_size, scale_intrinsics, Intrinsics};
use camgen3d::gcos::scale_box_geometry_consistent;
use camgen3d::geom3d::{bev_rect, visible_faces, Box3D, Dims, Visibility};
use camgen3d::imagecore::ImageBuffer;
use camgen3d::pit::{
    pit_forward_point, pit_inverse_point, pit_unwarp_image, pit_warp_image, pixel_size_map,
    PitFrame,
};
use camgen3d::scaledepth::{check_ms_pit_commutation, DepthCodec};
use camgen3d::ImageShape;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::sample_rng;

#[derive(Debug, clap::Args, Serialize)]
pub struct VerifyArgs {
    /// Seed for the randomized checks.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn random_intrinsics(rng: &mut ChaCha8Rng) -> Intrinsics {
    Intrinsics::new(
        rng.random_range(200.0..1500.0),
        rng.random_range(200.0..1500.0),
        rng.random_range(200.0..1000.0),
        rng.random_range(100.0..500.0),
    )
    .expect("positive focal lengths")
}

/// Joint rescaling of intrinsics and (continuous) image extents leaves both
/// field-of-view angles unchanged.
fn fov_invariance(rng: &mut ChaCha8Rng) -> Check {
    let mut max = 0.0f64;
    for _ in 0..100 {
        let k = random_intrinsics(rng);
        let w = rng.random_range(320.0..2048.0f64).round();
        let h = rng.random_range(240.0..1024.0f64).round();
        let r = rng.random_range(0.3..3.0);
        let before = fov_of_extent(&k, w, h);
        let scaled = scale_intrinsics(&k, r, r).expect("positive ratio");
        let after = fov_of_extent(&scaled, r * w, r * h);
        max = max
            .max((before.fov_w - after.fov_w).abs())
            .max((before.fov_h - after.fov_h).abs());
    }
    Check {
        name: "fov_invariance",
        passed: max < 1e-12,
        detail: format!("max |Δfov| = {max:.3e} rad over 100 cases"),
    }
}

/// Rescale-then-transform equals transform-then-rescale, at coordinate
/// level, over random cameras, ratios, and points.
fn ms_pit_commutation(rng: &mut ChaCha8Rng) -> Check {
    let (mut max_du, mut max_dx) = (0.0f64, 0.0f64);
    let mut points_run = 0usize;
    for _ in 0..100 {
        let k = random_intrinsics(rng);
        let shape = ImageShape::new(
            rng.random_range(320..2048),
            rng.random_range(240..1024),
        );
        let r = rng.random_range(0.3..3.0);
        let points: Vec<(f64, f64)> = (0..100)
            .map(|_| {
                (
                    rng.random_range(0.0..f64::from(shape.width)),
                    rng.random_range(0.0..f64::from(shape.height)),
                )
            })
            .collect();
        let report = check_ms_pit_commutation(&k, shape, r, &points);
        max_du = max_du.max(report.max_du);
        max_dx = max_dx.max(report.max_dx);
        points_run += report.points;
    }
    // The worked half-scale case: both orders land on 250·atan(1/5).
    let k = Intrinsics::new(500.0, 500.0, 0.0, 0.0).unwrap();
    let report = check_ms_pit_commutation(
        &k,
        ImageShape::new(200, 200),
        0.5,
        &[(100.0, 0.0)],
    );
    let u1 = 0.5 * camgen3d::pit::pit_forward_axis(500.0, 100.0);
    let anchor = (u1 - 49.34888996247019).abs();
    Check {
        name: "ms_pit_commutation",
        passed: max_du < 1e-9 && max_dx < 1e-9 && report.max_du < 1e-9 && anchor < 1e-9,
        detail: format!("max |Δu| = {max_du:.3e}, max |Δx| = {max_dx:.3e} over {points_run} points"),
    }
}

/// Point-level transform roundtrip stays within 1e-9.
fn pit_point_roundtrip(rng: &mut ChaCha8Rng) -> Check {
    let mut max = 0.0f64;
    for _ in 0..10_000 {
        let k = random_intrinsics(rng);
        let tx: f64 = rng.random_range(-1.3..1.3);
        let ty: f64 = rng.random_range(-1.3..1.3);
        let p = (k.fx * tx.tan(), k.fy * ty.tan());
        let q = pit_forward_point(&k, p);
        let back = pit_inverse_point(&k, q).expect("inside tangent domain");
        max = max.max((back.0 - p.0).abs()).max((back.1 - p.1).abs());
    }
    Check {
        name: "pit_point_roundtrip",
        passed: max < 1e-9,
        detail: format!("max |Δ| = {max:.3e} px over 10000 points"),
    }
}

/// Image-level roundtrip on a smooth gradient: the central 80% of the
/// recovered image matches the source within 2 gray levels.
fn pit_image_roundtrip() -> Check {
    let size = 256u32;
    let mut data = Vec::with_capacity((size * size * 3) as usize);
    for y in 0..size {
        for x in 0..size {
            let fx = f64::from(x) / f64::from(size - 1);
            let fy = f64::from(y) / f64::from(size - 1);
            data.push((0.2 + 0.6 * fx) as f32);
            data.push((0.2 + 0.6 * fy) as f32);
            data.push((0.5 + 0.3 * (2.0 * fx + fy).sin()) as f32);
        }
    }
    let img = ImageBuffer::from_vec(size, size, 3, data).expect("consistent size");
    let k = Intrinsics::new(200.0, 200.0, 127.5, 127.5).unwrap();
    let frame = PitFrame::new(k, ImageShape::new(size, size));
    let back = pit_warp_image(&frame, &img)
        .and_then(|w| pit_unwarp_image(&frame, &w))
        .expect("shapes match by construction");
    let margin = size / 10;
    let mut max = 0.0f32;
    for y in margin..size - margin {
        for x in margin..size - margin {
            for (a, b) in back.pixel(x, y).iter().zip(img.pixel(x, y)) {
                max = max.max((a - b).abs());
            }
        }
    }
    Check {
        name: "pit_image_roundtrip",
        passed: max < 2.0 / 255.0,
        detail: format!("max |Δ| = {:.2} gray levels in the central 80%", max * 255.0),
    }
}

/// decode∘encode is the identity to 1e-12, and shrinking the camera by r
/// scales the encoded depth by exactly 1/r.
fn depth_codec(rng: &mut ChaCha8Rng) -> Check {
    let codec = DepthCodec::default();
    let mut max_round = 0.0f64;
    let mut max_scale = 0.0f64;
    for _ in 0..1000 {
        let k = random_intrinsics(rng);
        let d = rng.random_range(0.5..120.0);
        let encoded = codec.encode(d, &k).expect("positive depth");
        let decoded = codec.decode(encoded, &k).expect("positive depth");
        max_round = max_round.max((decoded - d).abs() / d.max(1.0));
        let r = rng.random_range(0.3..1.0);
        let shrunk = scale_intrinsics(&k, r, r).expect("positive ratio");
        let coarse = codec.encode(d, &shrunk).expect("positive depth");
        max_scale = max_scale.max((r * coarse - encoded).abs() / encoded);
    }
    Check {
        name: "depth_codec",
        passed: max_round < 1e-12 && max_scale < 1e-12,
        detail: format!("roundtrip {max_round:.3e}, 1/r scaling {max_scale:.3e} (relative)"),
    }
}

/// The size map reproduces the camera's pixel size at the principal point
/// and doubles (sec² π/4) one focal length out.
fn weight_map_center() -> Check {
    let k = Intrinsics::new(500.0, 500.0, 620.0, 187.5).unwrap();
    let frame = PitFrame::new(k, ImageShape::new(1242, 375));
    let map = pixel_size_map(&frame).expect("non-degenerate frame");
    let (du, dv) = frame.offset();
    let at = |coord: f64, off: f64| (coord - off).round().max(0.0) as u32;
    let (uc, vc) = (at(0.0, du), at(0.0, dv));
    let center_err = (map.s_at(uc, vc) - pixel_size(&k)).abs();

    let u_far = at(500.0 * std::f64::consts::FRAC_PI_4, du);
    let ratio = map.wx_at(u_far, vc) / 2.0;
    Check {
        name: "weight_map_center",
        passed: center_err < 1e-6 && (ratio - 1.0).abs() < 0.01,
        detail: format!("center |Δs| = {center_err:.3e}; width at X=f / sec²(π/4) = {ratio:.5}"),
    }
}

/// Scaling anchors: visible-edge midpoints / nearest corners drift < 1e-9;
/// ground contact, yaw, and dimension products are exact.
fn gcos_anchors(rng: &mut ChaCha8Rng) -> Check {
    let mut max_drift = 0.0f64;
    let mut exact = true;
    let mut classified = 0usize;
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
        .expect("valid dims");
        let ratios = (
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..2.0),
        );
        let Ok(vis) = visible_faces(&b) else { continue };
        classified += 1;
        let scaled = scale_box_geometry_consistent(&b, ratios).expect("classifiable box");
        exact &= scaled.location[1] == b.location[1]
            && scaled.yaw == b.yaw
            && scaled.dims.h == ratios.0 * b.dims.h
            && scaled.dims.w == ratios.1 * b.dims.w
            && scaled.dims.l == ratios.2 * b.dims.l;
        let before = bev_rect(&b);
        let after = bev_rect(&scaled);
        let drift = match vis {
            Visibility::OneFace { edge } => {
                let j = (edge + 1) % 4;
                let bx = (before[edge].x + before[j].x) / 2.0;
                let bz = (before[edge].z + before[j].z) / 2.0;
                let ax = (after[edge].x + after[j].x) / 2.0;
                let az = (after[edge].z + after[j].z) / 2.0;
                (ax - bx).hypot(az - bz)
            }
            Visibility::TwoFaces { corner } => {
                (after[corner].x - before[corner].x).hypot(after[corner].z - before[corner].z)
            }
        };
        max_drift = max_drift.max(drift);
    }
    Check {
        name: "gcos_anchors",
        passed: max_drift < 1e-9 && exact && classified == 1000,
        detail: format!(
            "max anchor drift = {max_drift:.3e} m over {classified} boxes; exact fields: {exact}"
        ),
    }
}

/// Run every check; true iff all passed.
pub fn run(args: &VerifyArgs) -> Result<bool> {
    let mut rng = sample_rng(args.seed, 0);
    let start = std::time::Instant::now();
    let checks = [
        fov_invariance(&mut rng),
        ms_pit_commutation(&mut rng),
        pit_point_roundtrip(&mut rng),
        pit_image_roundtrip(),
        depth_codec(&mut rng),
        weight_map_center(),
        gcos_anchors(&mut rng),
    ];
    let mut all = true;
    for check in &checks {
        let tag = if check.passed { "PASS" } else { "FAIL" };
        println!("{tag}  {:<22} {}", check.name, check.detail);
        all &= check.passed;
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    println!(
        "verify: {passed}/{} checks passed in {:.2} s",
        checks.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(all)
}
