//! Shared helpers for CLI integration tests: synthetic datasets, process
//! invocation, and output snapshots.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use camgen3d::dataio::{serialize_calib, serialize_label_file};
use camgen3d::geom3d::{project_box, Box3D, Dims, Label};
use camgen3d::imagecore::ImageBuffer;
use camgen3d::{ImageShape, Intrinsics};

/// The compiled `camgen3d` binary under test.
pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_camgen3d"))
}

/// Run a command and assert it exited successfully.
pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawning camgen3d");
    assert!(
        out.status.success(),
        "command failed ({:?})\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

/// Run a command and assert it failed.
pub fn run_err(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawning camgen3d");
    assert!(!out.status.success(), "command unexpectedly succeeded");
    out
}

/// Smooth low-frequency color field.
pub fn smooth_image(width: u32, height: u32) -> ImageBuffer {
    let mut data = Vec::with_capacity(width as usize * height as usize * 3);
    for y in 0..height {
        for x in 0..width {
            let fx = f64::from(x) / f64::from(width.max(2) - 1);
            let fy = f64::from(y) / f64::from(height.max(2) - 1);
            data.push((0.2 + 0.6 * fx) as f32);
            data.push((0.2 + 0.6 * fy) as f32);
            data.push((0.5 + 0.3 * (2.0 * fx + 1.3 * fy).sin()) as f32);
        }
    }
    ImageBuffer::from_vec(width, height, 3, data).unwrap()
}

/// A car-sized box standing on the ground at (x, z).
pub fn car_box(x: f64, z: f64, yaw: f64, h: f64) -> Box3D {
    Box3D::new([x, 1.5, z], Dims { h, w: 1.6, l: 3.9 }, yaw).unwrap()
}

/// A label whose 2D box is the projection of its 3D box.
pub fn car_label(k: &Intrinsics, shape: ImageShape, b: Box3D) -> Label {
    let mut label = Label::from_box("Car", b);
    label.bbox2d = project_box(k, &b, shape).unwrap().0;
    label
}

/// Write one dataset sample (image + calib, labels optional) under `root`.
pub fn write_sample(
    root: &Path,
    stem: &str,
    image: &ImageBuffer,
    k: &Intrinsics,
    labels: Option<&[Label]>,
) {
    let img_dir = root.join("image_2");
    fs::create_dir_all(&img_dir).unwrap();
    fs::write(img_dir.join(format!("{stem}.png")), image.encode_png().unwrap()).unwrap();
    let calib_dir = root.join("calib");
    fs::create_dir_all(&calib_dir).unwrap();
    fs::write(calib_dir.join(format!("{stem}.txt")), serialize_calib(k)).unwrap();
    if let Some(labels) = labels {
        let label_dir = root.join("label_2");
        fs::create_dir_all(&label_dir).unwrap();
        fs::write(label_dir.join(format!("{stem}.txt")), serialize_label_file(labels)).unwrap();
    }
}

fn walk(dir: &Path, prefix: &str, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap();
        let rel = if prefix.is_empty() { name.to_string() } else { format!("{prefix}/{name}") };
        if path.is_dir() {
            walk(&path, &rel, out);
        } else {
            out.insert(rel, fs::read(&path).unwrap());
        }
    }
}

/// All files under `root` as relative path → bytes.
pub fn dir_snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    walk(root, "", &mut out);
    out
}

/// Manifest JSON with the timing field removed, for determinism compares.
pub fn manifest_minus_timing(bytes: &[u8]) -> serde_json::Value {
    let mut value: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    value.as_object_mut().unwrap().remove("timing");
    value
}

/// Compare two output snapshots byte for byte, ignoring manifest timing.
pub fn assert_snapshots_identical(
    first: &BTreeMap<String, Vec<u8>>,
    second: &BTreeMap<String, Vec<u8>>,
) {
    let names: Vec<&String> = first.keys().collect();
    let names2: Vec<&String> = second.keys().collect();
    assert_eq!(names, names2, "output file sets differ");
    for (name, bytes) in first {
        let other = &second[name];
        if name.ends_with("manifest.json") {
            assert_eq!(
                manifest_minus_timing(bytes),
                manifest_minus_timing(other),
                "manifest differs beyond timing"
            );
        } else {
            assert_eq!(bytes, other, "{name} differs between runs");
        }
    }
}
