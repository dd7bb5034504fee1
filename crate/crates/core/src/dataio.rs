//! KITTI-format label and calibration text I/O, plus dataset size
//! statistics.
//!
//! Label lines carry 15 fields (16 with a trailing score):
//! `type trunc occl alpha x1 y1 x2 y2 h w l x y z ry [score]`.
//! Canonical serialization prints floats with two decimals, so parse and
//! serialize roundtrip byte-identically on canonically formatted files.

use crate::camera::{CameraError, Intrinsics};
use crate::geom3d::{BBox2D, Box3D, Dims, Geom3dError, Label};
use serde::{Deserialize, Serialize};

/// Errors from label/calibration parsing and statistics.
#[derive(Debug, thiserror::Error)]
pub enum DataIoError {
    #[error("line {line}: expected 15 or 16 fields, got {got}")]
    FieldCount { line: usize, got: usize },
    #[error("line {line}, field {field} ({name}): cannot parse {token:?} as a number")]
    BadNumber { line: usize, field: usize, name: &'static str, token: String },
    #[error("line {line}: {source}")]
    InvalidBox {
        line: usize,
        #[source]
        source: Geom3dError,
    },
    #[error("no \"P2:\" line in calibration text")]
    MissingProjection,
    #[error("calibration P2 entry {index}: cannot parse {token:?} as a number")]
    BadCalibNumber { index: usize, token: String },
    #[error("calibration P2: expected 12 values, got {got}")]
    CalibValueCount { got: usize },
    #[error("calibration yields invalid intrinsics: {0}")]
    BadIntrinsics(#[from] CameraError),
    #[error("no {class:?} objects found")]
    EmptyStats { class: String },
}

/// Arithmetic mean object size of one class across a label set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub class: String,
    pub count: usize,
    pub mean_h: f64,
    pub mean_w: f64,
    pub mean_l: f64,
}

fn parse_field(
    line: usize,
    field: usize,
    name: &'static str,
    token: &str,
) -> Result<f64, DataIoError> {
    token.parse().map_err(|_| DataIoError::BadNumber {
        line,
        field,
        name,
        token: token.to_string(),
    })
}

/// Parse label text, one object per non-empty line. Line numbers in errors
/// are 1-based.
pub fn parse_label_file(text: &str) -> Result<Vec<Label>, DataIoError> {
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != 15 && fields.len() != 16 {
            return Err(DataIoError::FieldCount { line, got: fields.len() });
        }
        let num = |field: usize, name: &'static str| parse_field(line, field, name, fields[field]);
        let occluded: i64 = fields[2].parse().map_err(|_| DataIoError::BadNumber {
            line,
            field: 2,
            name: "occluded",
            token: fields[2].to_string(),
        })?;
        let box3d = Box3D::new(
            [num(11, "x")?, num(12, "y")?, num(13, "z")?],
            Dims { h: num(8, "h")?, w: num(9, "w")?, l: num(10, "l")? },
            num(14, "ry")?,
        )
        .map_err(|source| DataIoError::InvalidBox { line, source })?;
        labels.push(Label {
            class: fields[0].to_string(),
            truncated: num(1, "truncated")?,
            occluded,
            alpha: num(3, "alpha")?,
            bbox2d: BBox2D {
                x1: num(4, "x1")?,
                y1: num(5, "y1")?,
                x2: num(6, "x2")?,
                y2: num(7, "y2")?,
            },
            box3d,
            score: if fields.len() == 16 { Some(num(15, "score")?) } else { None },
        });
    }
    Ok(labels)
}

/// Serialize labels in canonical form: two-decimal floats, integer
/// occlusion, one object per line, trailing newline.
pub fn serialize_label_file(labels: &[Label]) -> String {
    let mut out = String::new();
    for l in labels {
        out.push_str(&format!(
            "{} {:.2} {} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2}",
            l.class,
            l.truncated,
            l.occluded,
            l.alpha,
            l.bbox2d.x1,
            l.bbox2d.y1,
            l.bbox2d.x2,
            l.bbox2d.y2,
            l.box3d.dims.h,
            l.box3d.dims.w,
            l.box3d.dims.l,
            l.box3d.location[0],
            l.box3d.location[1],
            l.box3d.location[2],
            l.box3d.yaw,
        ));
        if let Some(score) = l.score {
            out.push_str(&format!(" {score:.2}"));
        }
        out.push('\n');
    }
    out
}

/// Extract intrinsics from calibration text holding a `P2:` line with the
/// 12 row-major entries of the 3x4 projection matrix.
pub fn parse_calib(text: &str) -> Result<Intrinsics, DataIoError> {
    for raw in text.lines() {
        let mut tokens = raw.split_whitespace();
        if tokens.next() != Some("P2:") {
            continue;
        }
        let mut values = [0.0f64; 12];
        let mut count = 0;
        for (index, token) in tokens.enumerate() {
            if index >= 12 {
                return Err(DataIoError::CalibValueCount { got: index + 1 });
            }
            values[index] = token
                .parse()
                .map_err(|_| DataIoError::BadCalibNumber { index, token: token.to_string() })?;
            count = index + 1;
        }
        if count != 12 {
            return Err(DataIoError::CalibValueCount { got: count });
        }
        return Ok(Intrinsics::new(values[0], values[5], values[2], values[6])?);
    }
    Err(DataIoError::MissingProjection)
}

/// Calibration text for the given intrinsics, with full-precision floats so
/// a parse gives the numbers back exactly.
pub fn serialize_calib(k: &Intrinsics) -> String {
    format!(
        "P2: {} 0 {} 0 0 {} {} 0 0 0 1 0\n",
        k.fx, k.px, k.fy, k.py
    )
}

/// Mean dimensions of all `class` objects across a set of label files.
pub fn size_stats(labels: &[Vec<Label>], class: &str) -> Result<SizeStats, DataIoError> {
    let mut count = 0usize;
    let mut sums = [0.0f64; 3];
    for l in labels.iter().flatten().filter(|l| l.class == class) {
        count += 1;
        sums[0] += l.box3d.dims.h;
        sums[1] += l.box3d.dims.w;
        sums[2] += l.box3d.dims.l;
    }
    if count == 0 {
        return Err(DataIoError::EmptyStats { class: class.to_string() });
    }
    let n = count as f64;
    Ok(SizeStats {
        class: class.to_string(),
        count,
        mean_h: sums[0] / n,
        mean_w: sums[1] / n,
        mean_l: sums[2] / n,
    })
}
