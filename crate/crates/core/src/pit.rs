//! Position-invariant transform: the spherical point maps `U = f·atan(X/f)`,
//! image warps in both directions, and the per-pixel size map that tracks how
//! the transform stretches pixels away from the principal point.

use crate::camera::{ImageShape, Intrinsics};
use crate::imagecore::{warp, ImageBuffer, ImageError, InverseMap};
use serde::{Deserialize, Serialize};

/// Errors from transform construction, point maps, and map export.
#[derive(Debug, thiserror::Error)]
pub enum PitError {
    #[error("coordinate {u} is outside the tangent domain (|u| must be < {limit})")]
    InverseDomain { u: f64, limit: f64 },
    #[error("image shape ({0}, {1}) does not match the frame's expected ({2}, {3})")]
    ShapeMismatch(u32, u32, u32, u32),
    #[error("raw map header is not valid JSON: {0}")]
    RawHeader(#[from] serde_json::Error),
    #[error("raw map payload truncated: expected {expected} values, found {got}")]
    RawTruncated { expected: usize, got: usize },
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Forward map along one axis: `u = f·atan(x/f)`. Total over all reals.
pub fn pit_forward_axis(f: f64, x: f64) -> f64 {
    f * (x / f).atan()
}

/// Inverse map along one axis: `x = f·tan(u/f)`, defined for `|u| < f·π/2`.
pub fn pit_inverse_axis(f: f64, u: f64) -> Result<f64, PitError> {
    let limit = f * std::f64::consts::FRAC_PI_2;
    // False for NaN operands too, which must be rejected along with
    // out-of-domain values.
    let in_domain = u.abs() < limit;
    if !in_domain {
        return Err(PitError::InverseDomain { u, limit });
    }
    Ok(f * (u / f).tan())
}

/// Forward map of a point given relative to the principal point.
pub fn pit_forward_point(k: &Intrinsics, p: (f64, f64)) -> (f64, f64) {
    (pit_forward_axis(k.fx, p.0), pit_forward_axis(k.fy, p.1))
}

/// Inverse map of a point; errors at or beyond the tangent singularity.
pub fn pit_inverse_point(k: &Intrinsics, q: (f64, f64)) -> Result<(f64, f64), PitError> {
    Ok((pit_inverse_axis(k.fx, q.0)?, pit_inverse_axis(k.fy, q.1)?))
}

/// Bookkeeping for a transformed image: intrinsics, source and output
/// shapes, and the continuous offset `(du, dv)` such that output pixel
/// `(u, v)` sits at `(u + du, v + dv)` in transform coordinates.
///
/// The output canvas is the ceiling of the exact transformed extents of the
/// source rectangle, measured relative to the principal point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitFrame {
    k: Intrinsics,
    source: ImageShape,
    output: ImageShape,
    du: f64,
    dv: f64,
}

impl PitFrame {
    pub fn new(k: Intrinsics, source: ImageShape) -> Self {
        let u_min = pit_forward_axis(k.fx, -k.px);
        let u_max = pit_forward_axis(k.fx, f64::from(source.width) - k.px);
        let v_min = pit_forward_axis(k.fy, -k.py);
        let v_max = pit_forward_axis(k.fy, f64::from(source.height) - k.py);
        let output = ImageShape::new(
            ((u_max - u_min).ceil() as u32).max(1),
            ((v_max - v_min).ceil() as u32).max(1),
        );
        Self { k, source, output, du: u_min, dv: v_min }
    }

    pub fn intrinsics(&self) -> &Intrinsics {
        &self.k
    }

    pub fn source_shape(&self) -> ImageShape {
        self.source
    }

    pub fn output_shape(&self) -> ImageShape {
        self.output
    }

    /// Offset from output pixel coordinates to transform coordinates.
    pub fn offset(&self) -> (f64, f64) {
        (self.du, self.dv)
    }

    /// Where a source pixel coordinate lands on the output canvas.
    pub fn output_coord_of_source(&self, x: f64, y: f64) -> (f64, f64) {
        let (u, v) = pit_forward_point(&self.k, (x - self.k.px, y - self.k.py));
        (u - self.du, v - self.dv)
    }

    /// Which source coordinate an output pixel coordinate shows.
    pub fn source_coord_of_output(&self, u: f64, v: f64) -> Result<(f64, f64), PitError> {
        let (x, y) = pit_inverse_point(&self.k, (u + self.du, v + self.dv))?;
        Ok((x + self.k.px, y + self.k.py))
    }
}

/// Every grid pixel of a frame's output canvas stays strictly inside the
/// tangent domain, so the inverse never errors here.
struct ForwardWarp<'a> {
    frame: &'a PitFrame,
}

impl InverseMap for ForwardWarp<'_> {
    fn output_width(&self) -> u32 {
        self.frame.output.width
    }
    fn output_height(&self) -> u32 {
        self.frame.output.height
    }
    fn source_coord(&self, u: u32, v: u32) -> (f64, f64) {
        let k = &self.frame.k;
        let x = k.fx * ((f64::from(u) + self.frame.du) / k.fx).tan() + k.px;
        let y = k.fy * ((f64::from(v) + self.frame.dv) / k.fy).tan() + k.py;
        (x, y)
    }
}

struct BackwardWarp<'a> {
    frame: &'a PitFrame,
}

impl InverseMap for BackwardWarp<'_> {
    fn output_width(&self) -> u32 {
        self.frame.source.width
    }
    fn output_height(&self) -> u32 {
        self.frame.source.height
    }
    fn source_coord(&self, x: u32, y: u32) -> (f64, f64) {
        self.frame.output_coord_of_source(f64::from(x), f64::from(y))
    }
}

/// Warp a source image onto the transform's output canvas.
pub fn pit_warp_image(frame: &PitFrame, img: &ImageBuffer) -> Result<ImageBuffer, PitError> {
    if (img.width(), img.height()) != (frame.source.width, frame.source.height) {
        return Err(PitError::ShapeMismatch(
            img.width(),
            img.height(),
            frame.source.width,
            frame.source.height,
        ));
    }
    Ok(warp(img, &ForwardWarp { frame })?)
}

/// Reconstruct a source-shaped image from a transformed one.
pub fn pit_unwarp_image(frame: &PitFrame, img: &ImageBuffer) -> Result<ImageBuffer, PitError> {
    if (img.width(), img.height()) != (frame.output.width, frame.output.height) {
        return Err(PitError::ShapeMismatch(
            img.width(),
            img.height(),
            frame.output.width,
            frame.output.height,
        ));
    }
    Ok(warp(img, &BackwardWarp { frame })?)
}

/// Per-output-pixel size factors: the source-plane side lengths
/// `w_x(U) = X(U+1) − X(U)` (same for `w_y`) and the combined size
/// `s = sqrt((w_x/fx)² + (w_y/fy)²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    width: u32,
    height: u32,
    wx: Vec<f64>,
    wy: Vec<f64>,
    s: Vec<f64>,
}

/// Header describing an exported map; sidecar of the PNG form, first line
/// of the raw binary form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightMapHeader {
    pub width: u32,
    pub height: u32,
    pub min: f64,
    pub max: f64,
}

impl WeightMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn contains(&self, u: u32, v: u32) -> bool {
        u < self.width && v < self.height
    }

    fn idx(&self, u: u32, v: u32) -> usize {
        v as usize * self.width as usize + u as usize
    }

    pub fn s_at(&self, u: u32, v: u32) -> f64 {
        self.s[self.idx(u, v)]
    }

    pub fn wx_at(&self, u: u32, v: u32) -> f64 {
        self.wx[self.idx(u, v)]
    }

    pub fn wy_at(&self, u: u32, v: u32) -> f64 {
        self.wy[self.idx(u, v)]
    }

    pub fn s_values(&self) -> &[f64] {
        &self.s
    }

    pub fn min_s(&self) -> f64 {
        self.s.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_s(&self) -> f64 {
        self.s.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid position of the smallest s value.
    pub fn argmin_s(&self) -> (u32, u32) {
        let mut best = 0usize;
        for (i, &v) in self.s.iter().enumerate() {
            if v < self.s[best] {
                best = i;
            }
        }
        ((best % self.width as usize) as u32, (best / self.width as usize) as u32)
    }

    pub fn header(&self) -> WeightMapHeader {
        WeightMapHeader {
            width: self.width,
            height: self.height,
            min: self.min_s(),
            max: self.max_s(),
        }
    }

    /// Encode s as an 8-bit gray PNG normalized by the maximum value,
    /// together with the header the sidecar JSON should record.
    pub fn encode_png(&self) -> Result<(Vec<u8>, WeightMapHeader), PitError> {
        let header = self.header();
        let data: Vec<f32> = self.s.iter().map(|&v| (v / header.max) as f32).collect();
        let img = ImageBuffer::from_vec(self.width, self.height, 1, data).map_err(PitError::Image)?;
        Ok((img.encode_png()?, header))
    }

    /// Encode s as one JSON header line followed by little-endian f64 values
    /// in row-major order.
    pub fn encode_raw(&self) -> Vec<u8> {
        let header = serde_json::to_string(&self.header()).expect("header serializes");
        let mut out = Vec::with_capacity(header.len() + 1 + self.s.len() * 8);
        out.extend_from_slice(header.as_bytes());
        out.push(b'\n');
        for &v in &self.s {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Decode the raw form back into the header and the s grid.
    pub fn decode_raw(bytes: &[u8]) -> Result<(WeightMapHeader, Vec<f64>), PitError> {
        let split = bytes.iter().position(|&b| b == b'\n').unwrap_or(bytes.len());
        let header: WeightMapHeader = serde_json::from_slice(&bytes[..split])?;
        let payload = bytes.get(split + 1..).unwrap_or(&[]);
        let expected = header.width as usize * header.height as usize;
        if payload.len() < expected * 8 {
            return Err(PitError::RawTruncated { expected, got: payload.len() / 8 });
        }
        let values = payload[..expected * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((header, values))
    }
}

/// Build the per-pixel size map of a frame's output canvas.
///
/// Errors only when the forward difference at the canvas edge would cross
/// the tangent singularity, which needs a field of view within one pixel's
/// angle of 180 degrees.
pub fn pixel_size_map(frame: &PitFrame) -> Result<WeightMap, PitError> {
    let k = frame.intrinsics();
    let (w, h) = (frame.output.width, frame.output.height);

    let side = |f: f64, offset: f64, n: u32| -> Result<Vec<f64>, PitError> {
        (0..n)
            .map(|i| {
                let c = f64::from(i) + offset;
                Ok(pit_inverse_axis(f, c + 1.0)? - pit_inverse_axis(f, c)?)
            })
            .collect()
    };
    let col_wx = side(k.fx, frame.du, w)?;
    let row_wy = side(k.fy, frame.dv, h)?;

    let mut wx = Vec::with_capacity(w as usize * h as usize);
    let mut wy = Vec::with_capacity(w as usize * h as usize);
    let mut s = Vec::with_capacity(w as usize * h as usize);
    for vy in &row_wy {
        for vx in &col_wx {
            let a = vx / k.fx;
            let b = vy / k.fy;
            wx.push(*vx);
            wy.push(*vy);
            s.push((a * a + b * b).sqrt());
        }
    }
    Ok(WeightMap { width: w, height: h, wx, wy, s })
}
