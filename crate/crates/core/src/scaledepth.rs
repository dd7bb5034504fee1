//! Multi-scale resampling that keeps intrinsics consistent with the resized
//! image, the pixel-size depth codec, and the numerical check that rescaling
//! and the position-invariant transform commute.

use crate::camera::{
    fov_of_extent, pixel_size, scale_intrinsics, CameraError, Fov, ImageShape, Intrinsics,
};
use crate::imagecore::{warp, ImageBuffer, ImageError, InverseMap};
use crate::pit::{pit_forward_axis, pit_inverse_axis, WeightMap};

/// Default codec constant; keeps encoded depths in the same numeric range
/// as metric depths for focal lengths around 700 px.
pub const DEFAULT_DEPTH_CONSTANT: f64 = 2.0e-3;

/// Errors from resampling and the depth codec.
#[derive(Debug, thiserror::Error)]
pub enum ScaleDepthError {
    #[error("scale ({rx}, {ry}) of a {width}x{height} image leaves no pixels")]
    DegenerateScale { rx: f64, ry: f64, width: u32, height: u32 },
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("codec constant must be positive and finite, got {0}")]
    BadConstant(f64),
    #[error("pixel ({u}, {v}) outside the {width}x{height} size map")]
    OutsideMap { u: u32, v: u32, width: u32, height: u32 },
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// A resized image together with the intrinsics that keep its field of view
/// equal to the original's.
#[derive(Debug, Clone)]
pub struct ScaledSample {
    pub image: ImageBuffer,
    pub k: Intrinsics,
    pub rx: f64,
    pub ry: f64,
}

impl ScaledSample {
    pub fn fov(&self) -> Fov {
        fov_of_extent(&self.k, f64::from(self.image.width()), f64::from(self.image.height()))
    }
}

struct AxisScale {
    width: u32,
    height: u32,
    rx: f64,
    ry: f64,
}

impl InverseMap for AxisScale {
    fn output_width(&self) -> u32 {
        self.width
    }
    fn output_height(&self) -> u32 {
        self.height
    }
    fn source_coord(&self, u: u32, v: u32) -> (f64, f64) {
        (f64::from(u) / self.rx, f64::from(v) / self.ry)
    }
}

/// Resize an image by `(rx, ry)` and scale the intrinsics to match.
///
/// Output dimensions are `round(dim · r)`; the intrinsics use the exact real
/// ratio, so the field of view is preserved exactly in the continuous sense
/// and to within one pixel of discretization on the stored image.
pub fn rescale_sample(
    img: &ImageBuffer,
    k: &Intrinsics,
    rx: f64,
    ry: f64,
) -> Result<ScaledSample, ScaleDepthError> {
    let scaled_k = scale_intrinsics(k, rx, ry)?;
    let width = (f64::from(img.width()) * rx).round() as u32;
    let height = (f64::from(img.height()) * ry).round() as u32;
    if width == 0 || height == 0 {
        return Err(ScaleDepthError::DegenerateScale {
            rx,
            ry,
            width: img.width(),
            height: img.height(),
        });
    }
    let image = warp(img, &AxisScale { width, height, rx, ry })?;
    Ok(ScaledSample { image, k: scaled_k, rx, ry })
}

/// Depth codec: `d_p = (s/c) · d_g` with `s = pixel_size(K)`.
///
/// Encoding folds the camera into the depth value, so the same physical
/// depth looks different through different cameras, by design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthCodec {
    c: f64,
}

impl Default for DepthCodec {
    fn default() -> Self {
        Self { c: DEFAULT_DEPTH_CONSTANT }
    }
}

impl DepthCodec {
    pub fn new(c: f64) -> Result<Self, ScaleDepthError> {
        if c <= 0.0 || !c.is_finite() {
            return Err(ScaleDepthError::BadConstant(c));
        }
        Ok(Self { c })
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    /// Metric depth to pixel-size depth under camera `k`.
    pub fn encode(&self, d_g: f64, k: &Intrinsics) -> Result<f64, ScaleDepthError> {
        if d_g <= 0.0 || d_g.is_nan() {
            return Err(ScaleDepthError::NonPositiveDepth(d_g));
        }
        Ok(pixel_size(k) / self.c * d_g)
    }

    /// Pixel-size depth back to metric depth under camera `k`.
    pub fn decode(&self, d_p: f64, k: &Intrinsics) -> Result<f64, ScaleDepthError> {
        if d_p <= 0.0 || d_p.is_nan() {
            return Err(ScaleDepthError::NonPositiveDepth(d_p));
        }
        Ok(d_p * self.c / pixel_size(k))
    }

    /// Decode with the spatially varying size factor of a transformed image,
    /// read from the size map at output pixel `(u, v)`.
    pub fn decode_varying(
        &self,
        d_p: f64,
        map: &WeightMap,
        u: u32,
        v: u32,
    ) -> Result<f64, ScaleDepthError> {
        if d_p <= 0.0 || d_p.is_nan() {
            return Err(ScaleDepthError::NonPositiveDepth(d_p));
        }
        if !map.contains(u, v) {
            return Err(ScaleDepthError::OutsideMap {
                u,
                v,
                width: map.width(),
                height: map.height(),
            });
        }
        Ok(d_p * self.c / map.s_at(u, v))
    }
}

/// Residuals of running rescale and the position-invariant transform in the
/// two possible orders over a set of test points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationReport {
    /// Max |u, transform after rescale  −  u, rescale after transform|.
    pub max_du: f64,
    /// Max |rescaled source coordinate − inverse-transformed coordinate|.
    pub max_dx: f64,
    /// Points evaluated (those inside the source rectangle).
    pub points: usize,
}

/// Run both operation orders per axis over the given pixel-coordinate points
/// and report the largest residuals. Both are zero in exact arithmetic.
pub fn check_ms_pit_commutation(
    k: &Intrinsics,
    shape: ImageShape,
    r: f64,
    points: &[(f64, f64)],
) -> CommutationReport {
    let mut report = CommutationReport { max_du: 0.0, max_dx: 0.0, points: 0 };
    let (w, h) = (f64::from(shape.width), f64::from(shape.height));
    for &(px_x, px_y) in points {
        if !(0.0..=w).contains(&px_x) || !(0.0..=h).contains(&px_y) {
            continue;
        }
        report.points += 1;
        for (f, coord, p) in [(k.fx, px_x, k.px), (k.fy, px_y, k.py)] {
            let x = coord - p;
            // Rescale first: the point and the focal length both carry r.
            let u1 = pit_forward_axis(r * f, r * x);
            // Transform first, then rescale the spherical coordinate.
            let u2 = r * pit_forward_axis(f, x);
            // u2 / (r·f) = atan(x/f) is always inside the tangent domain.
            let x2 = pit_inverse_axis(r * f, u2).expect("within tangent domain");
            let x1 = r * x;
            report.max_du = report.max_du.max((u1 - u2).abs());
            report.max_dx = report.max_dx.max((x1 - x2).abs());
        }
    }
    report
}
