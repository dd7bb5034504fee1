//! Pinhole camera intrinsics, field of view, intrinsic rescaling, and the
//! constant pixel size used by the depth codec.
//!
//! Camera frame convention (KITTI): x right, y down, z forward. Yaw is a
//! rotation about the y axis and the bird's-eye view is the x-z plane.

use serde::{Deserialize, Serialize};

/// Errors from camera-geometry operations.
#[derive(Debug, thiserror::Error)]
pub enum CameraError {
    #[error("invalid intrinsics: focal lengths must be positive and finite (fx={fx}, fy={fy})")]
    InvalidIntrinsics { fx: f64, fy: f64 },
    #[error("scale ratio must be positive and finite, got {0}")]
    NonPositiveRatio(f64),
    #[error("point behind camera (z = {0})")]
    BehindCamera(f64),
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
}

/// Pinhole intrinsics: focal lengths and principal point, all in pixels.
///
/// The principal point is not assumed to coincide with the image center;
/// every transform that needs an optical-axis origin measures coordinates
/// relative to `(px, py)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    /// Focal length along x (pixels).
    pub fx: f64,
    /// Focal length along y (pixels).
    pub fy: f64,
    /// Principal point x (pixels).
    pub px: f64,
    /// Principal point y (pixels).
    pub py: f64,
}

impl Intrinsics {
    /// Build intrinsics, rejecting non-positive or non-finite focal lengths.
    pub fn new(fx: f64, fy: f64, px: f64, py: f64) -> Result<Self, CameraError> {
        let k = Self { fx, fy, px, py };
        if !k.is_valid() {
            return Err(CameraError::InvalidIntrinsics { fx, fy });
        }
        Ok(k)
    }

    pub fn is_valid(&self) -> bool {
        self.fx > 0.0
            && self.fy > 0.0
            && self.fx.is_finite()
            && self.fy.is_finite()
            && self.px.is_finite()
            && self.py.is_finite()
    }
}

/// Integer image dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageShape {
    pub width: u32,
    pub height: u32,
}

impl ImageShape {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }
}

/// Field of view in radians, per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fov {
    pub fov_w: f64,
    pub fov_h: f64,
}

impl Fov {
    pub fn fov_w_deg(&self) -> f64 {
        self.fov_w.to_degrees()
    }

    pub fn fov_h_deg(&self) -> f64 {
        self.fov_h.to_degrees()
    }
}

/// Field of view of an image with the given intrinsics:
/// `fov_w = 2·atan(w / (2·fx))`, `fov_h = 2·atan(h / (2·fy))`.
pub fn fov(k: &Intrinsics, shape: ImageShape) -> Fov {
    fov_of_extent(k, f64::from(shape.width), f64::from(shape.height))
}

/// [`fov`] over continuous pixel extents, so scaled extents `r·w` need not
/// be rounded to whole pixels before the invariance identity is checked.
pub fn fov_of_extent(k: &Intrinsics, width: f64, height: f64) -> Fov {
    Fov {
        fov_w: 2.0 * (width / (2.0 * k.fx)).atan(),
        fov_h: 2.0 * (height / (2.0 * k.fy)).atan(),
    }
}

/// Rescale intrinsics together with an image resize by `(rx, ry)`:
/// `fx' = rx·fx`, `px' = rx·px`, `fy' = ry·fy`, `py' = ry·py`.
pub fn scale_intrinsics(k: &Intrinsics, rx: f64, ry: f64) -> Result<Intrinsics, CameraError> {
    if rx <= 0.0 || !rx.is_finite() {
        return Err(CameraError::NonPositiveRatio(rx));
    }
    if ry <= 0.0 || !ry.is_finite() {
        return Err(CameraError::NonPositiveRatio(ry));
    }
    Ok(Intrinsics {
        fx: rx * k.fx,
        fy: ry * k.fy,
        px: rx * k.px,
        py: ry * k.py,
    })
}

/// Constant pixel size of a camera: `s = sqrt(1/fx² + 1/fy²)`.
pub fn pixel_size(k: &Intrinsics) -> f64 {
    (1.0 / (k.fx * k.fx) + 1.0 / (k.fy * k.fy)).sqrt()
}

/// Project a camera-frame point (meters) to pixel coordinates:
/// `u = fx·x/z + px`, `v = fy·y/z + py`. Requires `z > 0`.
pub fn project(k: &Intrinsics, point: [f64; 3]) -> Result<(f64, f64), CameraError> {
    let [x, y, z] = point;
    if z <= 0.0 {
        return Err(CameraError::BehindCamera(z));
    }
    Ok((k.fx * x / z + k.px, k.fy * y / z + k.py))
}

/// Invert [`project`] for a pixel at a known metric depth.
pub fn backproject(k: &Intrinsics, pixel: (f64, f64), depth: f64) -> Result<[f64; 3], CameraError> {
    if depth <= 0.0 {
        return Err(CameraError::NonPositiveDepth(depth));
    }
    let (u, v) = pixel;
    Ok([(u - k.px) / k.fx * depth, (v - k.py) / k.fy * depth, depth])
}
