//! Geometry-consistent object scaling: scale a 3D box while keeping its
//! visible bird's-eye-view geometry pinned, then rescale the object's image
//! patch to match, compositing far-to-near with optional boundary blending.

use crate::camera::{ImageShape, Intrinsics};
use crate::dataio::SizeStats;
use crate::geom3d::{
    bev_axes, edge_face, project_box, visible_faces, BBox2D, Box3D, Dims, FaceAxis, Geom3dError,
    Label, Visibility, CORNER_SIGNS,
};
use crate::imagecore::ImageBuffer;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Sanity bounds on any scaling ratio.
pub const RATIO_BOUNDS: (f64, f64) = (0.2, 5.0);

/// Default interval for randomly drawn ratios.
pub const DEFAULT_RANDOM_RANGE: (f64, f64) = (0.9, 1.1);

/// Smallest source patch worth resampling, in squared pixels.
pub const MIN_PATCH_AREA: f64 = 16.0;

const FEATHER_RADIUS: u32 = 2;

/// Errors from ratio specification and patch compositing.
#[derive(Debug, thiserror::Error)]
pub enum GcosError {
    #[error("ratio {value} outside sanity bounds [{}, {}]", RATIO_BOUNDS.0, RATIO_BOUNDS.1)]
    RatioOutOfBounds { value: f64 },
    #[error("random interval [{lo}, {hi}] is empty or outside sanity bounds")]
    BadInterval { lo: f64, hi: f64 },
    #[error("source patch area {area:.1} px² is below the minimum {MIN_PATCH_AREA}")]
    TinyPatch { area: f64 },
    #[error(transparent)]
    Geometry(#[from] Geom3dError),
}

/// How to choose per-dimension scaling ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ScaleSpec {
    /// Fixed ratios, one per dimension.
    Stat { s_h: f64, s_w: f64, s_l: f64 },
    /// Ratios drawn independently per dimension from closed intervals.
    Random { h: (f64, f64), w: (f64, f64), l: (f64, f64) },
}

fn check_ratio(value: f64) -> Result<f64, GcosError> {
    if !(RATIO_BOUNDS.0..=RATIO_BOUNDS.1).contains(&value) {
        return Err(GcosError::RatioOutOfBounds { value });
    }
    Ok(value)
}

fn check_interval(lo: f64, hi: f64) -> Result<(f64, f64), GcosError> {
    // NaN endpoints fail check_ratio's range containment.
    if lo > hi || check_ratio(lo).is_err() || check_ratio(hi).is_err() {
        return Err(GcosError::BadInterval { lo, hi });
    }
    Ok((lo, hi))
}

impl ScaleSpec {
    pub fn stat(s_h: f64, s_w: f64, s_l: f64) -> Result<Self, GcosError> {
        Ok(Self::Stat {
            s_h: check_ratio(s_h)?,
            s_w: check_ratio(s_w)?,
            s_l: check_ratio(s_l)?,
        })
    }

    pub fn random(h: (f64, f64), w: (f64, f64), l: (f64, f64)) -> Result<Self, GcosError> {
        Ok(Self::Random {
            h: check_interval(h.0, h.1)?,
            w: check_interval(w.0, w.1)?,
            l: check_interval(l.0, l.1)?,
        })
    }

    /// Random mode with the same interval for all three dimensions.
    pub fn random_uniform(lo: f64, hi: f64) -> Result<Self, GcosError> {
        Self::random((lo, hi), (lo, hi), (lo, hi))
    }

    /// Ratios for one object: `(s_h, s_w, s_l)`.
    pub fn draw(&self, rng: &mut impl Rng) -> (f64, f64, f64) {
        match *self {
            Self::Stat { s_h, s_w, s_l } => (s_h, s_w, s_l),
            Self::Random { h, w, l } => (
                rng.random_range(h.0..=h.1),
                rng.random_range(w.0..=w.1),
                rng.random_range(l.0..=l.1),
            ),
        }
    }
}

/// Fixed ratios from two size statistics: target mean over source mean,
/// per dimension.
pub fn stat_ratio(source: &SizeStats, target: &SizeStats) -> Result<ScaleSpec, GcosError> {
    ScaleSpec::stat(
        target.mean_h / source.mean_h,
        target.mean_w / source.mean_w,
        target.mean_l / source.mean_l,
    )
}

/// Scale a box's dimensions while keeping its visible footprint geometry
/// fixed: with one face visible, the visible edge's midpoint stays put and
/// the box extends away from the camera; with two faces visible, their
/// shared (camera-nearest) corner stays put and both edges rescale along
/// their own directions. The bottom stays on the ground (`c_y` unchanged)
/// and yaw is untouched.
pub fn scale_box_geometry_consistent(
    b: &Box3D,
    (s_h, s_w, s_l): (f64, f64, f64),
) -> Result<Box3D, Geom3dError> {
    let vis = visible_faces(b)?;
    let dims = Dims { h: s_h * b.dims.h, w: s_w * b.dims.w, l: s_l * b.dims.l };
    if !(dims.h > 0.0 && dims.w > 0.0 && dims.l > 0.0)
        || !(dims.h.is_finite() && dims.w.is_finite() && dims.l.is_finite())
    {
        return Err(Geom3dError::InvalidDims { h: dims.h, w: dims.w, l: dims.l });
    }
    let (el, ew) = bev_axes(b.yaw);
    // Written as deltas of half-dimension changes so a unit ratio moves the
    // center by exactly zero.
    let (dx, dz) = match vis {
        Visibility::OneFace { edge } => match edge_face(edge) {
            (FaceAxis::AlongWidth, sign) => {
                let d = sign * (b.dims.w - dims.w) / 2.0;
                (d * ew.x, d * ew.z)
            }
            (FaceAxis::AlongLength, sign) => {
                let d = sign * (b.dims.l - dims.l) / 2.0;
                (d * el.x, d * el.z)
            }
        },
        Visibility::TwoFaces { corner } => {
            let (a, bb) = CORNER_SIGNS[corner];
            let dl = a * (b.dims.l - dims.l) / 2.0;
            let dw = bb * (b.dims.w - dims.w) / 2.0;
            (dl * el.x + dw * ew.x, dl * el.z + dw * ew.z)
        }
    };
    Ok(Box3D {
        location: [b.location[0] + dx, b.location[1], b.location[2] + dz],
        dims,
        yaw: b.yaw,
    })
}

/// Whether and how to smooth pasted patch boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendMode {
    Off,
    /// Linear feather over a 2 px band just inside the patch boundary.
    Feather,
    /// Draw Off or Feather with equal probability per patch.
    Random,
}

impl BlendMode {
    fn resolve(self, rng: &mut impl Rng) -> bool {
        match self {
            Self::Off => false,
            Self::Feather => true,
            Self::Random => rng.random_bool(0.5),
        }
    }
}

fn snap(rect: &BBox2D, shape: ImageShape) -> (u32, u32, u32, u32) {
    let x0 = rect.x1.floor().max(0.0) as u32;
    let y0 = rect.y1.floor().max(0.0) as u32;
    let x1 = (rect.x2.ceil() as u32).min(shape.width);
    let y1 = (rect.y2.ceil() as u32).min(shape.height);
    (x0, y0, x1, y1)
}

/// Linearly mix the band just inside `rect` toward the pixels just outside
/// it. At depth d into the patch the patch weight is (d+1)/(radius+1), so
/// the outermost patch row leans most on the background.
pub fn blend_boundary(img: &mut ImageBuffer, rect: &BBox2D, mode: BlendMode, rng: &mut impl Rng) {
    if !mode.resolve(rng) {
        return;
    }
    let shape = ImageShape::new(img.width(), img.height());
    let (x0, y0, x1, y1) = snap(rect, shape);
    if x0 >= x1 || y0 >= y1 {
        return;
    }
    let snapshot = img.clone();
    let n = img.channels() as usize;
    for y in y0..y1 {
        for x in x0..x1 {
            let dl = x - x0;
            let dr = x1 - 1 - x;
            let dt = y - y0;
            let db = y1 - 1 - y;
            let d = dl.min(dr).min(dt).min(db);
            if d >= FEATHER_RADIUS {
                continue;
            }
            // Reference pixel one step beyond the nearest patch edge.
            let (ox, oy) = if dl == d {
                (i64::from(x0) - 1, i64::from(y))
            } else if dr == d {
                (i64::from(x1), i64::from(y))
            } else if dt == d {
                (i64::from(x), i64::from(y0) - 1)
            } else {
                (i64::from(x), i64::from(y1))
            };
            let ox = ox.clamp(0, i64::from(img.width()) - 1) as u32;
            let oy = oy.clamp(0, i64::from(img.height()) - 1) as u32;
            let alpha = f64::from(d + 1) / f64::from(FEATHER_RADIUS + 1);
            let mut mixed = [0.0f32; 3];
            for (c, slot) in mixed.iter_mut().enumerate().take(n) {
                let patch = f64::from(snapshot.pixel(x, y)[c]);
                let outside = f64::from(snapshot.pixel(ox, oy)[c]);
                *slot = (alpha * patch + (1.0 - alpha) * outside) as f32;
            }
            img.set_pixel(x, y, &mixed[..n]);
        }
    }
}

/// Result of one patch paste.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropOutcome {
    pub src_bbox: BBox2D,
    pub dst_bbox: BBox2D,
    pub blended: bool,
}

/// Move the image evidence of `src` onto the silhouette of `dst`.
///
/// Both boxes are projected to their 2D hulls; the patch is resampled with
/// per-axis ratios between the two hulls, anchored at the target hull's
/// center. The whole union of the two hulls is rewritten, so when the patch
/// shrinks, its fringe resamples the adjacent background (the crop is
/// effectively expanded by the inverse ratio first, then narrowed onto the
/// target). The image is untouched when an error is returned.
pub fn crop_paste(
    img: &mut ImageBuffer,
    k: &Intrinsics,
    src: &Box3D,
    dst: &Box3D,
    blend: BlendMode,
    rng: &mut impl Rng,
) -> Result<CropOutcome, GcosError> {
    let shape = ImageShape::new(img.width(), img.height());
    let (src_bbox, _) = project_box(k, src, shape)?;
    if src_bbox.area() < MIN_PATCH_AREA {
        return Err(GcosError::TinyPatch { area: src_bbox.area() });
    }
    let (dst_bbox, _) = project_box(k, dst, shape)?;

    let sigma_x = dst_bbox.width() / src_bbox.width();
    let sigma_y = dst_bbox.height() / src_bbox.height();
    let (scx, scy) = src_bbox.center();
    let (dcx, dcy) = dst_bbox.center();
    // At unit ratio fall back to a pure (zero) translation so the paste is
    // bit-exact instead of accumulating center-relative rounding.
    let map_x = move |u: f64| {
        if sigma_x == 1.0 {
            u + (scx - dcx)
        } else {
            scx + (u - dcx) / sigma_x
        }
    };
    let map_y = move |v: f64| {
        if sigma_y == 1.0 {
            v + (scy - dcy)
        } else {
            scy + (v - dcy) / sigma_y
        }
    };

    let union = BBox2D {
        x1: src_bbox.x1.min(dst_bbox.x1),
        y1: src_bbox.y1.min(dst_bbox.y1),
        x2: src_bbox.x2.max(dst_bbox.x2),
        y2: src_bbox.y2.max(dst_bbox.y2),
    };
    let (x0, y0, x1, y1) = snap(&union, shape);
    let snapshot = img.clone();
    let n = img.channels() as usize;
    for y in y0..y1 {
        let sy = map_y(f64::from(y));
        for x in x0..x1 {
            let s = snapshot.sample_bilinear(map_x(f64::from(x)), sy);
            img.set_pixel(x, y, &s[..n]);
        }
    }
    let blended = blend.resolve(rng);
    if blended {
        blend_boundary(img, &dst_bbox, BlendMode::Feather, rng);
    }
    Ok(CropOutcome { src_bbox, dst_bbox, blended })
}

/// What happened to one input object during augmentation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ObjectProvenance {
    Scaled { ratios: [f64; 3], blended: bool },
    Skipped { reason: String },
}

/// An augmented sample: composited image, labels in input order (scaled
/// where possible), and one provenance entry per input object.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub image: ImageBuffer,
    pub labels: Vec<Label>,
    pub provenance: Vec<ObjectProvenance>,
}

/// Scale every object in a sample. Objects are composited farthest-first so
/// nearer objects end up painted over farther ones; an object that cannot
/// be scaled or pasted is kept unchanged and its skip reason recorded.
pub fn gcos_augment(
    image: &ImageBuffer,
    k: &Intrinsics,
    labels: &[Label],
    spec: &ScaleSpec,
    blend: BlendMode,
    rng: &mut impl Rng,
) -> AugmentedSample {
    let mut out_image = image.clone();
    let mut out_labels = labels.to_vec();
    let mut provenance = vec![ObjectProvenance::Skipped { reason: String::new() }; labels.len()];
    let shape = ImageShape::new(image.width(), image.height());

    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| {
        labels[b].box3d.location[2]
            .partial_cmp(&labels[a].box3d.location[2])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    for idx in order {
        let label = &labels[idx];
        let ratios = spec.draw(rng);
        let attempt = scale_box_geometry_consistent(&label.box3d, (ratios.0, ratios.1, ratios.2))
            .map_err(GcosError::from)
            .and_then(|scaled| {
                crop_paste(&mut out_image, k, &label.box3d, &scaled, blend, rng)
                    .map(|outcome| (scaled, outcome))
            });
        match attempt {
            Ok((scaled, outcome)) => {
                let mut updated = label.clone();
                updated.box3d = scaled;
                updated.bbox2d = project_box(k, &scaled, shape)
                    .map(|(bbox, _)| bbox)
                    .unwrap_or(outcome.dst_bbox);
                out_labels[idx] = updated;
                provenance[idx] = ObjectProvenance::Scaled {
                    ratios: [ratios.0, ratios.1, ratios.2],
                    blended: outcome.blended,
                };
            }
            Err(err) => {
                provenance[idx] = ObjectProvenance::Skipped { reason: err.to_string() };
            }
        }
    }
    AugmentedSample { image: out_image, labels: out_labels, provenance }
}
