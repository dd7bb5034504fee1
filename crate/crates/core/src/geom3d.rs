//! 3D box geometry in the camera frame: corners, bird's-eye-view footprints,
//! visible-face classification, rotated IoU via convex polygon clipping, 3D
//! IoU, max-IoU matching, and stepwise dimension replacement.
//!
//! Frame convention: x right, y down, z forward; yaw rotates about y; the
//! bird's-eye view is the x-z plane with the camera at the origin.

use crate::camera::{project, ImageShape, Intrinsics};
use serde::Serialize;

/// Closest allowed corner depth when projecting a box into an image.
pub const NEAR_PLANE: f64 = 0.1;

const VISIBILITY_EPS: f64 = 1e-9;

/// Errors from box construction, classification, and projection.
#[derive(Debug, thiserror::Error)]
pub enum Geom3dError {
    #[error("box dimensions must be positive and finite, got h={h} w={w} l={l}")]
    InvalidDims { h: f64, w: f64, l: f64 },
    #[error("box location and yaw must be finite")]
    NonFinite,
    #[error("cannot classify visible faces: {visible} faces pass the visibility test")]
    Visibility { visible: usize },
    #[error("box corner at z={z} is behind the near plane ({NEAR_PLANE} m)")]
    BehindNearPlane { z: f64 },
    #[error("projected box lies entirely outside the image")]
    OutsideImage,
}

/// Box dimensions in meters: height, width, length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dims {
    pub h: f64,
    pub w: f64,
    pub l: f64,
}

/// An oriented 3D box. `location` is the bottom-face center (the point on
/// the ground under the box center); `l` runs along the box x axis rotated
/// by `yaw`, `w` along the box z axis, `h` upward (decreasing camera y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub location: [f64; 3],
    pub dims: Dims,
    pub yaw: f64,
}

impl Box3D {
    /// Validates dimensions and normalizes yaw into `(-π, π]`.
    pub fn new(location: [f64; 3], dims: Dims, yaw: f64) -> Result<Self, Geom3dError> {
        if !(dims.h > 0.0 && dims.w > 0.0 && dims.l > 0.0)
            || !(dims.h.is_finite() && dims.w.is_finite() && dims.l.is_finite())
        {
            return Err(Geom3dError::InvalidDims { h: dims.h, w: dims.w, l: dims.l });
        }
        if !location.iter().all(|c| c.is_finite()) || !yaw.is_finite() {
            return Err(Geom3dError::NonFinite);
        }
        // In-range yaw passes through untouched so parsed values roundtrip
        // bit-exactly.
        let yaw = if yaw > -std::f64::consts::PI && yaw <= std::f64::consts::PI {
            yaw
        } else {
            let t = yaw.rem_euclid(std::f64::consts::TAU);
            if t > std::f64::consts::PI {
                t - std::f64::consts::TAU
            } else {
                t
            }
        };
        Ok(Self { location, dims, yaw })
    }

    pub fn volume(&self) -> f64 {
        self.dims.h * self.dims.w * self.dims.l
    }

    /// Vertical extent as a camera-frame y interval `[top, bottom]`.
    pub fn y_interval(&self) -> (f64, f64) {
        (self.location[1] - self.dims.h, self.location[1])
    }
}

/// A point in the bird's-eye view (x-z) plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BevPoint {
    pub x: f64,
    pub z: f64,
}

/// An axis-aligned 2D box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BBox2D {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox2D {
    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }
}

/// One object annotation in the common label format.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub class: String,
    pub truncated: f64,
    pub occluded: i64,
    pub alpha: f64,
    pub bbox2d: BBox2D,
    pub box3d: Box3D,
    pub score: Option<f64>,
}

impl Label {
    /// Label with neutral metadata, for synthetic scenes and tests.
    pub fn from_box(class: &str, box3d: Box3D) -> Self {
        Self {
            class: class.to_string(),
            truncated: 0.0,
            occluded: 0,
            alpha: 0.0,
            bbox2d: BBox2D { x1: 0.0, y1: 0.0, x2: 1.0, y2: 1.0 },
            box3d,
            score: None,
        }
    }
}

/// Unit vectors of the box footprint in the bird's-eye view: the direction
/// the length runs along, and the direction the width runs along.
pub fn bev_axes(yaw: f64) -> (BevPoint, BevPoint) {
    let (s, c) = yaw.sin_cos();
    (BevPoint { x: c, z: -s }, BevPoint { x: s, z: c })
}

/// Footprint corner signs along (length axis, width axis), in the polygon
/// order used by [`bev_rect`].
pub const CORNER_SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];

/// Which box axis the face behind footprint edge `i` offsets along, and the
/// sign of that offset. Edge `i` joins corners `i` and `i+1 mod 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceAxis {
    AlongLength,
    AlongWidth,
}

pub fn edge_face(edge: usize) -> (FaceAxis, f64) {
    match edge {
        0 => (FaceAxis::AlongWidth, 1.0),
        1 => (FaceAxis::AlongLength, -1.0),
        2 => (FaceAxis::AlongWidth, -1.0),
        _ => (FaceAxis::AlongLength, 1.0),
    }
}

/// Counterclockwise footprint rectangle of a box in the x-z plane.
pub fn bev_rect(b: &Box3D) -> [BevPoint; 4] {
    let (el, ew) = bev_axes(b.yaw);
    let c = BevPoint { x: b.location[0], z: b.location[2] };
    let (hl, hw) = (b.dims.l / 2.0, b.dims.w / 2.0);
    CORNER_SIGNS.map(|(a, bb)| BevPoint {
        x: c.x + a * hl * el.x + bb * hw * ew.x,
        z: c.z + a * hl * el.z + bb * hw * ew.z,
    })
}

/// The eight box corners: footprint order on the bottom face (y = c_y),
/// then the same order on the top face (y = c_y − h).
pub fn corners(b: &Box3D) -> [[f64; 3]; 8] {
    let rect = bev_rect(b);
    let mut out = [[0.0; 3]; 8];
    for (i, p) in rect.iter().enumerate() {
        out[i] = [p.x, b.location[1], p.z];
        out[i + 4] = [p.x, b.location[1] - b.dims.h, p.z];
    }
    out
}

/// Which vertical faces the camera at the origin sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    /// Exactly one face visible; holds the footprint edge index.
    OneFace { edge: usize },
    /// Two adjacent faces visible; holds the index of their shared footprint
    /// corner, which is the corner nearest the camera.
    TwoFaces { corner: usize },
}

/// Classify a box by its faces visible from the origin. A face is visible
/// iff its outward footprint normal points toward the camera by more than a
/// small tie-break epsilon; edge-on faces count as not visible.
pub fn visible_faces(b: &Box3D) -> Result<Visibility, Geom3dError> {
    let rect = bev_rect(b);
    let mut visible = [false; 4];
    let mut count = 0;
    for i in 0..4 {
        let a = rect[i];
        let q = rect[(i + 1) % 4];
        let mid = BevPoint { x: (a.x + q.x) / 2.0, z: (a.z + q.z) / 2.0 };
        // Outward normal of a counterclockwise edge (dx, dz) is (dz, -dx).
        let n = BevPoint { x: q.z - a.z, z: -(q.x - a.x) };
        if n.x * -mid.x + n.z * -mid.z > VISIBILITY_EPS {
            visible[i] = true;
            count += 1;
        }
    }
    match count {
        1 => Ok(Visibility::OneFace { edge: visible.iter().position(|&v| v).unwrap() }),
        2 => {
            for i in 0..4 {
                if visible[i] && visible[(i + 1) % 4] {
                    return Ok(Visibility::TwoFaces { corner: (i + 1) % 4 });
                }
            }
            Err(Geom3dError::Visibility { visible: count })
        }
        n => Err(Geom3dError::Visibility { visible: n }),
    }
}

/// Project all eight corners and return their pixel-space hull clipped to
/// the image, plus whether it fit without clipping.
pub fn project_box(
    k: &Intrinsics,
    b: &Box3D,
    shape: ImageShape,
) -> Result<(BBox2D, bool), Geom3dError> {
    let mut x1 = f64::INFINITY;
    let mut y1 = f64::INFINITY;
    let mut x2 = f64::NEG_INFINITY;
    let mut y2 = f64::NEG_INFINITY;
    for corner in corners(b) {
        if corner[2] <= NEAR_PLANE {
            return Err(Geom3dError::BehindNearPlane { z: corner[2] });
        }
        let (u, v) = project(k, corner).expect("corner is in front of the camera");
        x1 = x1.min(u);
        y1 = y1.min(v);
        x2 = x2.max(u);
        y2 = y2.max(v);
    }
    let (w, h) = (f64::from(shape.width), f64::from(shape.height));
    let clipped = BBox2D {
        x1: x1.max(0.0),
        y1: y1.max(0.0),
        x2: x2.min(w),
        y2: y2.min(h),
    };
    if clipped.x1 >= clipped.x2 || clipped.y1 >= clipped.y2 {
        return Err(Geom3dError::OutsideImage);
    }
    let fully_inside = x1 >= 0.0 && y1 >= 0.0 && x2 <= w && y2 <= h;
    Ok((clipped, fully_inside))
}

fn polygon_area(poly: &[BevPoint]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        acc += a.x * b.z - b.x * a.z;
    }
    (acc / 2.0).abs()
}

fn edge_distance(a: BevPoint, b: BevPoint, p: BevPoint) -> f64 {
    (b.x - a.x) * (p.z - a.z) - (b.z - a.z) * (p.x - a.x)
}

/// Sutherland-Hodgman clip of a convex subject polygon by a counterclockwise
/// convex clip polygon.
fn clip_convex(subject: &[BevPoint], clip: &[BevPoint; 4]) -> Vec<BevPoint> {
    let mut output = subject.to_vec();
    for i in 0..4 {
        let a = clip[i];
        let b = clip[(i + 1) % 4];
        let input = std::mem::take(&mut output);
        if input.is_empty() {
            break;
        }
        for j in 0..input.len() {
            let prev = input[(j + input.len() - 1) % input.len()];
            let cur = input[j];
            let dp = edge_distance(a, b, prev);
            let dc = edge_distance(a, b, cur);
            // >= 0 is inside; points on the clip edge are kept so identical
            // rectangles clip to themselves exactly.
            if dc >= 0.0 {
                if dp < 0.0 {
                    output.push(lerp_at_zero(prev, cur, dp, dc));
                }
                output.push(cur);
            } else if dp >= 0.0 {
                output.push(lerp_at_zero(prev, cur, dp, dc));
            }
        }
    }
    output
}

fn lerp_at_zero(p: BevPoint, q: BevPoint, dp: f64, dq: f64) -> BevPoint {
    let t = dp / (dp - dq);
    BevPoint { x: p.x + t * (q.x - p.x), z: p.z + t * (q.z - p.z) }
}

/// Intersection area of the footprints of two boxes.
pub fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    let ra = bev_rect(a);
    let rb = bev_rect(b);
    polygon_area(&clip_convex(&ra, &rb))
}

/// Rotated-rectangle IoU of two box footprints.
pub fn bev_iou(a: &Box3D, b: &Box3D) -> f64 {
    let inter = bev_intersection_area(a, b);
    let area_a = polygon_area(&bev_rect(a));
    let area_b = polygon_area(&bev_rect(b));
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// 3D IoU: footprint intersection times vertical overlap, over the volume
/// union.
pub fn iou3d(a: &Box3D, b: &Box3D) -> f64 {
    let (a_top, a_bot) = a.y_interval();
    let (b_top, b_bot) = b.y_interval();
    let y_overlap = (a_bot.min(b_bot) - a_top.max(b_top)).max(0.0);
    let inter = bev_intersection_area(a, b) * y_overlap;
    // Volumes come from the same footprint-area computation as the
    // intersection so identical boxes land on exactly 1.0.
    let vol_a = polygon_area(&bev_rect(a)) * a.dims.h;
    let vol_b = polygon_area(&bev_rect(b)) * b.dims.h;
    let union = vol_a + vol_b - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// One matched prediction/ground-truth pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub pred: usize,
    pub gt: usize,
    pub iou: f64,
}

/// Result of greedy one-to-one matching.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    pub unmatched_preds: Vec<usize>,
    pub unmatched_gts: Vec<usize>,
}

/// Greedily associate predictions to ground truth by descending 3D IoU,
/// one-to-one, keeping pairs at or above `min_iou`. Ties break toward the
/// lower prediction index, then the lower ground-truth index.
pub fn match_max_iou3d(preds: &[Label], gts: &[Label], min_iou: f64) -> MatchResult {
    let mut candidates = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        for (j, g) in gts.iter().enumerate() {
            let iou = iou3d(&p.box3d, &g.box3d);
            if iou >= min_iou && iou > 0.0 {
                candidates.push(MatchPair { pred: i, gt: j, iou });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.iou
            .partial_cmp(&a.iou)
            .unwrap()
            .then(a.pred.cmp(&b.pred))
            .then(a.gt.cmp(&b.gt))
    });
    let mut used_pred = vec![false; preds.len()];
    let mut used_gt = vec![false; gts.len()];
    let mut result = MatchResult::default();
    for c in candidates {
        if !used_pred[c.pred] && !used_gt[c.gt] {
            used_pred[c.pred] = true;
            used_gt[c.gt] = true;
            result.pairs.push(c);
        }
    }
    result.unmatched_preds = (0..preds.len()).filter(|&i| !used_pred[i]).collect();
    result.unmatched_gts = (0..gts.len()).filter(|&j| !used_gt[j]).collect();
    result
}

/// Which box dimensions to copy from ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DimMask {
    pub h: bool,
    pub w: bool,
    pub l: bool,
}

impl DimMask {
    pub const NONE: Self = Self { h: false, w: false, l: false };
    pub const H: Self = Self { h: true, w: false, l: false };
    pub const HW: Self = Self { h: true, w: true, l: false };
    pub const HWL: Self = Self { h: true, w: true, l: true };
}

/// Copy the selected dimensions from `gt` into `pred`, keeping the
/// prediction's location and yaw. The bottom-anchored location means a
/// height swap leaves the ground plane contact fixed.
pub fn replace_dims(pred: &Box3D, gt: &Box3D, which: DimMask) -> Box3D {
    Box3D {
        location: pred.location,
        dims: Dims {
            h: if which.h { gt.dims.h } else { pred.dims.h },
            w: if which.w { gt.dims.w } else { pred.dims.w },
            l: if which.l { gt.dims.l } else { pred.dims.l },
        },
        yaw: pred.yaw,
    }
}

/// Mean matched 3D IoU after one replacement step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplacementStep {
    pub dims: String,
    pub mean_iou3d: f64,
}

/// Stepwise dimension-replacement report: how much of the prediction error
/// the size estimates account for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplacementAnalysis {
    pub matched: usize,
    pub unmatched_preds: usize,
    pub unmatched_gts: usize,
    pub steps: Vec<ReplacementStep>,
}

/// Match once, then report mean matched 3D IoU for the replacement ladder
/// none → h → h,w → h,w,l.
pub fn dim_replacement_analysis(
    preds: &[Label],
    gts: &[Label],
    min_iou: f64,
) -> ReplacementAnalysis {
    let matching = match_max_iou3d(preds, gts, min_iou);
    let ladder = [
        ("none", DimMask::NONE),
        ("h", DimMask::H),
        ("hw", DimMask::HW),
        ("hwl", DimMask::HWL),
    ];
    let steps = ladder
        .iter()
        .map(|(name, mask)| {
            let mean = if matching.pairs.is_empty() {
                0.0
            } else {
                matching
                    .pairs
                    .iter()
                    .map(|p| {
                        let replaced =
                            replace_dims(&preds[p.pred].box3d, &gts[p.gt].box3d, *mask);
                        iou3d(&replaced, &gts[p.gt].box3d)
                    })
                    .sum::<f64>()
                    / matching.pairs.len() as f64
            };
            ReplacementStep { dims: (*name).to_string(), mean_iou3d: mean }
        })
        .collect();
    ReplacementAnalysis {
        matched: matching.pairs.len(),
        unmatched_preds: matching.unmatched_preds.len(),
        unmatched_gts: matching.unmatched_gts.len(),
        steps,
    }
}
