//! Camera-generalized preprocessing and geometry-consistent object scaling
//! for monocular 3D detection data.
//!
//! The crate groups into:
//! - [`camera`]: pinhole intrinsics, field of view, projection, pixel size;
//! - [`imagecore`]: float image buffers, bilinear warping, PNG I/O;
//! - [`pit`]: the position-invariant transform and its per-pixel size map;
//! - [`scaledepth`]: multi-scale resampling and the pixel-size depth codec;
//! - [`geom3d`]: 3D boxes, visible faces, rotated IoU, matching;
//! - [`gcos`]: geometry-consistent object scaling and patch compositing;
//! - [`dataio`]: KITTI-format label/calibration text and size statistics.

pub mod camera;
pub mod dataio;
pub mod gcos;
pub mod geom3d;
pub mod imagecore;
pub mod pit;
pub mod scaledepth;

pub use camera::{ImageShape, Intrinsics};
pub use geom3d::{Box3D, Label};
pub use imagecore::ImageBuffer;
