//! `rescale`: multi-scale resampling with calibration updated so the field
//! of view is preserved.

use std::path::PathBuf;

use anyhow::{ensure, Result};
use camgen3d::dataio::{parse_calib, parse_label_file, serialize_calib, serialize_label_file};
use camgen3d::geom3d::BBox2D;
use camgen3d::imagecore::ImageBuffer;
use camgen3d::scaledepth::rescale_sample;
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::commands::sample_rng;
use crate::dataset::{atomic_write, discover, read_text, Needs, CALIB_DIR, IMAGE_DIR, LABEL_DIR};
use crate::manifest::{run_batch, FileOutcome};

#[derive(Debug, clap::Args, Serialize)]
pub struct RescaleArgs {
    /// Dataset root containing image_2/ and calib/ (label_2/ optional).
    #[arg(long)]
    pub data: PathBuf,
    /// Output root.
    #[arg(long)]
    pub out: PathBuf,
    /// Lower bound of the per-sample scale ratio.
    #[arg(long, default_value_t = 0.5)]
    pub scale_min: f64,
    /// Upper bound of the per-sample scale ratio.
    #[arg(long, default_value_t = 1.4)]
    pub scale_max: f64,
    /// Draw the vertical ratio independently of the horizontal one.
    #[arg(long)]
    pub anisotropic: bool,
    /// Master seed for the per-sample ratio draws.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: &RescaleArgs) -> Result<()> {
    ensure!(
        args.scale_min > 0.0 && args.scale_min <= args.scale_max,
        "scale range must satisfy 0 < min <= max, got [{}, {}]",
        args.scale_min,
        args.scale_max
    );
    let samples = discover(&args.data, Needs { image: true, calib: true, ..Needs::default() })?;
    let config = serde_json::to_value(args)?;
    run_batch("rescale", config, &args.out, &samples, |index, sample| {
        let mut rng = sample_rng(args.seed, index);
        let rx = rng.random_range(args.scale_min..=args.scale_max);
        let ry = if args.anisotropic { rng.random_range(args.scale_min..=args.scale_max) } else { rx };

        let img = ImageBuffer::load_png(sample.require_image()?)?;
        let k = parse_calib(&read_text(sample.require_calib()?)?)?;
        let scaled = rescale_sample(&img, &k, rx, ry)?;

        let rel_img = format!("{IMAGE_DIR}/{}.png", sample.stem);
        atomic_write(&args.out.join(&rel_img), &scaled.image.encode_png()?)?;
        let rel_calib = format!("{CALIB_DIR}/{}.txt", sample.stem);
        atomic_write(&args.out.join(&rel_calib), serialize_calib(&scaled.k).as_bytes())?;
        let mut outcome = FileOutcome::ok(&sample.stem).with_output(rel_img).with_output(rel_calib);

        // 2D boxes live in pixel space, so they scale with the image; the 3D
        // scene itself is what the calibration update keeps unchanged.
        if let Some(label_path) = &sample.label {
            let mut labels = parse_label_file(&read_text(label_path)?)?;
            for label in &mut labels {
                let b = label.bbox2d;
                label.bbox2d =
                    BBox2D { x1: b.x1 * rx, y1: b.y1 * ry, x2: b.x2 * rx, y2: b.y2 * ry };
            }
            let rel_label = format!("{LABEL_DIR}/{}.txt", sample.stem);
            atomic_write(&args.out.join(&rel_label), serialize_label_file(&labels).as_bytes())?;
            outcome = outcome.with_output(rel_label);
        }

        Ok(outcome.with_meta(json!({
            "rx": rx,
            "ry": ry,
            "width": scaled.image.width(),
            "height": scaled.image.height(),
        })))
    })?;
    Ok(())
}
