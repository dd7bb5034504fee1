//! `pit` and `unpit`: warp image directories into the position-invariant
//! frame and back, using each sample's own calibration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use camgen3d::dataio::parse_calib;
use camgen3d::imagecore::ImageBuffer;
use camgen3d::pit::{pit_unwarp_image, pit_warp_image, PitFrame};
use camgen3d::ImageShape;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dataset::{atomic_write, discover, read_bytes, read_text, Needs, CALIB_DIR, IMAGE_DIR};
use crate::manifest::{run_batch, FileOutcome, MANIFEST_NAME};

#[derive(Debug, clap::Args, Serialize)]
pub struct PitArgs {
    /// Dataset root containing image_2/ and calib/.
    #[arg(long)]
    pub data: PathBuf,
    /// Output root; image_2/ and calib/ are created inside.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_pit(args: &PitArgs) -> Result<()> {
    let samples = discover(&args.data, Needs { image: true, calib: true, ..Needs::default() })?;
    let config = serde_json::to_value(args)?;
    run_batch("pit", config, &args.out, &samples, |_, sample| {
        let img = ImageBuffer::load_png(sample.require_image()?)?;
        let k = parse_calib(&read_text(sample.require_calib()?)?)?;
        let frame = PitFrame::new(k, ImageShape::new(img.width(), img.height()));
        let warped = pit_warp_image(&frame, &img)?;

        let rel_img = format!("{IMAGE_DIR}/{}.png", sample.stem);
        atomic_write(&args.out.join(&rel_img), &warped.encode_png()?)?;
        // Calibration is copied verbatim: the transform is keyed off it and
        // the inverse run needs the identical intrinsics.
        let rel_calib = format!("{CALIB_DIR}/{}.txt", sample.stem);
        atomic_write(&args.out.join(&rel_calib), &read_bytes(sample.require_calib()?)?)?;

        Ok(FileOutcome::ok(&sample.stem)
            .with_output(rel_img)
            .with_output(rel_calib)
            .with_meta(json!({
                "src_width": img.width(),
                "src_height": img.height(),
                "out_width": warped.width(),
                "out_height": warped.height(),
            })))
    })?;
    Ok(())
}

#[derive(Debug, clap::Args, Serialize)]
pub struct UnpitArgs {
    /// Root produced by a forward `pit` run (image_2/, calib/, manifest.json).
    #[arg(long)]
    pub data: PathBuf,
    /// Output root for the recovered images.
    #[arg(long)]
    pub out: PathBuf,
    /// Source image width before the forward transform; defaults to the
    /// per-file value recorded in the forward run's manifest.
    #[arg(long, requires = "src_height")]
    pub src_width: Option<u32>,
    /// Source image height before the forward transform.
    #[arg(long, requires = "src_width")]
    pub src_height: Option<u32>,
}

/// Source shapes recorded by the forward run, keyed by stem.
fn shapes_from_manifest(data_root: &Path) -> Result<BTreeMap<String, (u32, u32)>> {
    let path = data_root.join(MANIFEST_NAME);
    if !path.is_file() {
        bail!(
            "{} not found; pass --src-width/--src-height or point --data at a `pit` output",
            path.display()
        );
    }
    let value: Value = serde_json::from_str(&read_text(&path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    if value["command"] != "pit" {
        bail!("{} records a `{}` run, not `pit`", path.display(), value["command"]);
    }
    let mut shapes = BTreeMap::new();
    for file in value["files"].as_array().into_iter().flatten() {
        let (Some(stem), Some(w), Some(h)) = (
            file["stem"].as_str(),
            file["meta"]["src_width"].as_u64(),
            file["meta"]["src_height"].as_u64(),
        ) else {
            continue;
        };
        shapes.insert(stem.to_string(), (w as u32, h as u32));
    }
    Ok(shapes)
}

pub fn run_unpit(args: &UnpitArgs) -> Result<()> {
    let samples = discover(&args.data, Needs { image: true, calib: true, ..Needs::default() })?;
    let fixed = args.src_width.zip(args.src_height);
    let recorded = if fixed.is_some() { BTreeMap::new() } else { shapes_from_manifest(&args.data)? };
    let config = serde_json::to_value(args)?;
    run_batch("unpit", config, &args.out, &samples, |_, sample| {
        let (src_w, src_h) = fixed
            .or_else(|| recorded.get(&sample.stem).copied())
            .with_context(|| format!("no source shape recorded for {}", sample.stem))?;
        let img = ImageBuffer::load_png(sample.require_image()?)?;
        let k = parse_calib(&read_text(sample.require_calib()?)?)?;
        let frame = PitFrame::new(k, ImageShape::new(src_w, src_h));
        let expect = frame.output_shape();
        if (img.width(), img.height()) != (expect.width, expect.height) {
            bail!(
                "image is {}x{} but a {}x{} source transforms to {}x{}",
                img.width(),
                img.height(),
                src_w,
                src_h,
                expect.width,
                expect.height
            );
        }
        let restored = pit_unwarp_image(&frame, &img)?;

        let rel_img = format!("{IMAGE_DIR}/{}.png", sample.stem);
        atomic_write(&args.out.join(&rel_img), &restored.encode_png()?)?;
        let rel_calib = format!("{CALIB_DIR}/{}.txt", sample.stem);
        atomic_write(&args.out.join(&rel_calib), &read_bytes(sample.require_calib()?)?)?;

        Ok(FileOutcome::ok(&sample.stem)
            .with_output(rel_img)
            .with_output(rel_calib)
            .with_meta(json!({ "src_width": src_w, "src_height": src_h })))
    })?;
    Ok(())
}
