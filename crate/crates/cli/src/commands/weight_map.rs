//! `weight-map`: export per-pixel size maps for transformed images.

use std::path::PathBuf;

use anyhow::Result;
use camgen3d::dataio::parse_calib;
use camgen3d::imagecore::ImageBuffer;
use camgen3d::pit::{pixel_size_map, PitFrame};
use camgen3d::ImageShape;
use serde::Serialize;
use serde_json::json;

use crate::dataset::{atomic_write, discover, read_text, Needs};
use crate::manifest::{run_batch, FileOutcome};

pub const MAP_DIR: &str = "weight_map";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    /// Normalized single-channel PNG plus a JSON sidecar with the value range.
    Png,
    /// Raw little-endian f64 values behind a one-line JSON header.
    Raw,
    /// Both of the above.
    Both,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct WeightMapArgs {
    /// Dataset root containing image_2/ and calib/.
    #[arg(long)]
    pub data: PathBuf,
    /// Output root; weight_map/ is created inside.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ExportFormat::Png)]
    pub format: ExportFormat,
}

pub fn run(args: &WeightMapArgs) -> Result<()> {
    let samples = discover(&args.data, Needs { image: true, calib: true, ..Needs::default() })?;
    let config = serde_json::to_value(args)?;
    run_batch("weight-map", config, &args.out, &samples, |_, sample| {
        let img = ImageBuffer::load_png(sample.require_image()?)?;
        let k = parse_calib(&read_text(sample.require_calib()?)?)?;
        let frame = PitFrame::new(k, ImageShape::new(img.width(), img.height()));
        let map = pixel_size_map(&frame)?;

        let mut outcome = FileOutcome::ok(&sample.stem);
        if matches!(args.format, ExportFormat::Png | ExportFormat::Both) {
            let (png, header) = map.encode_png()?;
            let rel_png = format!("{MAP_DIR}/{}.png", sample.stem);
            atomic_write(&args.out.join(&rel_png), &png)?;
            let mut sidecar = serde_json::to_string_pretty(&header)?;
            sidecar.push('\n');
            let rel_json = format!("{MAP_DIR}/{}.json", sample.stem);
            atomic_write(&args.out.join(&rel_json), sidecar.as_bytes())?;
            outcome = outcome.with_output(rel_png).with_output(rel_json);
        }
        if matches!(args.format, ExportFormat::Raw | ExportFormat::Both) {
            let rel_bin = format!("{MAP_DIR}/{}.bin", sample.stem);
            atomic_write(&args.out.join(&rel_bin), &map.encode_raw())?;
            outcome = outcome.with_output(rel_bin);
        }
        let header = map.header();
        Ok(outcome.with_meta(json!({
            "width": header.width,
            "height": header.height,
            "min": header.min,
            "max": header.max,
        })))
    })?;
    Ok(())
}
