//! `depth`: rewrite the depth column of label files through the pixel-size
//! codec, per-sample calibration.

use std::path::PathBuf;

use anyhow::Result;
use camgen3d::dataio::{parse_calib, parse_label_file, serialize_label_file};
use camgen3d::scaledepth::{DepthCodec, DEFAULT_DEPTH_CONSTANT};
use serde::Serialize;
use serde_json::json;

use crate::dataset::{atomic_write, discover, read_bytes, read_text, Needs, CALIB_DIR, LABEL_DIR};
use crate::manifest::{run_batch, FileOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Metric depth in, pixel-size depth out.
    Encode,
    /// Pixel-size depth in, metric depth out.
    Decode,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct DepthArgs {
    /// Dataset root containing label_2/ and calib/.
    #[arg(long)]
    pub data: PathBuf,
    /// Output root; label_2/ is created inside.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub direction: Direction,
    /// Codec constant c.
    #[arg(long, default_value_t = DEFAULT_DEPTH_CONSTANT)]
    pub depth_constant: f64,
}

pub fn run(args: &DepthArgs) -> Result<()> {
    let codec = DepthCodec::new(args.depth_constant)?;
    let samples = discover(&args.data, Needs { label: true, calib: true, ..Needs::default() })?;
    let config = serde_json::to_value(args)?;
    run_batch("depth", config, &args.out, &samples, |_, sample| {
        let k = parse_calib(&read_text(sample.require_calib()?)?)?;
        let mut labels = parse_label_file(&read_text(sample.require_label()?)?)?;
        let mut passthrough = 0usize;
        for label in &mut labels {
            let z = label.box3d.location[2];
            if z <= 0.0 {
                // The codec is defined for positive depth only; anything on
                // or behind the camera plane is carried through untouched.
                passthrough += 1;
                continue;
            }
            label.box3d.location[2] = match args.direction {
                Direction::Encode => codec.encode(z, &k)?,
                Direction::Decode => codec.decode(z, &k)?,
            };
        }
        let rel_label = format!("{LABEL_DIR}/{}.txt", sample.stem);
        atomic_write(&args.out.join(&rel_label), serialize_label_file(&labels).as_bytes())?;
        // Carry the calibration along so the inverse direction can run
        // straight off this output.
        let rel_calib = format!("{CALIB_DIR}/{}.txt", sample.stem);
        atomic_write(&args.out.join(&rel_calib), &read_bytes(sample.require_calib()?)?)?;
        Ok(FileOutcome::ok(&sample.stem)
            .with_output(rel_label)
            .with_output(rel_calib)
            .with_meta(json!({
                "objects": labels.len(),
                "passthrough": passthrough,
            })))
    })?;
    Ok(())
}
