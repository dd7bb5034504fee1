//! `gcos`: geometry-consistent object scaling over image+label pairs.

use std::path::PathBuf;

use anyhow::{bail, Result};
use camgen3d::dataio::{parse_calib, parse_label_file, serialize_label_file};
use camgen3d::gcos::{gcos_augment, BlendMode, ObjectProvenance, ScaleSpec};
use camgen3d::imagecore::ImageBuffer;
use serde::Serialize;
use serde_json::json;

use crate::commands::sample_rng;
use crate::dataset::{
    atomic_write, discover, read_bytes, read_text, Needs, CALIB_DIR, IMAGE_DIR, LABEL_DIR,
};
use crate::manifest::{run_batch, FileOutcome};

pub const PROVENANCE_DIR: &str = "provenance";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Fixed per-dimension ratios, from --ratios.
    Stat,
    /// Per-object ratios drawn i.i.d. per dimension from --random-range.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendChoice {
    On,
    Off,
    Random,
}

impl From<BlendChoice> for BlendMode {
    fn from(choice: BlendChoice) -> Self {
        match choice {
            BlendChoice::On => BlendMode::Feather,
            BlendChoice::Off => BlendMode::Off,
            BlendChoice::Random => BlendMode::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Triple(pub [f64; 3]);

fn parse_triple(s: &str) -> Result<Triple, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected h,w,l — got {} values", parts.len()));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part.trim().parse::<f64>().map_err(|e| format!("bad number {part:?}: {e}"))?;
    }
    Ok(Triple(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pair(pub f64, pub f64);

fn parse_pair(s: &str) -> Result<Pair, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected lo,hi — got {} values", parts.len()));
    }
    let lo = parts[0].trim().parse::<f64>().map_err(|e| format!("bad number: {e}"))?;
    let hi = parts[1].trim().parse::<f64>().map_err(|e| format!("bad number: {e}"))?;
    Ok(Pair(lo, hi))
}

#[derive(Debug, clap::Args, Serialize)]
pub struct GcosArgs {
    /// Dataset root containing image_2/, label_2/, and calib/.
    #[arg(long)]
    pub data: PathBuf,
    /// Output root.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Fixed h,w,l ratios (required with --mode stat).
    #[arg(long, value_parser = parse_triple)]
    pub ratios: Option<Triple>,
    /// lo,hi interval for --mode random, applied per dimension.
    #[arg(long, value_parser = parse_pair, default_value = "0.9,1.1")]
    pub random_range: Pair,
    /// Master seed; each sample derives its own stream from seed + index.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Patch boundary blending: always, never, or coin-flip per patch.
    #[arg(long, value_enum, default_value_t = BlendChoice::Random)]
    pub blend: BlendChoice,
}

fn build_spec(args: &GcosArgs) -> Result<ScaleSpec> {
    match args.mode {
        Mode::Stat => {
            let Some(Triple([h, w, l])) = args.ratios else {
                bail!("--ratios h,w,l is required with --mode stat");
            };
            Ok(ScaleSpec::stat(h, w, l)?)
        }
        Mode::Random => {
            let Pair(lo, hi) = args.random_range;
            Ok(ScaleSpec::random_uniform(lo, hi)?)
        }
    }
}

pub fn run(args: &GcosArgs) -> Result<()> {
    let spec = build_spec(args)?;
    let blend: BlendMode = args.blend.into();
    let samples = discover(
        &args.data,
        Needs { image: true, label: true, calib: true },
    )?;
    let config = serde_json::to_value(args)?;
    run_batch("gcos", config, &args.out, &samples, |index, sample| {
        let image = ImageBuffer::load_png(sample.require_image()?)?;
        let k = parse_calib(&read_text(sample.require_calib()?)?)?;
        let labels = parse_label_file(&read_text(sample.require_label()?)?)?;
        let mut rng = sample_rng(args.seed, index);
        let augmented = gcos_augment(&image, &k, &labels, &spec, blend, &mut rng);

        let rel_img = format!("{IMAGE_DIR}/{}.png", sample.stem);
        atomic_write(&args.out.join(&rel_img), &augmented.image.encode_png()?)?;
        let rel_label = format!("{LABEL_DIR}/{}.txt", sample.stem);
        atomic_write(
            &args.out.join(&rel_label),
            serialize_label_file(&augmented.labels).as_bytes(),
        )?;
        let rel_calib = format!("{CALIB_DIR}/{}.txt", sample.stem);
        atomic_write(&args.out.join(&rel_calib), &read_bytes(sample.require_calib()?)?)?;
        let mut provenance = serde_json::to_string_pretty(&augmented.provenance)?;
        provenance.push('\n');
        let rel_prov = format!("{PROVENANCE_DIR}/{}.json", sample.stem);
        atomic_write(&args.out.join(&rel_prov), provenance.as_bytes())?;

        let scaled = augmented
            .provenance
            .iter()
            .filter(|p| matches!(p, ObjectProvenance::Scaled { .. }))
            .count();
        Ok(FileOutcome::ok(&sample.stem)
            .with_output(rel_img)
            .with_output(rel_label)
            .with_output(rel_calib)
            .with_output(rel_prov)
            .with_meta(json!({
                "objects": labels.len(),
                "scaled": scaled,
                "skipped": labels.len() - scaled,
            })))
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_and_pair_parsing() {
        assert_eq!(parse_triple("0.8,0.9,1.1").unwrap(), Triple([0.8, 0.9, 1.1]));
        assert_eq!(parse_triple(" 1 , 1 , 1 ").unwrap(), Triple([1.0, 1.0, 1.0]));
        assert!(parse_triple("1,2").is_err());
        assert!(parse_triple("a,b,c").is_err());
        assert_eq!(parse_pair("0.9,1.1").unwrap(), Pair(0.9, 1.1));
        assert!(parse_pair("0.9").is_err());
    }

    #[test]
    fn stat_mode_requires_ratios() {
        let args = GcosArgs {
            data: PathBuf::new(),
            out: PathBuf::new(),
            mode: Mode::Stat,
            ratios: None,
            random_range: Pair(0.9, 1.1),
            seed: 0,
            blend: BlendChoice::Off,
        };
        assert!(build_spec(&args).is_err());
        let args = GcosArgs { ratios: Some(Triple([0.8, 0.9, 1.0])), ..args };
        assert!(build_spec(&args).is_ok());
    }

    #[test]
    fn random_mode_uses_the_interval() {
        let args = GcosArgs {
            data: PathBuf::new(),
            out: PathBuf::new(),
            mode: Mode::Random,
            ratios: None,
            random_range: Pair(0.7, 1.3),
            seed: 0,
            blend: BlendChoice::Off,
        };
        assert!(build_spec(&args).is_ok());
        // Interval outside the sanity bounds is rejected up front.
        let args = GcosArgs { random_range: Pair(0.05, 1.0), ..args };
        assert!(build_spec(&args).is_err());
    }
}
