//! Batch command-line front-end for camera-generalized dataset
//! preprocessing: image-frame transforms, size maps, multi-scale
//! resampling, depth encoding, geometry-consistent object scaling, and the
//! reporting tools around them.

mod commands;
mod dataset;
mod manifest;

use std::process::ExitCode;

use anyhow::{ensure, Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "camgen3d",
    version,
    about = "Camera-generalized dataset preprocessing and object-scaling augmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Warp images into the position-invariant frame.
    Pit(commands::pit::PitArgs),
    /// Invert a previous `pit` run back to the source frame.
    Unpit(commands::pit::UnpitArgs),
    /// Export per-pixel size maps for transformed images.
    WeightMap(commands::weight_map::WeightMapArgs),
    /// Resize images with matching calibration updates.
    Rescale(commands::rescale::RescaleArgs),
    /// Encode or decode the depth column of label files.
    Depth(commands::depth::DepthArgs),
    /// Scale labeled objects with geometry-consistent crop/paste.
    Gcos(commands::gcos::GcosArgs),
    /// Report mean object sizes for one class.
    Stats(commands::stats::StatsArgs),
    /// Turn two size reports into a fixed scaling spec.
    Ratio(commands::stats::RatioArgs),
    /// Match predictions to ground truth and score dimension replacement.
    Analyze(commands::analyze::AnalyzeArgs),
    /// Run the geometric invariant suite and report pass/fail.
    Verify(commands::verify::VerifyArgs),
}

/// Cap the worker pool when `CAMGEN3D_THREADS` is set.
fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("CAMGEN3D_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("CAMGEN3D_THREADS must be a positive integer, got {raw:?}"))?;
    ensure!(threads > 0, "CAMGEN3D_THREADS must be at least 1");
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("worker pool already initialized")?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Pit(args) => commands::pit::run_pit(&args)?,
        Command::Unpit(args) => commands::pit::run_unpit(&args)?,
        Command::WeightMap(args) => commands::weight_map::run(&args)?,
        Command::Rescale(args) => commands::rescale::run(&args)?,
        Command::Depth(args) => commands::depth::run(&args)?,
        Command::Gcos(args) => commands::gcos::run(&args)?,
        Command::Stats(args) => commands::stats::run_stats(&args)?,
        Command::Ratio(args) => commands::stats::run_ratio(&args)?,
        Command::Analyze(args) => commands::analyze::run(&args)?,
        Command::Verify(args) => {
            let all_passed = commands::verify::run(&args)?;
            if !all_passed {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
