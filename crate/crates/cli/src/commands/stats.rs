//! `stats` and `ratio`: mean object sizes per class, and the fixed scaling
//! spec taking one population's means onto another's.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use camgen3d::dataio::{parse_label_file, size_stats, SizeStats};
use camgen3d::gcos::stat_ratio;
use camgen3d::geom3d::Label;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{atomic_write, discover, read_text, Needs};

#[derive(Debug, clap::Args, Serialize)]
pub struct StatsArgs {
    /// Dataset root containing label_2/.
    #[arg(long)]
    pub data: PathBuf,
    /// Object class to aggregate.
    #[arg(long, default_value = "Car")]
    pub class: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    match out {
        Some(path) => atomic_write(path, body.as_bytes()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

pub fn run_stats(args: &StatsArgs) -> Result<()> {
    let samples = discover(&args.data, Needs { label: true, ..Needs::default() })?;
    let label_sets: Vec<Vec<Label>> = samples
        .par_iter()
        .map(|sample| {
            let path = sample.require_label()?;
            parse_label_file(&read_text(path)?)
                .with_context(|| format!("parsing {}", path.display()))
        })
        .collect::<Result<_>>()?;
    let stats = size_stats(&label_sets, &args.class)?;
    emit_json(&stats, args.out.as_deref())
}

#[derive(Debug, clap::Args, Serialize)]
pub struct RatioArgs {
    /// Size report JSON of the population being scaled.
    #[arg(long)]
    pub source: PathBuf,
    /// Size report JSON of the population to match.
    #[arg(long)]
    pub target: PathBuf,
    /// Write the spec JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_stats(path: &Path) -> Result<SizeStats> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn run_ratio(args: &RatioArgs) -> Result<()> {
    let source = load_stats(&args.source)?;
    let target = load_stats(&args.target)?;
    let spec = stat_ratio(&source, &target)?;
    emit_json(&spec, args.out.as_deref())
}
