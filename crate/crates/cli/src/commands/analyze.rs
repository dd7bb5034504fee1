//! `analyze`: match predicted boxes to ground truth by maximum 3D overlap,
//! then measure how the mean matched overlap moves as predicted dimensions
//! are replaced by ground-truth values step by step.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use camgen3d::dataio::parse_label_file;
use camgen3d::geom3d::{iou3d, match_max_iou3d, replace_dims, DimMask, Label, ReplacementStep};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{atomic_write, read_text, LABEL_DIR};

#[derive(Debug, clap::Args, Serialize)]
pub struct AnalyzeArgs {
    /// Directory of predicted label files (flat, or with a label_2/ inside).
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth label files.
    #[arg(long)]
    pub gt: PathBuf,
    /// Minimum 3D IoU for a pair to count as matched.
    #[arg(long, default_value_t = 0.1)]
    pub min_iou: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    files: usize,
    matched: usize,
    unmatched_preds: usize,
    unmatched_gts: usize,
    steps: Vec<ReplacementStep>,
}

const LADDER: [(&str, DimMask); 4] = [
    ("none", DimMask::NONE),
    ("h", DimMask::H),
    ("hw", DimMask::HW),
    ("hwl", DimMask::HWL),
];

/// Accept either a flat directory of `*.txt` or a dataset root with
/// `label_2/` inside it.
fn label_dir(path: &Path) -> PathBuf {
    let nested = path.join(LABEL_DIR);
    if nested.is_dir() {
        nested
    } else {
        path.to_path_buf()
    }
}

fn load_labels_by_stem(dir: &Path) -> Result<BTreeMap<String, Vec<Label>>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        let labels = parse_label_file(&read_text(&path)?)
            .with_context(|| format!("parsing {}", path.display()))?;
        out.insert(stem.to_string(), labels);
    }
    Ok(out)
}

pub fn run(args: &AnalyzeArgs) -> Result<()> {
    let preds = load_labels_by_stem(&label_dir(&args.pred))?;
    let gts = load_labels_by_stem(&label_dir(&args.gt))?;
    let stems: Vec<&String> = preds.keys().filter(|s| gts.contains_key(*s)).collect();
    if stems.is_empty() {
        bail!("no file stems shared between {} and {}", args.pred.display(), args.gt.display());
    }

    // Per file: match once on the raw predictions, then score every ladder
    // step over the same pairs. Sums are aggregated across files so the
    // report means are per matched object, not per file.
    struct FileTally {
        matched: usize,
        unmatched_preds: usize,
        unmatched_gts: usize,
        sums: [f64; LADDER.len()],
    }
    let tallies: Vec<FileTally> = stems
        .par_iter()
        .map(|stem| {
            let (p, g) = (&preds[*stem], &gts[*stem]);
            let matching = match_max_iou3d(p, g, args.min_iou);
            let mut sums = [0.0; LADDER.len()];
            for pair in &matching.pairs {
                let (pred, gt) = (&p[pair.pred].box3d, &g[pair.gt].box3d);
                for (slot, (_, mask)) in sums.iter_mut().zip(LADDER) {
                    *slot += iou3d(&replace_dims(pred, gt, mask), gt);
                }
            }
            FileTally {
                matched: matching.pairs.len(),
                unmatched_preds: matching.unmatched_preds.len(),
                unmatched_gts: matching.unmatched_gts.len(),
                sums,
            }
        })
        .collect();

    let matched: usize = tallies.iter().map(|t| t.matched).sum();
    if matched == 0 {
        bail!("no prediction matched ground truth at min_iou = {}", args.min_iou);
    }
    let mut steps = Vec::with_capacity(LADDER.len());
    for (i, (name, _)) in LADDER.iter().enumerate() {
        let total: f64 = tallies.iter().map(|t| t.sums[i]).sum();
        steps.push(ReplacementStep { dims: name.to_string(), mean_iou3d: total / matched as f64 });
    }
    let report = AnalyzeReport {
        files: stems.len(),
        matched,
        unmatched_preds: tallies.iter().map(|t| t.unmatched_preds).sum(),
        unmatched_gts: tallies.iter().map(|t| t.unmatched_gts).sum(),
        steps,
    };
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    match &args.out {
        Some(path) => atomic_write(path, body.as_bytes()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
