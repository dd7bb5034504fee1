//! Dataset discovery and atomic file output.
//!
//! Batch commands operate over a root directory holding `image_2/*.png`,
//! `label_2/*.txt`, and `calib/*.txt` keyed by shared file stem. Outputs
//! mirror the same layout under an output root and are written atomically
//! (temp file in the destination directory, then rename) so an interrupted
//! run never leaves a partial file behind.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub const IMAGE_DIR: &str = "image_2";
pub const LABEL_DIR: &str = "label_2";
pub const CALIB_DIR: &str = "calib";

/// The files sharing one stem across the dataset subdirectories.
#[derive(Debug, Clone)]
pub struct Sample {
    pub stem: String,
    pub image: Option<PathBuf>,
    pub label: Option<PathBuf>,
    pub calib: Option<PathBuf>,
}

impl Sample {
    /// The sample's image path, or a per-file error naming what's missing.
    pub fn require_image(&self) -> Result<&Path> {
        self.image
            .as_deref()
            .with_context(|| format!("missing {IMAGE_DIR}/{}.png", self.stem))
    }

    pub fn require_label(&self) -> Result<&Path> {
        self.label
            .as_deref()
            .with_context(|| format!("missing {LABEL_DIR}/{}.txt", self.stem))
    }

    pub fn require_calib(&self) -> Result<&Path> {
        self.calib
            .as_deref()
            .with_context(|| format!("missing {CALIB_DIR}/{}.txt", self.stem))
    }
}

/// Which pieces a command keys its sample list on.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub image: bool,
    pub label: bool,
    pub calib: bool,
}

fn scan(dir: &Path, ext: &str) -> Result<BTreeMap<String, PathBuf>> {
    let mut found = BTreeMap::new();
    if !dir.is_dir() {
        return Ok(found);
    }
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(ext) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            found.insert(stem.to_string(), path.clone());
        }
    }
    Ok(found)
}

/// List samples under `root`, sorted by stem.
///
/// Stems are unioned over the subdirectories the command needs; whether each
/// individual piece exists is the per-sample worker's problem, so one
/// missing file shows up as a per-file failure in the manifest instead of
/// aborting the run.
pub fn discover(root: &Path, needs: Needs) -> Result<Vec<Sample>> {
    let images = scan(&root.join(IMAGE_DIR), "png")?;
    let labels = scan(&root.join(LABEL_DIR), "txt")?;
    let calibs = scan(&root.join(CALIB_DIR), "txt")?;
    let mut stems = BTreeSet::new();
    if needs.image {
        stems.extend(images.keys().cloned());
    }
    if needs.label {
        stems.extend(labels.keys().cloned());
    }
    if needs.calib {
        stems.extend(calibs.keys().cloned());
    }
    if stems.is_empty() {
        bail!("no samples found under {}", root.display());
    }
    Ok(stems
        .into_iter()
        .map(|stem| Sample {
            image: images.get(&stem).cloned(),
            label: labels.get(&stem).cloned(),
            calib: calibs.get(&stem).cloned(),
            stem,
        })
        .collect())
}

/// Write `bytes` to `path` atomically, creating parent directories.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path
        .parent()
        .with_context(|| format!("output path {} has no parent", path.display()))?;
    fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent)
        .with_context(|| format!("creating temp file in {}", parent.display()))?;
    tmp.write_all(bytes)
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}
