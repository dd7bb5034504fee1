//! Run manifests: a JSON record of what a command did with every input.
//!
//! Each batch command writes `manifest.json` into its output root. The
//! manifest snapshots the full configuration (enough to repeat the run),
//! lists exactly one outcome per discovered sample in stem order, and keeps
//! wall-clock timing in a separate field so determinism checks can compare
//! everything else byte for byte.

use std::fmt::Display;
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::dataset::{atomic_write, Sample};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub files: Vec<FileOutcome>,
    pub timing: Timing,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed,
}

/// What happened to one input sample.
#[derive(Debug, Clone, Serialize)]
pub struct FileOutcome {
    pub stem: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<Value>,
}

impl FileOutcome {
    pub fn ok(stem: &str) -> Self {
        Self {
            stem: stem.to_string(),
            status: Status::Ok,
            detail: None,
            outputs: Vec::new(),
            meta: None,
        }
    }

    pub fn failed(stem: &str, detail: impl Display) -> Self {
        Self {
            stem: stem.to_string(),
            status: Status::Failed,
            detail: Some(detail.to_string()),
            outputs: Vec::new(),
            meta: None,
        }
    }

    pub fn with_output(mut self, rel_path: impl Into<String>) -> Self {
        self.outputs.push(rel_path.into());
        self
    }

    pub fn with_meta(mut self, meta: Value) -> Self {
        self.meta = Some(meta);
        self
    }
}

impl RunManifest {
    pub fn ok_count(&self) -> usize {
        self.files.iter().filter(|f| f.status == Status::Ok).count()
    }

    pub fn failed_count(&self) -> usize {
        self.files.len() - self.ok_count()
    }
}

/// Run `work` over every sample on the worker pool, assemble the manifest
/// in input (stem) order, write it under `out_root`, and print a one-line
/// summary. A worker error becomes a per-file failure, never a panic of the
/// whole run.
pub fn run_batch<F>(
    command: &str,
    config: Value,
    out_root: &Path,
    samples: &[Sample],
    work: F,
) -> Result<RunManifest>
where
    F: Fn(usize, &Sample) -> Result<FileOutcome> + Sync,
{
    let start = Instant::now();
    let files: Vec<FileOutcome> = samples
        .par_iter()
        .enumerate()
        .map(|(index, sample)| {
            work(index, sample).unwrap_or_else(|e| FileOutcome::failed(&sample.stem, format!("{e:#}")))
        })
        .collect();
    let manifest = RunManifest {
        command: command.to_string(),
        config,
        files,
        timing: Timing { elapsed_seconds: start.elapsed().as_secs_f64() },
    };
    let mut body = serde_json::to_string_pretty(&manifest)?;
    body.push('\n');
    let path = out_root.join(MANIFEST_NAME);
    atomic_write(&path, body.as_bytes())?;
    println!(
        "{command}: {} ok, {} failed; manifest at {}",
        manifest.ok_count(),
        manifest.failed_count(),
        path.display()
    );
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::anyhow;

    fn sample(stem: &str) -> Sample {
        Sample { stem: stem.to_string(), image: None, label: None, calib: None }
    }

    #[test]
    fn one_outcome_per_sample_in_stem_order() {
        let dir = tempfile::tempdir().unwrap();
        let samples = vec![sample("a"), sample("b"), sample("c")];
        let manifest = run_batch(
            "test",
            serde_json::json!({"seed": 1}),
            dir.path(),
            &samples,
            |i, s| {
                if i == 1 {
                    Err(anyhow!("boom"))
                } else {
                    Ok(FileOutcome::ok(&s.stem).with_output(format!("{}.out", s.stem)))
                }
            },
        )
        .unwrap();
        let stems: Vec<&str> = manifest.files.iter().map(|f| f.stem.as_str()).collect();
        assert_eq!(stems, ["a", "b", "c"]);
        assert_eq!(manifest.ok_count(), 2);
        assert_eq!(manifest.failed_count(), 1);
        assert_eq!(manifest.files[1].detail.as_deref(), Some("boom"));
        assert!(dir.path().join(MANIFEST_NAME).is_file());
    }

    #[test]
    fn timing_is_the_only_nondeterministic_field() {
        let dir = tempfile::tempdir().unwrap();
        let samples = vec![sample("x")];
        let run = |d: &Path| {
            run_batch("t", serde_json::json!({}), d, &samples, |_, s| Ok(FileOutcome::ok(&s.stem)))
                .unwrap();
            let mut v: Value =
                serde_json::from_str(&std::fs::read_to_string(d.join(MANIFEST_NAME)).unwrap())
                    .unwrap();
            v.as_object_mut().unwrap().remove("timing");
            v
        };
        let first = run(dir.path());
        let dir2 = tempfile::tempdir().unwrap();
        let second = run(dir2.path());
        assert_eq!(first, second);
    }
}
