//! Reproducibility manifests. One `manifest.json` per command output
//! directory, containing everything needed to reproduce the run byte for
//! byte: the effective config echo, the seed, input/output hashes and any
//! logged assumptions. Wall-clock timings are deliberately kept in a
//! `timings.json` sidecar so manifests of identical runs compare equal.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::util::{sha256_file, sha256_hex};

pub const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Standing note attached to every command that touches the candidate grid.
pub const THETA_GRID_NOTE: &str =
    "T_stop axis of the candidate grid taken as {10, 100, 1000}; the source listing {10, 10, 1000} is treated as a misprint";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileHash {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExcludedRows {
    pub total: usize,
    /// (zeta, count) pairs.
    pub per_level: Vec<(f64, usize)>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub software_version: String,
    pub schema_version: String,
    pub seed: u64,
    pub nominal_file_hash: String,
    pub config: RunConfig,
    pub input_hashes: Vec<FileHash>,
    pub output_hashes: Vec<FileHash>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excluded_rows: Option<ExcludedRows>,
    pub assumptions: Vec<String>,
    pub notes: Vec<String>,
}

/// Accumulates manifest content while a command runs, then writes
/// `manifest.json` (hash-covered artifacts only) and the `timings.json`
/// sidecar.
pub struct ManifestBuilder {
    manifest: RunManifest,
    out_dir: PathBuf,
    started: Instant,
    phases: Vec<(String, f64)>,
    phase_started: Option<(String, Instant)>,
}

impl ManifestBuilder {
    pub fn new(command: &str, cfg: &RunConfig, out_dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(out_dir)?;
        let nominal_file_hash = sha256_file(&cfg.nominal_params)?;
        Ok(Self {
            manifest: RunManifest {
                command: command.to_string(),
                software_version: SOFTWARE_VERSION.to_string(),
                schema_version: mixcert_core::schema::SCHEMA_VERSION.to_string(),
                seed: cfg.seed,
                nominal_file_hash,
                config: cfg.clone(),
                input_hashes: Vec::new(),
                output_hashes: Vec::new(),
                excluded_rows: None,
                assumptions: Vec::new(),
                notes: Vec::new(),
            },
            out_dir: out_dir.to_path_buf(),
            started: Instant::now(),
            phases: Vec::new(),
            phase_started: None,
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Hashes an input artifact. Only the file name is recorded so that
    /// identical runs rooted in different directories produce identical
    /// manifests.
    pub fn record_input(&mut self, path: &Path) -> CliResult<()> {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.manifest.input_hashes.push(FileHash { name, sha256: sha256_file(path)? });
        Ok(())
    }

    /// Writes an output file inside the command directory and records its
    /// hash.
    pub fn write_output(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.out_dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.manifest.output_hashes.push(FileHash {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn excluded_rows(&mut self, excluded: ExcludedRows) {
        self.manifest.excluded_rows = Some(excluded);
    }

    pub fn assumption(&mut self, text: &str) {
        self.manifest.assumptions.push(text.to_string());
    }

    pub fn note(&mut self, text: String) {
        self.manifest.notes.push(text);
    }

    pub fn phase(&mut self, name: &str) {
        self.end_phase();
        self.phase_started = Some((name.to_string(), Instant::now()));
    }

    fn end_phase(&mut self) {
        if let Some((name, at)) = self.phase_started.take() {
            self.phases.push((name, at.elapsed().as_secs_f64()));
        }
    }

    /// Finalizes the directory: manifest first (it must not cover itself or
    /// the timing sidecar), then timings.
    pub fn finish(mut self) -> CliResult<()> {
        self.end_phase();
        let manifest_json = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(self.out_dir.join("manifest.json"), manifest_json)?;
        let timings = serde_json::json!({
            "command": self.manifest.command,
            "total_seconds": self.started.elapsed().as_secs_f64(),
            "phases": self.phases.iter().map(|(name, secs)| {
                serde_json::json!({"phase": name, "seconds": secs})
            }).collect::<Vec<_>>(),
        });
        std::fs::write(
            self.out_dir.join("timings.json"),
            serde_json::to_string_pretty(&timings)?,
        )?;
        Ok(())
    }
}
