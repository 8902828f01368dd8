//! Writing study results: CSV tables, JSON summary, binary dumps with sidecars, plots and a
//! manifest carrying the configuration and a SHA-256 of every file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, StudyKind};
use crate::plots;
use crate::run::{run, StudyResult};
use crate::RunError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub kind: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: StudyKind,
    pub config: RunConfig,
    /// SHA-256 of the canonical (re-serialized) configuration.
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub cells: usize,
    pub failed: usize,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn canonical_config(cfg: &RunConfig) -> String {
    serde_json::to_string(cfg).expect("configuration serializes")
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn put(dir: &Path, name: &str, kind: &str, bytes: &[u8], files: &mut Vec<FileEntry>) -> Result<(), RunError> {
    fs::write(dir.join(name), bytes)?;
    files.push(FileEntry { path: name.into(), kind: kind.into(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
    Ok(())
}

/// Raw little-endian complex64: `f32` real part then `f32` imaginary part per entry.
pub fn complex64_le(data: &[num_complex::Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * data.len());
    for z in data {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    out
}

/// Writes every artifact of `result` into `dir` and returns the manifest (also written).
pub fn write_result(
    dir: &Path,
    cfg: &RunConfig,
    result: &StudyResult,
    threads: usize,
    started_unix: f64,
) -> Result<Manifest, RunError> {
    fs::create_dir_all(dir)?;
    let canonical = canonical_config(cfg);
    let config_sha256 = sha256_hex(canonical.as_bytes());
    let mut files = Vec::new();
    for t in &result.tables {
        put(dir, &format!("{}.csv", t.name), "table", t.to_csv().as_bytes(), &mut files)?;
    }
    let summary = serde_json::to_string_pretty(&result.summary).expect("summary serializes");
    put(dir, "summary.json", "summary", summary.as_bytes(), &mut files)?;
    for d in &result.dumps {
        let bin = format!("{}.bin", d.name);
        put(dir, &bin, "dump", &complex64_le(&d.data), &mut files)?;
        let sidecar = json!({
            "file": bin,
            "dtype": "complex64",
            "byte_order": "little",
            "shape": d.shape,
            "order": "row-major",
            "config_sha256": config_sha256,
            "seed": cfg.seed,
            "meta": d.meta,
        });
        put(dir, &format!("{}.json", d.name), "sidecar", serde_json::to_string_pretty(&sidecar).unwrap().as_bytes(), &mut files)?;
    }
    for (name, svg) in plots::emit_plots(result) {
        put(dir, &name, "plot", svg.as_bytes(), &mut files)?;
    }
    let manifest = Manifest {
        tool: "gplimit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: result.kind,
        config: cfg.clone(),
        config_sha256,
        seed: cfg.seed,
        threads,
        started_unix,
        finished_unix: unix_now(),
        cells: result.cells,
        failed: result.failed,
        files,
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    Ok(manifest)
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayReport {
    pub out_dir: PathBuf,
    pub compared: usize,
    pub mismatched: Vec<String>,
    pub missing: Vec<String>,
}

impl ReplayReport {
    pub fn identical(&self) -> bool {
        self.mismatched.is_empty() && self.missing.is_empty()
    }
}

/// Reruns the study recorded in `manifest_path` into `out` and compares every table,
/// summary and dump hash with the recorded ones.
pub fn replay(manifest_path: &Path, out: &Path, threads: usize) -> Result<ReplayReport, RunError> {
    let text = fs::read_to_string(manifest_path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let old: Manifest = serde_path_to_error::deserialize(de)
        .map_err(|e| RunError::Config(format!("manifest at `{}`: {}", e.path(), e.inner())))?;
    if sha256_hex(canonical_config(&old.config).as_bytes()) != old.config_sha256 {
        return Err(RunError::Config("manifest configuration does not match its recorded hash".into()));
    }
    let started = unix_now();
    let result = run(&old.config)?;
    let new = write_result(out, &old.config, &result, threads, started)?;
    let mut rep = ReplayReport { out_dir: out.to_path_buf(), compared: 0, mismatched: Vec::new(), missing: Vec::new() };
    for f in old.files.iter().filter(|f| f.kind != "plot") {
        match new.files.iter().find(|g| g.path == f.path) {
            Some(g) => {
                rep.compared += 1;
                if g.sha256 != f.sha256 {
                    rep.mismatched.push(f.path.clone());
                }
            }
            None => rep.missing.push(f.path.clone()),
        }
    }
    Ok(rep)
}
