//! Report schema and artifact plumbing shared by every subcommand.
//!
//! A report is one JSON document (`schema_version` 1) echoing the
//! command line, digests of every file that was read, the schedule or
//! level that was used, the ledgered energy, and a command-specific
//! payload. Reports with identical flags and seed are byte-identical
//! except for the `wall_time_ms` field.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Schema of the JSON report written by every subcommand.
pub const REPORT_SCHEMA_VERSION: u64 = 1;

/// Name and content digest of one file the command read.
#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// The report document. Field order here is the serialization order.
#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u64,
    /// The invocation, with the binary path collapsed to its name.
    pub command: Vec<String>,
    pub seed: u64,
    pub workers: usize,
    /// Digest of every file read, in the order the command read them.
    pub inputs: Vec<InputDigest>,
    /// Per-stage levels, for commands that run staged transforms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<u8>>,
    /// Single level, for commands with one approximation knob.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<u8>,
    /// Ledgered energy in units of one exact multiply (for
    /// `optimize-levels` this is the mean energy per transform).
    pub energy_units: f64,
    /// Quality summary in dB, where the command measures one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psnr_db: Option<f64>,
    pub payload: serde_json::Value,
    pub wall_time_ms: f64,
}

/// Collects everything a report needs as the command runs.
pub struct ReportBuilder {
    started: Instant,
    command: Vec<String>,
    inputs: Vec<InputDigest>,
}

impl ReportBuilder {
    /// Starts the wall clock and captures the argv echo.
    pub fn new() -> Self {
        let mut command: Vec<String> = std::env::args().collect();
        if let Some(first) = command.first_mut() {
            // The binary lives wherever the build put it; the report
            // should not depend on that.
            *first = Path::new(&*first)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "approxai".into());
        }
        ReportBuilder {
            started: Instant::now(),
            command,
            inputs: Vec::new(),
        }
    }

    /// Reads a file, records its digest, and returns the text.
    pub fn load(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Msg(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex(&Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes)
            .map_err(|_| CliError::Msg(format!("{} is not valid UTF-8", path.display())))
    }

    /// Finishes the report with the command-specific fields.
    #[allow(clippy::too_many_arguments)]
    pub fn finish(
        self,
        seed: u64,
        workers: usize,
        schedule: Option<Vec<u8>>,
        level: Option<u8>,
        energy_units: f64,
        psnr_db: Option<f64>,
        payload: serde_json::Value,
    ) -> Report {
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            command: self.command,
            seed,
            workers,
            inputs: self.inputs,
            schedule,
            level,
            energy_units,
            psnr_db,
            payload,
            wall_time_ms: self.started.elapsed().as_secs_f64() * 1e3,
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// An artifact to be written alongside the report.
pub struct Artifact {
    pub name: &'static str,
    pub contents: String,
}

/// Writes the report and its artifacts into `out_dir`, creating the
/// directory if needed. This runs only after all computation succeeded,
/// so failed commands leave no files behind.
pub fn write_outputs(
    out_dir: &Path,
    report: &Report,
    artifacts: &[Artifact],
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Msg(format!("cannot create {}: {e}", out_dir.display())))?;
    for a in artifacts {
        let path = out_dir.join(a.name);
        fs::write(&path, &a.contents)
            .map_err(|e| CliError::Msg(format!("cannot write {}: {e}", path.display())))?;
    }
    let path = out_dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Msg(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    fs::write(&path, text)
        .map_err(|e| CliError::Msg(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
