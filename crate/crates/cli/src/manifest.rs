use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_VERSION: &str = "photonstat-manifest v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        Ok(Self {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Provenance record written next to the outputs of every command.
///
/// Paths are stored as given on the command line, so verification must run
/// from the same working directory (or with absolute paths).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub tool_version: String,
    pub command_line: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iteration_seeds: Vec<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new() -> Self {
        Self {
            format: MANIFEST_VERSION.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command_line: std::env::args().collect(),
            config: None,
            rng: None,
            iteration_seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            wall_clock_s: 0.0,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<(), CliError> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn save(&mut self, path: &Path, elapsed: Duration) -> Result<(), CliError> {
        self.wall_clock_s = elapsed.as_secs_f64();
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut out, self).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        out.write_all(b"\n")
            .and_then(|_| out.flush())
            .map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let manifest: Self =
            serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        if manifest.format != MANIFEST_VERSION {
            return Err(CliError::data(format!(
                "{}: unsupported manifest format {:?}",
                path.display(),
                manifest.format
            )));
        }
        Ok(manifest)
    }

    /// Recomputes every recorded digest; returns one line per mismatch.
    pub fn verify(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for (role, entries) in [("input", &self.inputs), ("output", &self.outputs)] {
            for entry in entries {
                match sha256_file(&entry.path) {
                    Ok(d) if d == entry.sha256 => {}
                    Ok(_) => problems.push(format!("{role} {} changed since the run", entry.path.display())),
                    Err(e) => problems.push(format!("{role} {}: {e}", entry.path.display())),
                }
            }
        }
        problems
    }
}

impl Default for RunManifest {
    fn default() -> Self {
        Self::new()
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
