use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellFailure {
    pub sweep: String,
    pub row: usize,
    pub col: f64,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CellSummary {
    pub total: usize,
    pub failed: usize,
    pub errors: Vec<CellFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleSummary {
    pub checks: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub modes: Vec<String>,
    pub code_version: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub workers: usize,
    pub wall_time_seconds: f64,
    pub files: Vec<FileEntry>,
    pub cells: CellSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory that remembers what it wrote, so a failed run can be
/// rolled back.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.written
    }

    /// Renders into memory first so the checksum matches the bytes on disk.
    pub fn write_with<F>(&mut self, name: &str, render: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        let path = self.root.join(name);
        let mut f = fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        // recorded before the write so a half-written file is still rolled back
        self.written.push(FileEntry { path: name.to_string(), sha256: sha256_hex(&buf), bytes: buf.len() });
        f.write_all(&buf).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(())
    }

    pub fn write_manifest(&self, manifest: &Manifest) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Io(e.to_string()))?;
        let path = self.root.join(MANIFEST_NAME);
        fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Removes every file written by this run.
    pub fn discard(self) {
        for f in &self.written {
            let _ = fs::remove_file(self.root.join(&f.path));
        }
        let _ = fs::remove_file(self.root.join(MANIFEST_NAME));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksum_matches_disk() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_with("a.csv", |w| writeln!(w, "x,y\n1,2")).unwrap();
        let disk = fs::read(dir.path().join("a.csv")).unwrap();
        assert_eq!(out.files()[0].sha256, sha256_hex(&disk));
        assert_eq!(out.files()[0].bytes, disk.len());
        out.discard();
        assert!(!dir.path().join("a.csv").exists());
    }
}
