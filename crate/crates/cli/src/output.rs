//! Atomic artifact writes and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use carpetdim::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Task};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest<'a> {
    pub complete: bool,
    pub tasks: Vec<Task>,
    pub config: &'a RunConfig,
    pub files: Vec<FileEntry>,
    pub error: Option<String>,
}

/// Output directory that records every file it writes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

fn io(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<OutputDir> {
        std::fs::create_dir_all(root).map_err(|e| io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Write through a temp file in the same directory, then rename.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.write_raw(name, bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry { path: name.to_string(), sha256: hex(&Sha256::digest(bytes)), bytes: bytes.len() as u64 });
        Ok(())
    }

    fn write_raw(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let target = self.root.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root).map_err(|e| io(&self.root, e))?;
        tmp.write_all(bytes).map_err(|e| io(&target, e))?;
        tmp.as_file().sync_all().map_err(|e| io(&target, e))?;
        tmp.persist(&target).map_err(|e| io(&target, e.error))?;
        Ok(())
    }

    pub fn write_manifest(&self, config: &RunConfig, tasks: &[Task], error: Option<&Error>) -> Result<()> {
        let mut files = self.files.clone();
        files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest { complete: error.is_none(), tasks: tasks.to_vec(), config, files, error: error.map(|e| e.to_string()) };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        self.write_raw(MANIFEST, text.as_bytes())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
