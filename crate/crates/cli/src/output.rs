//! Atomic file output with per-stage rollback.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Writes `bytes` next to `path` under a temporary name, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.partial", name.to_string_lossy()));
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| CliError::from(e).at(path))
}

/// Files written by one stage. Dropping the stage without calling
/// [`Stage::commit`] deletes them.
#[derive(Debug, Default)]
pub struct Stage {
    written: Vec<PathBuf>,
    committed: bool,
}

impl Stage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        write_atomic(path, bytes)?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Stage {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}
