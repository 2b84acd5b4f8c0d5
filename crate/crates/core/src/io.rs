//! Atomic file output.

use std::io::Write;
use std::path::Path;

use crate::error::{Result, SdaError};

/// Writes `contents` to `path` via a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| SdaError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| SdaError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| SdaError::io(path, e))?;
    tmp.flush().map_err(|e| SdaError::io(path, e))?;
    tmp.persist(path).map_err(|e| SdaError::io(path, e.error))?;
    Ok(())
}

/// Formats a float so that it re-parses to the identical value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
