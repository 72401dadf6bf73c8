//! Small filesystem helpers.

use std::io::Write;
use std::path::Path;

use anyhow::Context;

/// Writes a file atomically: the content lands in a temp file in the target
/// directory and is renamed into place, so readers never see partial output.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create temp file in {}", dir.display()))?;
    tmp.write_all(bytes)
        .with_context(|| format!("cannot write {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("cannot move temp file into {}", path.display()))?;
    Ok(())
}
