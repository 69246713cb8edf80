//! All-or-nothing output: files and directories appear only when complete.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

fn sibling(path: &Path, tag: &str) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    path.with_file_name(format!(".{name}.{tag}{}", std::process::id()))
}

/// Write `bytes` to a temporary sibling, then rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = sibling(path, "tmp");
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::Path(format!(
            "cannot write {}: {e}",
            path.display()
        )));
    }
    Ok(())
}

/// Build a directory in a temporary sibling with `fill`, then move it to
/// `dir`. An existing `dir` is replaced only if it is empty or was produced
/// by an earlier run (it holds a `manifest.tsv`).
pub fn commit_dir(dir: &Path, fill: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    if dir.exists() {
        let ours = dir.join("manifest.tsv").is_file();
        let empty = fs::read_dir(dir)?.next().is_none();
        if !ours && !empty {
            return Err(CliError::Path(format!(
                "{} exists and was not written by fdtn; refusing to replace it",
                dir.display()
            )));
        }
    }
    if let Some(parent) = dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let tmp = sibling(dir, "partial");
    let _ = fs::remove_dir_all(&tmp);
    fs::create_dir_all(&tmp)?;
    if let Err(e) = fill(&tmp) {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }
    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    fs::rename(&tmp, dir).map_err(|e| {
        let _ = fs::remove_dir_all(&tmp);
        CliError::Path(format!("cannot move output into {}: {e}", dir.display()))
    })
}
