//! Atomic file output: write to a temporary sibling, then rename, so a
//! failed run never leaves a partial artifact behind.

use std::path::Path;

use crate::CliError;

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Input(format!("cannot finalize {}: {e}", path.display())))
}

/// Emit to a file under `dir`, or to stdout when no directory is given.
pub fn emit(dir: Option<&Path>, name: &str, contents: &str) -> Result<(), CliError> {
    match dir {
        Some(dir) => write_atomic(&dir.join(name), contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}
