use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

/// Output directory whose files are replaced atomically.
pub struct OutputDir {
    path: PathBuf,
}

impl OutputDir {
    /// Create `path` if needed. A fresh directory is assembled under a
    /// temporary name next to it and renamed into place, so it never shows
    /// up half-created.
    pub fn create(path: &Path) -> io::Result<OutputDir> {
        if !path.is_dir() {
            let parent = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            fs::create_dir_all(parent)?;
            let staging = tempfile::Builder::new().prefix(".tagtrace-out").tempdir_in(parent)?;
            match fs::rename(staging.path(), path) {
                Ok(()) => {
                    // Renamed away; nothing left for the guard to remove.
                    let _ = staging.keep();
                }
                Err(_) if path.is_dir() => {}
                Err(e) => return Err(e),
            }
        }
        Ok(OutputDir { path: path.to_owned() })
    }

    /// Write `name` through a temporary file renamed over the target.
    pub fn write<F, E>(&self, name: &str, fill: F) -> Result<PathBuf, E>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), E>,
        E: From<io::Error>,
    {
        let tmp = NamedTempFile::new_in(&self.path)?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            fill(&mut w)?;
            w.flush()?;
        }
        let target = self.path.join(name);
        tmp.persist(&target).map_err(|e| e.error)?;
        Ok(target)
    }
}
