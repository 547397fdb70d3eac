//! Output files are staged next to their destination and renamed into place,
//! so a reader never sees a partially written table.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `name` through `fill` and renames it into place once complete.
    pub fn write<F>(&self, name: &str, fill: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut dyn Write) -> io::Result<()>,
    {
        let dest = self.root.join(name);
        let staging = self.root.join(format!(".{name}.partial"));
        let io_err = |source| CliError::Io {
            path: dest.clone(),
            source,
        };
        let result = (|| {
            let mut w = BufWriter::new(fs::File::create(&staging)?);
            fill(&mut w)?;
            w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
            fs::rename(&staging, &dest)
        })();
        if let Err(e) = result {
            let _ = fs::remove_file(&staging);
            return Err(io_err(e));
        }
        Ok(dest)
    }
}

/// Float formatting shared by every table: 17 significant digits, with
/// negative zero printed as zero.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}
