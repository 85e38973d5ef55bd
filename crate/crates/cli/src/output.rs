//! Atomic result persistence: every file is staged next to its final
//! location and renamed into place only after all writes succeeded, so a
//! failed run never leaves partial outputs.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub struct StagedFile {
    tmp: PathBuf,
    target: PathBuf,
}

pub struct Stage {
    files: Vec<StagedFile>,
    committed: bool,
}

impl Stage {
    pub fn new() -> Self {
        Stage {
            files: Vec::new(),
            committed: false,
        }
    }

    pub fn write(&mut self, dir: &Path, name: &str, contents: &str) -> io::Result<()> {
        let tmp = dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, contents)?;
        self.files.push(StagedFile {
            tmp,
            target: dir.join(name),
        });
        Ok(())
    }

    pub fn commit(mut self) -> io::Result<()> {
        for file in &self.files {
            fs::rename(&file.tmp, &file.target)?;
        }
        self.committed = true;
        Ok(())
    }
}

impl Drop for Stage {
    fn drop(&mut self) {
        if !self.committed {
            for file in &self.files {
                let _ = fs::remove_file(&file.tmp);
            }
        }
    }
}
