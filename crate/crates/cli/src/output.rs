//! All-or-nothing writes of a run's output files.
//!
//! Files are staged in a hidden directory inside the target, then renamed
//! into place. If any rename fails, files already moved are removed, any
//! files they replaced are restored, and the staging directory is deleted.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

impl OutputFile {
    pub fn new(name: impl Into<String>, contents: impl Into<Vec<u8>>) -> Self {
        Self {
            name: name.into(),
            contents: contents.into(),
        }
    }
}

struct Committed {
    target: PathBuf,
    backup: Option<PathBuf>,
}

fn rollback(committed: &[Committed]) {
    for c in committed.iter().rev() {
        let _ = fs::remove_file(&c.target);
        if let Some(b) = &c.backup {
            let _ = fs::rename(b, &c.target);
        }
    }
}

pub fn write_all(dir: &Path, files: &[OutputFile]) -> Result<(), CliError> {
    let created = !dir.exists();
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let result = stage_and_commit(dir, files);
    if result.is_err() && created {
        let _ = fs::remove_dir(dir);
    }
    result
}

fn stage_and_commit(dir: &Path, files: &[OutputFile]) -> Result<(), CliError> {
    let staging = dir.join(format!(".bcast-staging-{}", std::process::id()));
    fs::create_dir(&staging).map_err(|e| CliError::io(&staging, e))?;
    let result = (|| {
        for f in files {
            let p = staging.join(&f.name);
            fs::write(&p, &f.contents).map_err(|e| CliError::io(&p, e))?;
        }
        let backups = staging.join(".previous");
        fs::create_dir(&backups).map_err(|e| CliError::io(&backups, e))?;
        let mut committed = Vec::new();
        for f in files {
            let target = dir.join(&f.name);
            let step = (|| {
                let mut backup = None;
                if let Ok(meta) = fs::symlink_metadata(&target) {
                    if meta.is_dir() {
                        return Err(CliError::io(
                            &target,
                            std::io::Error::new(std::io::ErrorKind::IsADirectory, "is a directory"),
                        ));
                    }
                    let b = backups.join(&f.name);
                    fs::rename(&target, &b).map_err(|e| CliError::io(&target, e))?;
                    backup = Some(b);
                }
                let staged = staging.join(&f.name);
                if let Err(e) = fs::rename(&staged, &target) {
                    if let Some(b) = &backup {
                        let _ = fs::rename(b, &target);
                    }
                    return Err(CliError::io(&target, e));
                }
                Ok(Committed { target, backup })
            })();
            match step {
                Ok(c) => committed.push(c),
                Err(e) => {
                    rollback(&committed);
                    return Err(e);
                }
            }
        }
        Ok(())
    })();
    let _ = fs::remove_dir_all(&staging);
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(dir: &Path) -> Vec<String> {
        let mut v: Vec<String> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        v.sort();
        v
    }

    #[test]
    fn writes_every_file() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        write_all(&out, &[OutputFile::new("a.txt", "A"), OutputFile::new("b.txt", "B")]).unwrap();
        assert_eq!(names(&out), vec!["a.txt", "b.txt"]);
        assert_eq!(fs::read_to_string(out.join("b.txt")).unwrap(), "B");
    }

    #[test]
    fn failure_rolls_back_and_restores() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path();
        fs::write(out.join("a.txt"), "old").unwrap();
        fs::create_dir(out.join("c.txt")).unwrap();
        let err = write_all(
            out,
            &[OutputFile::new("a.txt", "new"), OutputFile::new("b.txt", "B"), OutputFile::new("c.txt", "C")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("c.txt"), "{err}");
        assert_eq!(names(out), vec!["a.txt", "c.txt"]);
        assert_eq!(fs::read_to_string(out.join("a.txt")).unwrap(), "old");
    }
}
