//! CSV rendering and the on-disk artifact set with its manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.txt";

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

/// A CSV table with a single header row.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// Parses a CSV written by [`Csv`]: checks the header and returns the
/// remaining rows split on commas.
pub fn read_csv(text: &str, header: &[&str], origin: &str) -> Result<Vec<Vec<String>>, CliError> {
    let mut lines = text.lines();
    let first = lines.next().unwrap_or("");
    if first != header.join(",") {
        return Err(CliError::Validation(vec![format!(
            "{origin}: expected header '{}', found '{first}'",
            header.join(",")
        )]));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != header.len() {
            return Err(CliError::Validation(vec![format!(
                "{origin}: line {} has {} fields, expected {}",
                k + 2,
                fields.len(),
                header.len()
            )]));
        }
        rows.push(fields);
    }
    Ok(rows)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files produced by a command, keyed by path relative to the output
/// directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArtifactSet {
    files: BTreeMap<String, Vec<u8>>,
}

impl ArtifactSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, path: impl Into<String>, bytes: Vec<u8>) {
        self.files.insert(path.into(), bytes);
    }

    pub fn get(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(Vec::as_slice)
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// `<relative-path> <sha-256-hex>` per file, sorted by path.
    pub fn manifest(&self) -> String {
        self.files
            .iter()
            .map(|(p, b)| format!("{p} {}\n", sha256_hex(b)))
            .collect()
    }

    /// Writes every file and the manifest under `dir`. On failure the files
    /// and directories created so far are removed again.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let mut created_dirs: Vec<PathBuf> = Vec::new();
        let mut written: Vec<PathBuf> = Vec::new();
        let result = self.write_inner(dir, &mut created_dirs, &mut written);
        if let Err(e) = result {
            for f in written.iter().rev() {
                let _ = fs::remove_file(f);
            }
            for d in created_dirs.iter().rev() {
                let _ = fs::remove_dir(d);
            }
            return Err(e);
        }
        Ok(written)
    }

    fn write_inner(
        &self,
        dir: &Path,
        created_dirs: &mut Vec<PathBuf>,
        written: &mut Vec<PathBuf>,
    ) -> Result<(), CliError> {
        let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
        let ensure_dir = |d: &Path, created: &mut Vec<PathBuf>| -> Result<(), CliError> {
            let mut missing = Vec::new();
            let mut cur = Some(d);
            while let Some(c) = cur {
                if c.as_os_str().is_empty() || c.exists() {
                    break;
                }
                missing.push(c.to_path_buf());
                cur = c.parent();
            }
            for m in missing.into_iter().rev() {
                fs::create_dir(&m).map_err(|e| io(&m, e))?;
                created.push(m);
            }
            Ok(())
        };
        ensure_dir(dir, created_dirs)?;
        let mut entries: Vec<(String, &[u8])> = self
            .files
            .iter()
            .map(|(p, b)| (p.clone(), b.as_slice()))
            .collect();
        let manifest = self.manifest();
        entries.push((MANIFEST.to_string(), manifest.as_bytes()));
        for (rel, bytes) in entries {
            let path = dir.join(&rel);
            if let Some(parent) = path.parent() {
                ensure_dir(parent, created_dirs)?;
            }
            fs::write(&path, bytes).map_err(|e| io(&path, e))?;
            written.push(path);
        }
        Ok(())
    }
}
