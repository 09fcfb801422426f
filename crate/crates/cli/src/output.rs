//! Report assembly and all-or-nothing file emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{io_error, CliError};

pub const TOOL: &str = "squeezelab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A CSV table; cells are already formatted.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// First line is `# squeezelab <version> config-sha256=<hex>`, then the header.
    pub fn render(&self, config_hash: &str) -> Result<Vec<u8>, CliError> {
        let mut out = format!("# {TOOL} {VERSION} config-sha256={config_hash}\n").into_bytes();
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.header)
            .map_err(|e| CliError::Io(format!("csv: {e}")))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| CliError::Io(format!("csv: {e}")))?;
        }
        w.flush().map_err(|e| CliError::Io(format!("csv: {e}")))?;
        drop(w);
        Ok(out)
    }
}

/// Shortest round-trip representation; identical inputs print identically.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub config_sha256: String,
    /// Resolved configuration, every default filled in.
    pub config: Value,
    pub payload: Value,
    pub warnings: Vec<String>,
}

/// SHA-256 of the compact JSON encoding of `config`.
pub fn config_hash(config: &Value) -> String {
    let bytes = serde_json::to_vec(config).expect("JSON value serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Files staged in memory and written together.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    /// Writes every file through a temporary sibling and a rename. On error
    /// the temporaries written so far are removed.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let cleanup = |staged: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in staged {
                let _ = fs::remove_file(tmp);
            }
        };
        for (name, bytes) in &self.files {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp"));
            if let Err(e) = fs::write(&tmp, bytes) {
                cleanup(&staged);
                let _ = fs::remove_file(&tmp);
                return Err(io_error(&tmp, e));
            }
            staged.push((tmp, target));
        }
        let mut written = Vec::new();
        for (tmp, target) in &staged {
            fs::rename(tmp, target).map_err(|e| io_error(target, e))?;
            written.push(target.clone());
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_comment_and_header() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(1.0), num(0.25)]);
        let text = String::from_utf8(t.render("abc").unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# squeezelab {VERSION} config-sha256=abc"));
        assert_eq!(lines[1], "a,b");
        assert_eq!(lines[2], "1,0.25");
    }

    #[test]
    fn hash_is_stable() {
        let v = serde_json::json!({"a": 1, "b": [1.5, 2]});
        assert_eq!(config_hash(&v), config_hash(&v.clone()));
        assert_eq!(config_hash(&v).len(), 64);
    }
}
