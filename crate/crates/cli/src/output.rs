//! CSV tables, the run manifest and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Effective;
use crate::CliError;

pub const STATUS_OK: &str = "ok";
pub const STATUS_FAILED: &str = "failed";
pub const STATUS_SKIPPED: &str = "skipped";

/// Writes `contents` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Numerical(format!("writing {}: {e}", path.display()));
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(contents).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

/// SHA-256 of the command and its effective parameters.
pub fn config_hash(command: &str, eff: &Effective) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(serde_json::to_string(eff).expect("effective config serializes").as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A CSV table with a `status` column.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    status_col: usize,
}

impl Table {
    /// `status` is appended to `header` unless it already names the column.
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        let mut header = header.to_vec();
        let status_col = match header.iter().position(|h| *h == "status") {
            Some(k) => k,
            None => {
                header.push("status");
                header.len() - 1
            }
        };
        Self {
            name: name.to_string(),
            header,
            rows: Vec::new(),
            status_col,
        }
    }

    /// `values` holds every column except `status`.
    pub fn ok(&mut self, mut values: Vec<String>) {
        debug_assert_eq!(values.len() + 1, self.header.len());
        values.insert(self.status_col, STATUS_OK.into());
        self.rows.push(values);
    }

    /// A failed or skipped row keeps only its leading key columns; value
    /// columns are left empty.
    pub fn blank(&mut self, keys: Vec<String>, status: &str) {
        let mut row = keys;
        row.resize(self.header.len() - 1, String::new());
        row.insert(self.status_col, status.into());
        self.rows.push(row);
    }

    pub fn statuses(&self) -> Vec<String> {
        self.rows.iter().map(|r| r[self.status_col].clone()).collect()
    }

    pub fn render(&self, hash: &str) -> String {
        let mut s = format!("# config_sha256={hash}\n{}\n", self.header.join(","));
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Serialize)]
pub struct FileRecord {
    pub file: String,
    pub rows: usize,
    pub status: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub artifact_version: &'static str,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub exit_code: i32,
    pub threads: usize,
    pub effective: Effective,
    pub outputs: Vec<FileRecord>,
    pub message: Option<String>,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Output directory of one run.
pub struct Output {
    pub dir: PathBuf,
    pub hash: String,
    pub records: Vec<FileRecord>,
}

impl Output {
    pub fn new(dir: &Path, hash: String) -> Self {
        Self {
            dir: dir.to_path_buf(),
            hash,
            records: Vec::new(),
        }
    }

    pub fn table(&mut self, t: &Table) -> Result<PathBuf, CliError> {
        let path = self.dir.join(format!("{}.csv", t.name));
        write_atomic(&path, t.render(&self.hash).as_bytes())?;
        self.records.push(FileRecord {
            file: format!("{}.csv", t.name),
            rows: t.rows.len(),
            status: t.statuses(),
        });
        Ok(path)
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        self.records.push(FileRecord {
            file: name.into(),
            rows: 0,
            status: vec![],
        });
        Ok(path)
    }
}

/// Shortest round-tripping decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_rows_carry_no_numbers() {
        let mut t = Table::new("x", &["epsilon", "defect"]);
        t.ok(vec!["0.25".into(), "0.1".into()]);
        t.blank(vec!["0.125".into()], STATUS_FAILED);
        let text = t.render("abc");
        assert_eq!(text, "# config_sha256=abc\nepsilon,defect,status\n0.25,0.1,ok\n0.125,,failed\n");
        let mut t = Table::new("y", &["epsilon", "status", "seconds"]);
        t.ok(vec!["0.5".into(), "1.5".into()]);
        t.blank(vec!["0.25".into()], STATUS_SKIPPED);
        assert_eq!(t.render("h"), "# config_sha256=h\nepsilon,status,seconds\n0.5,ok,1.5\n0.25,skipped,\n");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn hash_depends_on_parameters() {
        let a = Effective::default();
        let mut b = a.clone();
        b.seed = 2;
        assert_ne!(config_hash("mu", &a), config_hash("mu", &b));
        assert_ne!(config_hash("mu", &a), config_hash("gap", &a));
        assert_eq!(config_hash("mu", &a), config_hash("mu", &a.clone()));
    }
}
