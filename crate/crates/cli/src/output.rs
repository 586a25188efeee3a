//! CSV and JSON writers. Every file is stamped with the manifest hash: CSV
//! files start with a `# manifest_sha256=<hash>` comment line, JSON files
//! carry a top-level `manifest_sha256` field next to `data`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub struct OutputDir {
    pub root: PathBuf,
    pub hash: String,
    pub written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    manifest_sha256: &'a str,
    data: &'a T,
}

impl OutputDir {
    pub fn create(root: &Path, hash: &str) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), hash: hash.to_string(), written: Vec::new() })
    }

    fn open(&mut self, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
        let path = self.root.join(name);
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok((path, BufWriter::new(f)))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> CliResult<PathBuf> {
        let (path, mut w) = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, &Stamped { manifest_sha256: &self.hash, data })?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let (path, mut w) = self.open(name)?;
        writeln!(w, "# manifest_sha256={}", self.hash).map_err(|e| CliError::io(&path, e))?;
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(header)?;
        for r in rows {
            cw.write_record(r)?;
        }
        cw.flush().map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// Unstamped write, used for the manifest itself.
    pub fn raw_json<T: Serialize>(&mut self, name: &str, data: &T) -> CliResult<PathBuf> {
        let (path, mut w) = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, data)?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
