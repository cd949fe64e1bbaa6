//! CSV files with `#`-prefixed run metadata headers.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// Reproducibility header shared by every file of one run.
#[derive(Clone, Debug)]
pub struct RunMetadata {
    pub command_line: String,
    pub seed: u64,
    pub config_sha256: String,
}

impl RunMetadata {
    pub fn new(command_line: String, seed: u64, config_text: &str) -> Self {
        let digest = Sha256::digest(config_text.as_bytes());
        let config_sha256 = digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        Self {
            command_line,
            seed,
            config_sha256,
        }
    }

    fn header(&self) -> String {
        format!(
            "# tool: redo {}\n# command: {}\n# seed: {}\n# config_sha256: {}\n# date: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command_line,
            self.seed,
            self.config_sha256,
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        )
    }
}

pub struct Csv {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, T>(&mut self, row: I)
    where
        I: IntoIterator<Item = T>,
        T: ToString,
    {
        let row: Vec<String> = row.into_iter().map(|v| v.to_string()).collect();
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, meta: &RunMetadata) -> String {
        let mut s = meta.header();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, dir: &Path, name: &str, meta: &RunMetadata) -> io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        fs::write(&path, self.render(meta))?;
        Ok(path)
    }
}

/// Data lines of a CSV produced by [`Csv::render`], comments dropped.
pub fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}
