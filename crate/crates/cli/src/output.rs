use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// `x` rounded to 12 significant digits, in the shortest form that round-trips.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        rounded.to_string()
    } else {
        format!("{rounded:e}")
    }
}

/// Writes `rows` under a header row; floats go through [`sig12`].
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row.iter().map(|&x| sig12(x)))?;
    }
    w.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    fs::write(path, text + "\n")
}

/// The output directory, created on first use.
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutDir(dir.to_path_buf()))
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}
