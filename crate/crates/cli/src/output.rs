//! CSV and JSON artifact writers plus the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::{Command, ExperimentConfig};

/// `git describe` of the build, or the crate version outside a checkout.
pub const VERSION: &str = env!("STEFAN_CONTROL_VERSION");

/// Output directory of one subcommand.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(base: &Path, command: Command) -> Result<Self> {
        let root = base.join(command.name());
        fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn subdir(&self, name: &str) -> Result<PathBuf> {
        let dir = self.root.join(name);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Writes a CSV with the given header and one record per row.
pub fn write_rows<R, I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    R: Serialize,
    I: IntoIterator<Item = R>,
{
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Space-time field as `x,t,value`, time-major.
pub fn write_field(path: &Path, xs: &[f64], ts: &[f64], value: impl Fn(usize, usize) -> f64) -> Result<()> {
    let rows = ts.iter().enumerate().flat_map(|(j, &t)| xs.iter().enumerate().map(move |(i, &x)| (i, j, x, t)));
    write_rows(path, &["x", "t", "value"], rows.map(|(i, j, x, t)| (x, t, value(i, j))))
}

/// Time series as `t,value`.
pub fn write_series(path: &Path, ts: &[f64], values: &[f64]) -> Result<()> {
    write_rows(path, &["t", "value"], ts.iter().copied().zip(values.iter().copied()))
}

/// `n` equispaced nodes on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, D: Serialize> {
    pub version: &'a str,
    pub command: &'a str,
    pub seed: u64,
    /// Problem data actually used by the run.
    pub data: D,
    pub config: &'a ExperimentConfig,
}

pub fn write_manifest<D: Serialize>(dir: &RunDir, command: Command, config: &ExperimentConfig, data: D) -> Result<()> {
    let manifest = Manifest { version: VERSION, command: command.name(), seed: config.seed, data, config };
    write_json(&dir.path("manifest.json"), &manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_hits_endpoints() {
        let v = linspace(-1.0, 1.0, 5);
        assert_eq!(v, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(linspace(0.0, 1.0, 1), vec![0.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }

    #[test]
    fn field_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_field(&path, &[0.0, 1.0], &[0.0, 0.5], |i, j| (i + 10 * j) as f64).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "x,t,value\n0.0,0.0,0.0\n1.0,0.0,1.0\n0.0,0.5,10.0\n1.0,0.5,11.0\n");
    }

    #[test]
    fn series_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_series(&path, &[0.0, 1.0], &[2.5, -1e-20]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "t,value\n0.0,2.5\n1.0,-1e-20\n");
    }
}
