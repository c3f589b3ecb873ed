//! Artifact files: `summary.txt` and versioned CSV tables.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::config::{Config, Overrides};

pub const SCHEMA: u32 = 1;

pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write a CSV table preceded by the `# schema=1` comment line.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.path(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# schema={SCHEMA}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Write `summary.txt`: the result lines, then the effective config.
    pub fn summary(&mut self, command: &str, lines: &[(String, String)], cfg: &Config, o: &Overrides) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "quantrack {command}")?;
        for (k, v) in lines {
            writeln!(s, "{k} = {v}")?;
        }
        let files: Vec<&str> = self.written.iter().map(String::as_str).collect();
        writeln!(s, "artifacts = {}", files.join(", "))?;
        writeln!(s)?;
        writeln!(s, "# effective config")?;
        let applied = o.applied();
        if applied.is_empty() {
            writeln!(s, "# overrides: none")?;
        } else {
            writeln!(s, "# overrides: {}", applied.join(", "))?;
        }
        s.push_str(&cfg.to_toml());
        self.text("summary.txt", &s)
    }
}

/// Shortest round-trip text, in exponent form outside `[1e-4, 1e9)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e9).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Indices `0, stride, 2 stride, ..., n` with at most about `max` entries.
pub fn thinned(n: usize, max: usize) -> Vec<usize> {
    let stride = n.div_ceil(max.max(1)).max(1);
    let mut v: Vec<usize> = (0..=n).step_by(stride).collect();
    if v.last() != Some(&n) {
        v.push(n);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_numbers_use_exponents() {
        assert_eq!(num(7.5e-11), "7.5e-11");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(0.0), "0");
    }

    #[test]
    fn thinning_keeps_both_ends() {
        assert_eq!(thinned(10, 4), vec![0, 3, 6, 9, 10]);
        assert_eq!(thinned(3, 100), vec![0, 1, 2, 3]);
    }
}
