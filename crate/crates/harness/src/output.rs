//! CSV files, digests and run manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{csv_err, io_err, Result};

pub const FIELD_HEADER: [&str; 6] = ["t", "x", "rho1_mean", "rho1_se", "rho2_mean", "rho2_se"];
pub const REPORT_HEADER: [&str; 9] =
    ["t", "N", "epsilon", "l1_rho1", "l1_rho2", "l2_rho1", "l2_rho2", "l1_ci_lo", "l1_ci_hi"];

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files written by one command.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(OutputDir { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
        w.write_record(header).map_err(csv_err(&path))?;
        for row in rows {
            w.write_record(&row).map_err(csv_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(io_err(&path))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Digest every file written so far and store the manifest next to them.
    pub fn finish(self, mut manifest: Manifest) -> Result<Manifest> {
        for name in &self.files {
            let path = self.path(name);
            let bytes = std::fs::read(&path).map_err(io_err(&path))?;
            manifest.files.insert(name.clone(), sha256_hex(&bytes));
        }
        let path = self.path("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(io_err(&path))?;
        Ok(manifest)
    }
}

/// Provenance of one command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub replica_seeds: Vec<u64>,
    pub version: String,
    pub timings_ms: BTreeMap<String, u64>,
    /// SHA-256 of every output file, by name.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config_json: &str, master_seed: u64, replica_seeds: Vec<u64>) -> Self {
        Manifest {
            command: command.to_string(),
            config_sha256: sha256_hex(config_json.as_bytes()),
            master_seed,
            replica_seeds,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timings_ms: BTreeMap::new(),
            files: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Recompute the digests of the listed files under `dir`; names whose
    /// contents no longer match are returned.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for (name, digest) in &self.files {
            let path = dir.join(name);
            let bytes = std::fs::read(&path).map_err(io_err(&path))?;
            if &sha256_hex(&bytes) != digest {
                bad.push(name.clone());
            }
        }
        Ok(bad)
    }
}

/// Header and rows of a CSV file.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(csv_err(path))?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

/// Numeric columns of a CSV file, by header name.
pub fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let (header, rows) = read_csv(path)?;
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            header.iter().position(|h| h == n).ok_or_else(|| {
                crate::error::HarnessError::Config(format!("{}: no column `{n}`", path.display()))
            })
        })
        .collect::<Result<_>>()?;
    Ok(idx.iter().map(|&i| rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -0.0, 2.5] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(1.0), "1.0");
    }

    #[test]
    fn sha256_known_answer() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_digests_validate() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_csv("a.csv", &["t", "v"], vec![vec![num(0.0), num(1.5)]]).unwrap();
        let m = out.finish(Manifest::new("test", "{}", 7, vec![1, 2])).unwrap();
        let loaded = Manifest::load(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(m, loaded);
        assert!(loaded.verify(dir.path()).unwrap().is_empty());
        assert_eq!(loaded.config_sha256, sha256_hex(b"{}"));
        std::fs::write(dir.path().join("a.csv"), "t,v\n0,2\n").unwrap();
        assert_eq!(loaded.verify(dir.path()).unwrap(), vec!["a.csv".to_string()]);
        let cols = read_columns(&dir.path().join("a.csv"), &["v"]).unwrap();
        assert_eq!(cols, vec![vec![2.0]]);
    }
}
