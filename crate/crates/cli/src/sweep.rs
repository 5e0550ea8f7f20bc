//! Regime table over a grid of `(beta, r)`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use urnlab::theory::{regime_report, RegimeRow};

use crate::analyze::write_csv_with_hash;
use crate::config::hex;
use crate::error::{CliError, Result};
use crate::records::{create, ensure_dir};

#[derive(Debug, Serialize)]
pub struct SweepGrid {
    pub betas: Vec<f64>,
    pub rs: Vec<f64>,
    pub x0: (u64, u64),
}

#[derive(Debug, Serialize)]
struct SweepOutput<'a> {
    config_hash: &'a str,
    grid: &'a SweepGrid,
    rows: &'a [RegimeRow],
}

impl SweepGrid {
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(serde_json::to_vec(self).expect("grid serializes")))
    }
}

pub fn sweep(grid: &SweepGrid) -> Result<Vec<RegimeRow>> {
    if let Some(bad) = grid.betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return Err(CliError::config("--betas", format!("beta must be finite and nonnegative, got {bad}")));
    }
    if let Some(bad) = grid.rs.iter().find(|r| !(r.is_finite() && **r >= 1.0)) {
        return Err(CliError::config("--rs", format!("r must be finite and at least 1, got {bad}")));
    }
    Ok(regime_report(&grid.betas, &grid.rs, grid.x0))
}

/// Writes `regime.csv` and `regime.json` into `dir`.
pub fn write(dir: &Path, grid: &SweepGrid, rows: &[RegimeRow]) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let hash = grid.hash();
    let csv_path = dir.join("regime.csv");
    write_csv_with_hash(&csv_path, &hash, rows)?;
    let json_path = dir.join("regime.json");
    let mut out = create(&json_path)?;
    serde_json::to_writer_pretty(&mut out, &SweepOutput { config_hash: &hash, grid, rows }).expect("rows serialize");
    writeln!(out).and_then(|_| out.flush()).map_err(CliError::io(&json_path))?;
    Ok(vec![csv_path, json_path])
}
