//! Run records (JSON lines) and their metadata sidecar.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use urnlab::observables::TieRecord;
use urnlab::{simulate_range, Leader, TieSummary};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const RECORDS_FILE: &str = "runs.jsonl";
pub const META_FILE: &str = "runs.meta.json";

/// Runs simulated and written per chunk, bounding memory for large batches.
const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub run: u64,
    pub seed: u64,
    /// Time of the last observed tie; `None` if the run never tied.
    pub duration_observed: Option<u64>,
    pub censored: bool,
    pub intensity: u64,
    pub final_x1: u64,
    pub final_x2: u64,
    pub leader: Leader,
    #[serde(skip)]
    pub horizon: u64,
}

impl RunRecord {
    fn new(run: u64, s: &TieSummary) -> Self {
        RunRecord {
            run,
            seed: s.seed,
            duration_observed: s.last_tie,
            censored: s.censored,
            intensity: s.intensity_observed,
            final_x1: s.final_state.x1,
            final_x2: s.final_state.x2,
            leader: s.leader,
            horizon: s.horizon(),
        }
    }
}

impl TieRecord for RunRecord {
    fn last_tie(&self) -> Option<u64> {
        self.duration_observed
    }
    fn intensity(&self) -> u64 {
        self.intensity
    }
    fn censored(&self) -> bool {
        self.censored
    }
    fn horizon(&self) -> u64 {
        self.horizon
    }
    fn leader(&self) -> Leader {
        self.leader
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunsMeta {
    pub config_hash: String,
    pub code_version: String,
    pub created_unix: u64,
    pub n_runs: u64,
    pub horizon: u64,
    pub config: serde_json::Value,
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(CliError::io(path))
}

/// Simulates every run of `config` into `<outputs>/runs.jsonl` and writes the sidecar.
pub fn simulate_to_dir(config: &ExperimentConfig) -> Result<PathBuf> {
    ensure_dir(&config.outputs)?;
    let path = config.outputs.join(RECORDS_FILE);
    let mut out = create(&path)?;
    let mut start = 0;
    while start < config.n_runs {
        let end = (start + CHUNK).min(config.n_runs);
        let runs = simulate_range(&config.params, config.horizon, start..end, config.master_seed);
        for (i, s) in runs.iter().enumerate() {
            let line = serde_json::to_string(&RunRecord::new(start + i as u64, s)).expect("record serializes");
            writeln!(out, "{line}").map_err(CliError::io(&path))?;
        }
        start = end;
    }
    out.flush().map_err(CliError::io(&path))?;

    let meta = RunsMeta {
        config_hash: config.hash(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        n_runs: config.n_runs,
        horizon: config.horizon,
        config: serde_json::to_value(config).expect("config serializes"),
    };
    let meta_path = config.outputs.join(META_FILE);
    let mut m = create(&meta_path)?;
    serde_json::to_writer_pretty(&mut m, &meta).expect("meta serializes");
    writeln!(m).and_then(|_| m.flush()).map_err(CliError::io(&meta_path))?;
    Ok(path)
}

pub fn read_meta(dir: &Path) -> Result<RunsMeta> {
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(CliError::io(&path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Records(format!("{}:{}: {e}", path.display(), e.line())))
}

/// Reads the records in `dir`, checking them against `config`.
pub fn load(dir: &Path, config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let meta = read_meta(dir)?;
    let expected = config.hash();
    if meta.config_hash != expected {
        return Err(CliError::HashMismatch { expected, found: meta.config_hash });
    }
    let path = dir.join(RECORDS_FILE);
    let file = File::open(&path).map_err(CliError::io(&path))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(CliError::io(&path))?;
        let mut rec: RunRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::Records(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if rec.run != records.len() as u64 {
            return Err(CliError::Records(format!(
                "{}:{}: expected run {}, found {}",
                path.display(),
                i + 1,
                records.len(),
                rec.run
            )));
        }
        rec.horizon = config.horizon;
        records.push(rec);
    }
    if records.is_empty() {
        return Err(CliError::Records(format!("{}: no records", path.display())));
    }
    if records.len() as u64 != config.n_runs {
        return Err(CliError::Records(format!(
            "{}: {} records, config expects {}",
            path.display(),
            records.len(),
            config.n_runs
        )));
    }
    Ok(records)
}
