//! Experiment configuration: the JSON file, command-line overrides and the
//! resolved settings every command works from.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use urnlab::observables::{log_grid, unit_grid, Metric, TRUST_RATIO};
use urnlab::UrnParams;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// 10^4 runs, horizon 10^6
    Desk,
    /// 10^5 runs, horizon 10^7
    Paper,
}

impl Preset {
    fn n_runs(self) -> u64 {
        match self {
            Preset::Desk => 10_000,
            Preset::Paper => 100_000,
        }
    }

    fn horizon(self) -> u64 {
        match self {
            Preset::Desk => 1_000_000,
            Preset::Paper => 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GridSpec {
    Log { lo: u64, hi: u64, per_decade: usize },
    Unit { lo: u64, hi: u64 },
    Points { values: Vec<u64> },
}

impl GridSpec {
    pub fn build(&self) -> urnlab::Result<Vec<u64>> {
        match self {
            GridSpec::Log { lo, hi, per_decade } => log_grid(*lo, *hi, *per_decade),
            GridSpec::Unit { lo, hi } => unit_grid(*lo, *hi),
            GridSpec::Points { values } => {
                if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1]) {
                    Err(urnlab::UrnError::InvalidGrid("points must be nonempty and strictly increasing".into()))
                } else {
                    Ok(values.clone())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub duration: GridSpec,
    pub intensity: GridSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWindows {
    pub duration: (f64, f64),
    pub intensity: (f64, f64),
}

/// The config file as written; omitted fields fall back to presets and to
/// defaults derived from the horizon.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    params: UrnParams,
    horizon: Option<u64>,
    n_runs: Option<u64>,
    master_seed: Option<u64>,
    grids: Option<Grids>,
    fit_windows: Option<FitWindows>,
    outputs: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    pub runs: Option<u64>,
    pub horizon: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub params: UrnParams,
    pub horizon: u64,
    pub n_runs: u64,
    pub master_seed: u64,
    pub grids: Grids,
    pub fit_windows: FitWindows,
    pub outputs: PathBuf,
}

/// Everything except `outputs`, which does not affect results.
#[derive(Serialize)]
struct Hashed<'a> {
    params: &'a UrnParams,
    horizon: u64,
    n_runs: u64,
    master_seed: u64,
    grids: &'a Grids,
    fit_windows: &'a FitWindows,
}

/// 1-based line of the value at `path`, found by scanning for each key in turn.
fn key_line(text: &str, path: &[&str]) -> Option<usize> {
    let mut pos = 0;
    for key in path {
        let needle = format!("\"{key}\"");
        let mut from = pos;
        loop {
            let hit = from + text[from..].find(&needle)?;
            let after = hit + needle.len();
            if text[after..].trim_start().starts_with(':') {
                pos = after;
                break;
            }
            from = after;
        }
    }
    Some(text[..pos].matches('\n').count() + 1)
}

/// Where a setting came from, for error messages.
struct Sources<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Sources<'_> {
    fn at(&self, keys: &[&str], flag: Option<&str>) -> String {
        if let Some(flag) = flag {
            return flag.to_string();
        }
        match key_line(self.text, keys) {
            Some(line) => format!("{}:{line}: {}", self.path.display(), keys.join(".")),
            None => format!("{}: {} (default)", self.path.display(), keys.join(".")),
        }
    }
}

fn trusted_max(metric: Metric, horizon: u64) -> u64 {
    let cutoff = horizon / TRUST_RATIO;
    match metric {
        Metric::Duration => cutoff,
        Metric::Intensity => cutoff / 2 + 1,
    }
}

fn default_grids(horizon: u64) -> Grids {
    let d = trusted_max(Metric::Duration, horizon).max(1);
    let n = trusted_max(Metric::Intensity, horizon).clamp(1, 200);
    Grids {
        duration: GridSpec::Log { lo: 1, hi: d, per_decade: 20 },
        intensity: GridSpec::Unit { lo: 1, hi: n },
    }
}

fn default_windows(horizon: u64) -> FitWindows {
    let d = trusted_max(Metric::Duration, horizon) as f64;
    let n = trusted_max(Metric::Intensity, horizon).min(200) as f64;
    FitWindows {
        duration: ((d / 100.0).max(1.0), d),
        intensity: (1.0, n),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(path, &text, overrides)
    }

    pub fn parse(path: &Path, text: &str, o: &Overrides) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text).map_err(|e| {
            CliError::config(format!("{}:{}:{}", path.display(), e.line(), e.column()), e.to_string())
        })?;
        let src = Sources { path, text };

        let horizon = o
            .horizon
            .or(o.preset.map(Preset::horizon))
            .or(file.horizon)
            .unwrap_or(Preset::Desk.horizon());
        let horizon_at = src.at(&["horizon"], o.horizon.map(|_| "--horizon").or(o.preset.map(|_| "--preset")));
        if horizon < TRUST_RATIO {
            return Err(CliError::config(
                horizon_at,
                format!("horizon must be at least {TRUST_RATIO} so that the trusted range is nonempty, got {horizon}"),
            ));
        }

        let n_runs = o.runs.or(o.preset.map(Preset::n_runs)).or(file.n_runs).unwrap_or(Preset::Desk.n_runs());
        if n_runs == 0 {
            let at = src.at(&["n_runs"], o.runs.map(|_| "--runs").or(o.preset.map(|_| "--preset")));
            return Err(CliError::config(at, "n_runs must be at least 1"));
        }

        let grids = file.grids.unwrap_or_else(|| default_grids(horizon));
        for (name, g) in [("duration", &grids.duration), ("intensity", &grids.intensity)] {
            if let Err(e) = g.build() {
                return Err(CliError::config(src.at(&["grids", name], None), e.to_string()));
            }
        }

        let windows = file.fit_windows.unwrap_or_else(|| default_windows(horizon));
        for (name, metric, (lo, hi)) in [
            ("duration", Metric::Duration, windows.duration),
            ("intensity", Metric::Intensity, windows.intensity),
        ] {
            let at = src.at(&["fit_windows", name], None);
            if !(lo.is_finite() && hi.is_finite() && lo >= 1.0 && lo < hi) {
                return Err(CliError::config(at, format!("window must satisfy 1 <= lo < hi, got [{lo}, {hi}]")));
            }
            let max = trusted_max(metric, horizon);
            if hi > max as f64 {
                return Err(CliError::config(
                    at,
                    format!(
                        "window upper end {hi} lies outside the trusted {} range (<= {max} for horizon {horizon})",
                        metric.as_str()
                    ),
                ));
            }
        }

        Ok(ExperimentConfig {
            params: file.params,
            horizon,
            n_runs,
            master_seed: o.seed.or(file.master_seed).unwrap_or(0),
            grids,
            fit_windows: windows,
            outputs: o.out.clone().or(file.outputs).unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    /// SHA-256 of the settings that determine the results, as lowercase hex.
    pub fn hash(&self) -> String {
        let view = Hashed {
            params: &self.params,
            horizon: self.horizon,
            n_runs: self.n_runs,
            master_seed: self.master_seed,
            grids: &self.grids,
            fit_windows: &self.fit_windows,
        };
        let bytes = serde_json::to_vec(&view).expect("config serializes");
        hex(&Sha256::digest(&bytes))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
  "params": { "beta": 1.5, "r": 1.0, "x0": [1, 1] },
  "horizon": 100000,
  "n_runs": 50,
  "master_seed": 7
}"#;

    fn parse(text: &str, o: &Overrides) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(Path::new("exp.json"), text, o)
    }

    fn message(r: Result<ExperimentConfig>) -> String {
        r.unwrap_err().to_string()
    }

    #[test]
    fn defaults_fill_in_from_horizon() {
        let c = parse(BASE, &Overrides::default()).unwrap();
        assert_eq!(c.n_runs, 50);
        assert_eq!(c.fit_windows.duration, (10.0, 1000.0));
        assert_eq!(c.grids.intensity, GridSpec::Unit { lo: 1, hi: 200 });
        assert_eq!(c.outputs, PathBuf::from("out"));
    }

    #[test]
    fn flags_beat_preset_beat_file() {
        let o = Overrides { preset: Some(Preset::Paper), runs: Some(3), ..Default::default() };
        let c = parse(BASE, &o).unwrap();
        assert_eq!((c.n_runs, c.horizon), (3, 10_000_000));
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let bad = BASE.replace("\"n_runs\": 50,", "\"n_runs\": 50,,");
        assert!(message(parse(&bad, &Overrides::default())).starts_with("exp.json:4:"));
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let bad = BASE.replace("\"master_seed\"", "\"seed\"");
        let msg = message(parse(&bad, &Overrides::default()));
        assert!(msg.starts_with("exp.json:5:") && msg.contains("unknown field"), "{msg}");
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = BASE.replace("\"r\": 1.0", "\"r\": 0.5");
        assert!(message(parse(&bad, &Overrides::default())).contains("at least 1"));
    }

    #[test]
    fn zero_runs_reported_at_key_or_flag() {
        let bad = BASE.replace("\"n_runs\": 50", "\"n_runs\": 0");
        assert!(message(parse(&bad, &Overrides::default())).starts_with("exp.json:4: n_runs"));
        let o = Overrides { runs: Some(0), ..Default::default() };
        assert!(message(parse(BASE, &o)).starts_with("--runs"));
    }

    #[test]
    fn window_outside_trusted_range_reported_at_its_line() {
        let text = BASE.replace(
            "\"master_seed\": 7",
            "\"master_seed\": 7,\n  \"fit_windows\": {\n    \"duration\": [10, 5000],\n    \"intensity\": [1, 20]\n  }",
        );
        let msg = message(parse(&text, &Overrides::default()));
        assert!(msg.starts_with("exp.json:7: fit_windows.duration"), "{msg}");
        assert!(msg.contains("trusted"));
    }

    #[test]
    fn hash_ignores_outputs_only() {
        let a = parse(BASE, &Overrides::default()).unwrap();
        let b = parse(BASE, &Overrides { out: Some("elsewhere".into()), ..Default::default() }).unwrap();
        let c = parse(BASE, &Overrides { seed: Some(8), ..Default::default() }).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn key_line_skips_values_that_look_like_keys() {
        let text = "{\n \"a\": \"b\",\n \"b\": 1\n}";
        assert_eq!(key_line(text, &["b"]), Some(3));
        assert_eq!(key_line(text, &["c"]), None);
    }
}
