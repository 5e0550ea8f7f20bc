//! Tail curves and slope fits from stored run records.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use urnlab::observables::{
    conditional_duration_tails, duration_tail, fit_slope, intensity_tail, Scale, TailCurve, CSV_HEADER,
};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::records::{self, create};

#[derive(Debug, Serialize)]
pub struct FitRow {
    pub curve: String,
    pub scale: &'static str,
    pub window_lo: f64,
    pub window_hi: f64,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub residual_rms: Option<f64>,
    pub n_points: Option<usize>,
    pub note: String,
}

fn scale_name(scale: Scale) -> &'static str {
    match scale {
        Scale::LogLog => "log-log",
        Scale::SemiLog => "semi-log",
    }
}

fn fit_rows(name: &str, curve: &TailCurve, window: (f64, f64)) -> Vec<FitRow> {
    [Scale::LogLog, Scale::SemiLog]
        .into_iter()
        .map(|scale| {
            let fit = fit_slope(curve, window, scale);
            FitRow {
                curve: name.to_string(),
                scale: scale_name(scale),
                window_lo: window.0,
                window_hi: window.1,
                slope: fit.as_ref().ok().map(|f| f.slope),
                intercept: fit.as_ref().ok().map(|f| f.intercept),
                residual_rms: fit.as_ref().ok().map(|f| f.residual_rms),
                n_points: fit.as_ref().ok().map(|f| f.n_points),
                note: fit.err().map_or_else(String::new, |e| e.to_string()),
            }
        })
        .collect()
}

fn write_curve(path: &Path, hash: &str, curve: &TailCurve) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# config_hash={hash}")
        .and_then(|_| {
            writeln!(
                out,
                "# n_samples={} n_censored={} horizon={}",
                curve.n_samples, curve.n_censored, curve.horizon
            )
        })
        .and_then(|_| writeln!(out, "{CSV_HEADER}"))
        .and_then(|_| curve.write_csv_rows(&mut out))
        .and_then(|_| out.flush())
        .map_err(CliError::io(path))
}

/// Writes `# config_hash=` and then `rows` as CSV.
pub fn write_csv_with_hash<T: Serialize>(path: &Path, hash: &str, rows: &[T]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# config_hash={hash}").map_err(CliError::io(path))?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e.into() })?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Analyzes the records in `config.outputs`; returns the files written.
pub fn analyze(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let runs = records::load(&config.outputs, config)?;
    let hash = config.hash();
    let dir = &config.outputs;
    let duration_grid = config.grids.duration.build()?;
    let intensity_grid = config.grids.intensity.build()?;

    let mut written = Vec::new();
    let mut fits = Vec::new();
    let mut emit = |name: &str, curve: &TailCurve, window: (f64, f64), fits: &mut Vec<FitRow>| -> Result<()> {
        let path = dir.join(format!("{name}.csv"));
        write_curve(&path, &hash, curve)?;
        written.push(path);
        fits.extend(fit_rows(name, curve, window));
        Ok(())
    };

    emit("duration", &duration_tail(&runs, &duration_grid)?, config.fit_windows.duration, &mut fits)?;
    emit("intensity", &intensity_tail(&runs, &intensity_grid)?, config.fit_windows.intensity, &mut fits)?;
    if config.params.r() > 1.0 {
        let (one, two) = conditional_duration_tails(&runs, &duration_grid)?;
        emit("duration_leader1", &one, config.fit_windows.duration, &mut fits)?;
        emit("duration_leader2", &two, config.fit_windows.duration, &mut fits)?;
    }

    let path = dir.join("fits.csv");
    write_csv_with_hash(&path, &hash, &fits)?;
    written.push(path);
    Ok(written)
}
