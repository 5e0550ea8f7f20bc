//! Empirical tail curves of duration and intensity, and slope fits on log scales.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, UrnError};
use crate::urn::{Leader, TieSummary};

/// Grid points up to `horizon / TRUST_RATIO` are considered unaffected by censoring.
pub const TRUST_RATIO: u64 = 100;

/// Minimum number of points a slope fit needs.
pub const MIN_FIT_POINTS: usize = 10;

/// Points with `ccdf <= NOISE_FLOOR_COUNT / n_samples` are excluded from fits.
pub const NOISE_FLOOR_COUNT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Duration,
    Intensity,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Duration => "duration",
            Metric::Intensity => "intensity",
        }
    }

    /// Whether grid value `v` lies in the range a horizon-`horizon` run
    /// resolves reliably. The `n`-th tie cannot occur before `2(n - 1)`.
    pub fn trusted(&self, v: u64, horizon: u64) -> bool {
        let cutoff = horizon / TRUST_RATIO;
        match self {
            Metric::Duration => v <= cutoff,
            Metric::Intensity => 2 * v.saturating_sub(1) <= cutoff,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    LogLog,
    SemiLog,
}

/// Per-run quantities the tail estimators read.
pub trait TieRecord {
    fn last_tie(&self) -> Option<u64>;
    fn intensity(&self) -> u64;
    fn censored(&self) -> bool;
    fn horizon(&self) -> u64;
    fn leader(&self) -> Leader;
}

impl TieRecord for TieSummary {
    fn last_tie(&self) -> Option<u64> {
        self.last_tie
    }
    fn intensity(&self) -> u64 {
        self.intensity_observed
    }
    fn censored(&self) -> bool {
        self.censored
    }
    fn horizon(&self) -> u64 {
        self.final_state.t
    }
    fn leader(&self) -> Leader {
        self.final_state.leader()
    }
}

/// Estimates of `P[metric >= grid[i]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub metric: Metric,
    pub grid: Vec<u64>,
    pub ccdf: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Number of runs at or above each grid point; empty for exact curves.
    pub exceed: Vec<u64>,
    pub trusted: Vec<bool>,
    pub n_samples: u64,
    pub n_censored: u64,
    pub horizon: u64,
    pub censored_fraction: f64,
    /// Computed from a known law rather than from samples.
    pub exact: bool,
}

fn check_grid(grid: &[u64], horizon: u64) -> Result<()> {
    if grid.is_empty() {
        return Err(UrnError::InvalidGrid("grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(UrnError::InvalidGrid("grid must be strictly ascending".into()));
    }
    let max = *grid.last().unwrap();
    if max > horizon {
        return Err(UrnError::InvalidGrid(format!(
            "grid maximum {max} exceeds the horizon {horizon}"
        )));
    }
    Ok(())
}

impl TailCurve {
    fn from_counts(
        metric: Metric,
        grid: Vec<u64>,
        exceed: Vec<u64>,
        n_samples: u64,
        n_censored: u64,
        horizon: u64,
    ) -> Self {
        let n = n_samples as f64;
        let ccdf: Vec<f64> = exceed
            .iter()
            .map(|&c| if n_samples == 0 { 0.0 } else { c as f64 / n })
            .collect();
        let stderr = ccdf
            .iter()
            .map(|&p| if n_samples == 0 { 0.0 } else { (p * (1.0 - p) / n).sqrt() })
            .collect();
        let trusted = grid.iter().map(|&v| metric.trusted(v, horizon)).collect();
        TailCurve {
            metric,
            ccdf,
            stderr,
            exceed,
            trusted,
            n_samples,
            n_censored,
            horizon,
            censored_fraction: if n_samples == 0 { 0.0 } else { n_censored as f64 / n },
            exact: false,
            grid,
        }
    }

    /// A curve with known values and no sampling error.
    pub fn exact(metric: Metric, grid: Vec<u64>, ccdf: Vec<f64>, horizon: u64) -> Result<Self> {
        if grid.len() != ccdf.len() {
            return Err(UrnError::InvalidGrid("grid and ccdf lengths differ".into()));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(UrnError::InvalidGrid("grid must be strictly ascending".into()));
        }
        let trusted = grid.iter().map(|&v| metric.trusted(v, horizon)).collect();
        Ok(TailCurve {
            metric,
            stderr: vec![0.0; grid.len()],
            exceed: Vec::new(),
            trusted,
            n_samples: 0,
            n_censored: 0,
            horizon,
            censored_fraction: 0.0,
            exact: true,
            ccdf,
            grid,
        })
    }

    /// True for a curve built from zero runs.
    pub fn is_empty(&self) -> bool {
        !self.exact && self.n_samples == 0
    }

    pub fn value_at(&self, v: u64) -> Option<f64> {
        self.grid.binary_search(&v).ok().map(|i| self.ccdf[i])
    }

    /// Sums the counts of two curves over the same grid, as if the runs had
    /// been pooled into one batch.
    pub fn merge(&self, other: &TailCurve) -> Result<TailCurve> {
        if self.exact || other.exact {
            return Err(UrnError::InconsistentBatch("exact curves carry no counts".into()));
        }
        if self.metric != other.metric || self.grid != other.grid || self.horizon != other.horizon {
            return Err(UrnError::InconsistentBatch(
                "curves differ in metric, grid or horizon".into(),
            ));
        }
        let exceed = self.exceed.iter().zip(&other.exceed).map(|(a, b)| a + b).collect();
        Ok(TailCurve::from_counts(
            self.metric,
            self.grid.clone(),
            exceed,
            self.n_samples + other.n_samples,
            self.n_censored + other.n_censored,
            self.horizon,
        ))
    }

    /// Rows `metric,grid,ccdf,stderr,trusted`, without a header.
    pub fn write_csv_rows<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for i in 0..self.grid.len() {
            writeln!(
                out,
                "{},{},{:.10e},{:.10e},{}",
                self.metric.as_str(),
                self.grid[i],
                self.ccdf[i],
                self.stderr[i],
                self.trusted[i] as u8
            )?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: &str = "metric,grid,ccdf,stderr,trusted";

/// Distinct integers spaced evenly in log scale from `lo` to `hi`, both included.
pub fn log_grid(lo: u64, hi: u64, per_decade: usize) -> Result<Vec<u64>> {
    if lo == 0 || hi < lo || per_decade == 0 {
        return Err(UrnError::InvalidGrid(format!(
            "log grid needs 0 < lo <= hi and points per decade, got ({lo}, {hi}, {per_decade})"
        )));
    }
    let decades = (hi as f64 / lo as f64).log10();
    let steps = (decades * per_decade as f64).ceil().max(1.0) as usize;
    let mut grid: Vec<u64> = (0..=steps)
        .map(|k| {
            let v = lo as f64 * 10f64.powf(decades * k as f64 / steps as f64);
            (v.round() as u64).clamp(lo, hi)
        })
        .collect();
    grid.dedup();
    Ok(grid)
}

pub fn unit_grid(lo: u64, hi: u64) -> Result<Vec<u64>> {
    if hi < lo {
        return Err(UrnError::InvalidGrid(format!("empty range {lo}..={hi}")));
    }
    Ok((lo..=hi).collect())
}

fn tail_by<R: TieRecord>(
    runs: &[R],
    grid: &[u64],
    metric: Metric,
    horizon_hint: Option<u64>,
) -> Result<TailCurve> {
    let horizon = match (runs.first(), horizon_hint) {
        (Some(r), _) => r.horizon(),
        (None, Some(h)) => h,
        (None, None) => return Err(UrnError::EmptyBatch),
    };
    if runs.iter().any(|r| r.horizon() != horizon) {
        return Err(UrnError::InconsistentBatch("runs have different horizons".into()));
    }
    check_grid(grid, horizon)?;
    let mut exceed = vec![0u64; grid.len()];
    for r in runs {
        // index of the first grid point above the run's value
        let k = match metric {
            Metric::Duration => match r.last_tie() {
                Some(t) => grid.partition_point(|&g| g <= t),
                None => 0,
            },
            Metric::Intensity => grid.partition_point(|&g| g <= r.intensity()),
        };
        for c in &mut exceed[..k] {
            *c += 1;
        }
    }
    let n_censored = runs.iter().filter(|r| r.censored()).count() as u64;
    Ok(TailCurve::from_counts(
        metric,
        grid.to_vec(),
        exceed,
        runs.len() as u64,
        n_censored,
        horizon,
    ))
}

/// Fraction of runs whose last observed tie is at or after each grid point.
pub fn duration_tail<R: TieRecord>(runs: &[R], grid: &[u64]) -> Result<TailCurve> {
    tail_by(runs, grid, Metric::Duration, None)
}

/// Fraction of runs with at least `grid[i]` observed ties.
pub fn intensity_tail<R: TieRecord>(runs: &[R], grid: &[u64]) -> Result<TailCurve> {
    tail_by(runs, grid, Metric::Intensity, None)
}

/// Duration curves of the runs led by color 1 and by color 2 at the horizon.
/// Runs tied at the horizon belong to neither side; a side without runs gives
/// an empty curve.
pub fn conditional_duration_tails<R: TieRecord + Clone>(
    runs: &[R],
    grid: &[u64],
) -> Result<(TailCurve, TailCurve)> {
    let horizon = runs.first().ok_or(UrnError::EmptyBatch)?.horizon();
    let side = |leader: Leader| {
        let sub: Vec<R> = runs.iter().filter(|r| r.leader() == leader).cloned().collect();
        tail_by(&sub, grid, Metric::Duration, Some(horizon))
    };
    Ok((side(Leader::One)?, side(Leader::Two)?))
}

/// Least-squares line through the log-transformed curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub residual_rms: f64,
    pub scale: Scale,
    pub n_points: usize,
}

impl SlopeFit {
    /// The fitted `ccdf` at grid value `x`.
    pub fn predict(&self, x: f64) -> f64 {
        let u = match self.scale {
            Scale::LogLog => x.ln(),
            Scale::SemiLog => x,
        };
        (self.intercept + self.slope * u).exp()
    }
}

/// Ordinary least squares of `ys` on `xs`: `(slope, intercept, residual rms)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Fits `ln ccdf` against `ln grid` or `grid` over trusted points inside
/// `window` whose estimate is above the noise floor.
pub fn fit_slope(curve: &TailCurve, window: (f64, f64), scale: Scale) -> Result<SlopeFit> {
    let floor = if curve.exact {
        0.0
    } else {
        NOISE_FLOOR_COUNT / curve.n_samples.max(1) as f64
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..curve.grid.len())
        .filter(|&i| {
            let g = curve.grid[i] as f64;
            curve.trusted[i]
                && g >= window.0
                && g <= window.1
                && curve.ccdf[i] > floor
                && (scale == Scale::SemiLog || g > 0.0)
        })
        .map(|i| {
            let g = curve.grid[i] as f64;
            let x = match scale {
                Scale::LogLog => g.ln(),
                Scale::SemiLog => g,
            };
            (x, curve.ccdf[i].ln())
        })
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(UrnError::TooFewPoints {
            found: xs.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let (slope, intercept, residual_rms) = least_squares(&xs, &ys);
    Ok(SlopeFit {
        slope,
        intercept,
        window,
        residual_rms,
        scale,
        n_points: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone)]
    struct Rec {
        last: Option<u64>,
        n: u64,
        lead: Leader,
    }

    impl TieRecord for Rec {
        fn last_tie(&self) -> Option<u64> {
            self.last
        }
        fn intensity(&self) -> u64 {
            self.n
        }
        fn censored(&self) -> bool {
            false
        }
        fn horizon(&self) -> u64 {
            10
        }
        fn leader(&self) -> Leader {
            self.lead
        }
    }

    fn rec(last: Option<u64>, n: u64) -> Rec {
        Rec {
            last,
            n,
            lead: Leader::One,
        }
    }

    #[test]
    fn duration_counting() {
        let runs = [rec(Some(0), 1), rec(Some(4), 2), rec(Some(4), 3), rec(None, 0)];
        let c = duration_tail(&runs, &[1, 4]).unwrap();
        assert_eq!(c.ccdf, vec![0.5, 0.5]);
        assert!((c.stderr[0] - (0.25f64 / 4.0).sqrt()).abs() < 1e-15);
        let c = duration_tail(&runs[..3], &[0]).unwrap();
        assert_eq!(c.ccdf, vec![1.0]);
    }

    #[test]
    fn intensity_counting() {
        let runs = [rec(Some(0), 1), rec(Some(4), 3)];
        let c = intensity_tail(&runs, &[1, 2, 3]).unwrap();
        assert_eq!(c.ccdf, vec![1.0, 0.5, 0.5]);
    }

    #[test]
    fn grid_validation() {
        let runs = [rec(Some(0), 1)];
        assert!(duration_tail(&runs, &[3, 2]).is_err());
        assert!(duration_tail(&runs, &[11]).is_err());
        assert!(duration_tail::<Rec>(&[], &[1]).is_err());
    }

    #[test]
    fn trusted_range() {
        assert!(Metric::Duration.trusted(1000, 100_000));
        assert!(!Metric::Duration.trusted(1001, 100_000));
        assert!(Metric::Intensity.trusted(501, 100_000));
        assert!(!Metric::Intensity.trusted(502, 100_000));
    }

    #[test]
    fn merge_equals_pooled() {
        let runs: Vec<Rec> = (0..10).map(|i| rec(Some(i % 7), i % 4)).collect();
        let grid = [0, 1, 2, 3, 5, 6];
        let full = duration_tail(&runs, &grid).unwrap();
        let merged = duration_tail(&runs[..4], &grid)
            .unwrap()
            .merge(&duration_tail(&runs[4..], &grid).unwrap())
            .unwrap();
        assert_eq!(full, merged);
    }

    #[test]
    fn empty_side() {
        let runs = [rec(Some(2), 2)];
        let (one, two) = conditional_duration_tails(&runs, &[1, 2]).unwrap();
        assert!(!one.is_empty());
        assert!(two.is_empty());
        assert_eq!(two.ccdf, vec![0.0, 0.0]);
    }

    #[test]
    fn log_grids() {
        let g = log_grid(100, 10_000, 10).unwrap();
        assert_eq!(g[0], 100);
        assert_eq!(*g.last().unwrap(), 10_000);
        assert_eq!(g.len(), 21);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let g = log_grid(1, 30, 20).unwrap();
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(log_grid(0, 10, 3).is_err());
    }

    #[test]
    fn synthetic_power_law() {
        let grid = log_grid(10, 10_000, 10).unwrap();
        let ccdf = grid.iter().map(|&t| 1.0 / t as f64).collect();
        let c = TailCurve::exact(Metric::Duration, grid, ccdf, 1_000_000).unwrap();
        let fit = fit_slope(&c, (10.0, 1e4), Scale::LogLog).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-6);
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn synthetic_exponential() {
        let grid = unit_grid(1, 60).unwrap();
        let a = 2.0f64 / 2.2;
        let ccdf = grid.iter().map(|&n| a.powi(n as i32)).collect();
        let c = TailCurve::exact(Metric::Intensity, grid, ccdf, 100_000).unwrap();
        let fit = fit_slope(&c, (15.0, 50.0), Scale::SemiLog).unwrap();
        assert!((fit.slope - a.ln()).abs() < 1e-9);
        assert!((fit.slope + 0.09531).abs() < 1e-5);
        assert!((fit.predict(20.0) - a.powi(20)).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        let grid = unit_grid(1, 5).unwrap();
        let c = TailCurve::exact(Metric::Intensity, grid, vec![0.5; 5], 10_000).unwrap();
        assert!(matches!(
            fit_slope(&c, (0.0, 10.0), Scale::SemiLog),
            Err(UrnError::TooFewPoints { found: 5, .. })
        ));
    }

    #[test]
    fn csv_rows() {
        let c = TailCurve::exact(Metric::Duration, vec![1, 2000], vec![0.5, 0.25], 100_000).unwrap();
        let mut buf = Vec::new();
        c.write_csv_rows(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("duration,1,5.0"));
        assert!(lines[0].ends_with(",1"));
        assert!(lines[1].ends_with(",0"));
    }
}
