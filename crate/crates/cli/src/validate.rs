//! Check suites: samplers against the exact chain, dominance couplings and
//! the intensity bound.

use std::collections::BTreeMap;

use serde::Serialize;
use urnlab::coupling::{coupled_equal_fitness, coupled_first_tie};
use urnlab::embedding::embedded_batch;
use urnlab::observables::{intensity_tail, unit_grid};
use urnlab::oracle::exact_state_distribution;
use urnlab::stats::chi_square_gof;
use urnlab::theory::intensity_upper_bound;
use urnlab::{derive_seed, simulate_batch, TieSummary, UrnParams};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Oracle,
    Embedding,
    Dominance,
    Bounds,
    All,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub check: String,
    pub pass: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub detail: String,
}

/// Scale of the sampling suites; `None` fields take the suite defaults.
#[derive(Debug, Clone, Copy, Default)]
pub struct Scale {
    pub runs: Option<u64>,
    pub horizon: Option<u64>,
    pub seed: u64,
}

pub const SIGNIFICANCE: f64 = 1e-3;
const ORACLE_T: u64 = 16;
const ORACLE_GRID: [(f64, f64); 6] = [(0.0, 1.0), (0.8, 1.0), (1.0, 1.0), (1.5, 1.0), (0.8, 1.2), (2.0, 1.2)];

fn equivalence<F>(suite: &'static str, scale: Scale, sampler: F) -> Result<Vec<Check>>
where
    F: Fn(&UrnParams, u64, u64, u64) -> urnlab::Result<Vec<TieSummary>>,
{
    let n = scale.runs.unwrap_or(100_000);
    let mut checks = Vec::new();
    for (i, &(beta, r)) in ORACLE_GRID.iter().enumerate() {
        let p = UrnParams::new(beta, r, (1, 1))?;
        let runs = sampler(&p, ORACLE_T, n, derive_seed(scale.seed, i as u64))?;
        let exact = exact_state_distribution(&p, ORACLE_T)?;
        let mut counts: BTreeMap<(u64, u64), u64> = BTreeMap::new();
        for run in &runs {
            *counts.entry((run.final_state.x1, run.final_state.x2)).or_default() += 1;
        }
        let (obs, probs): (Vec<u64>, Vec<f64>) = exact
            .entries
            .iter()
            .map(|(s, &q)| (counts.remove(s).unwrap_or(0), q))
            .unzip();
        let (p_value, detail) = if counts.is_empty() {
            let test = chi_square_gof(&obs, &probs)?;
            (test.p_value, format!("chi2 {:.2} on {} dof, {n} runs", test.statistic, test.dof))
        } else {
            (0.0, format!("{} unreachable states observed", counts.len()))
        };
        checks.push(Check {
            suite,
            check: format!("beta={beta} r={r} t={ORACLE_T}"),
            pass: p_value > SIGNIFICANCE,
            statistic: p_value,
            threshold: SIGNIFICANCE,
            detail,
        });
    }
    Ok(checks)
}

fn dominance(scale: Scale) -> Result<Vec<Check>> {
    let pairs = scale.runs.unwrap_or(1_000);
    let horizon = scale.horizon.unwrap_or(10_000);
    let mut checks = Vec::new();
    let mut push = |check: String, violations: u64, kind: &str| {
        checks.push(Check {
            suite: "dominance",
            check,
            pass: violations == 0,
            statistic: violations as f64,
            threshold: 0.0,
            detail: format!("{violations} {kind} violations over {pairs} pairs, horizon {horizon}"),
        })
    };
    for (k, &(strong, weak, x0)) in [(2.0, 1.5, (1, 1)), (1.5, 1.0, (2, 1)), (1.0, 0.4, (3, 3))].iter().enumerate() {
        let (a, b) = (UrnParams::new(strong, 1.0, x0)?, UrnParams::new(weak, 1.0, x0)?);
        let mut v = 0;
        for i in 0..pairs {
            v += coupled_equal_fitness(&a, &b, horizon, derive_seed(scale.seed ^ (100 + k as u64), i))?.violations();
        }
        push(format!("equal fitness beta {strong} vs {weak}, x0 {x0:?}"), v, "tie-set inclusion");
    }
    let first_tie = [
        ((2.0, 1.5, (3, 1)), (1.5, 1.2, (2, 1))),
        ((1.5, 1.2, (4, 1)), (1.5, 1.2, (3, 2))),
        ((2.0, 1.2, (1, 4)), (1.5, 1.2, (2, 3))),
    ];
    for (k, &((ba, ra, xa), (bb, rb, xb))) in first_tie.iter().enumerate() {
        let (a, b) = (UrnParams::new(ba, ra, xa)?, UrnParams::new(bb, rb, xb)?);
        let mut v = 0;
        for i in 0..pairs {
            v += coupled_first_tie(&a, &b, horizon, derive_seed(scale.seed ^ (200 + k as u64), i))?.violations();
        }
        push(format!("first tie ({ba}, {ra}, {xa:?}) vs ({bb}, {rb}, {xb:?})"), v, "first-tie order");
    }
    Ok(checks)
}

fn bounds(scale: Scale) -> Result<Vec<Check>> {
    let n = scale.runs.unwrap_or(10_000);
    let horizon = scale.horizon.unwrap_or(10_000);
    let r = 1.2;
    let grid = unit_grid(1, 60)?;
    let mut checks = Vec::new();
    for (i, &beta) in [0.5, 1.0, 2.0].iter().enumerate() {
        let p = UrnParams::new(beta, r, (1, 1))?;
        let runs = simulate_batch(&p, horizon, n, derive_seed(scale.seed ^ 300, i as u64))?;
        let curve = intensity_tail(&runs, &grid)?;
        // largest excess of the empirical curve over the bound, in standard errors
        let mut worst = f64::NEG_INFINITY;
        for (k, &m) in curve.grid.iter().enumerate() {
            let bound = intensity_upper_bound(beta, r, (1, 1), m)?;
            let excess = curve.ccdf[k] - bound;
            let z = match curve.stderr[k] {
                sd if sd > 0.0 => excess / sd,
                _ if excess > 0.0 => f64::INFINITY,
                _ => f64::NEG_INFINITY,
            };
            worst = worst.max(z);
        }
        checks.push(Check {
            suite: "bounds",
            check: format!("intensity bound beta={beta} r={r}"),
            pass: worst <= 3.0,
            statistic: worst,
            threshold: 3.0,
            detail: format!("max (ccdf - bound) / sd over n in 1..=60, {n} runs, horizon {horizon}"),
        });
    }
    Ok(checks)
}

pub fn validate(suite: Suite, scale: Scale) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Oracle {
        checks.extend(equivalence("oracle", scale, simulate_batch)?);
    }
    if all || suite == Suite::Embedding {
        checks.extend(equivalence("embedding", scale, embedded_batch)?);
    }
    if all || suite == Suite::Dominance {
        checks.extend(dominance(scale)?);
    }
    if all || suite == Suite::Bounds {
        checks.extend(bounds(scale)?);
    }
    Ok(checks)
}
