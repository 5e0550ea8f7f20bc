//! Exact small-horizon distributions by forward dynamic programming on the kernel.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, UrnError};
use crate::observables::{Metric, TailCurve};
use crate::urn::{color_one_probability, UrnParams};

pub const STATE_HORIZON_CAP: u64 = 64;
pub const AUGMENTED_HORIZON_CAP: u64 = 24;

/// Law of `X(t)`; keys are `(x1, x2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDistribution {
    pub t: u64,
    pub entries: BTreeMap<(u64, u64), f64>,
}

impl ExactDistribution {
    pub fn prob(&self, x1: u64, x2: u64) -> f64 {
        self.entries.get(&(x1, x2)).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Writes `t,x1,x2,prob` rows, without a header.
    pub fn write_csv_rows<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for (&(x1, x2), &p) in &self.entries {
            writeln!(out, "{},{},{},{:.17e}", self.t, x1, x2, p)?;
        }
        Ok(())
    }
}

fn check_cap(what: &'static str, horizon: u64, cap: u64) -> Result<()> {
    if horizon > cap {
        Err(UrnError::CapExceeded { what, horizon, cap })
    } else {
        Ok(())
    }
}

/// One forward step on a mass vector indexed by `x1 - x01`.
fn push(params: &UrnParams, t: u64, mass: &[f64]) -> Vec<f64> {
    let (x01, x02) = params.x0();
    let mut next = vec![0.0; mass.len() + 1];
    for (i, &m) in mass.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let x1 = x01 + i as u64;
        let x2 = x02 + (t - i as u64);
        let p1 = color_one_probability(x1, x2, params.beta(), params.r());
        next[i + 1] += m * p1;
        next[i] += m * (1.0 - p1);
    }
    next
}

/// Laws of `X(0), ..., X(t)`.
pub fn exact_state_distributions(params: &UrnParams, t: u64) -> Result<Vec<ExactDistribution>> {
    check_cap("exact_state_distribution", t, STATE_HORIZON_CAP)?;
    let (x01, x02) = params.x0();
    let mut mass = vec![1.0];
    let mut out = Vec::with_capacity(t as usize + 1);
    for s in 0..=t {
        if s > 0 {
            mass = push(params, s - 1, &mass);
        }
        let entries = mass
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(i, &m)| ((x01 + i as u64, x02 + s - i as u64), m))
            .collect();
        out.push(ExactDistribution { t: s, entries });
    }
    Ok(out)
}

pub fn exact_state_distribution(params: &UrnParams, t: u64) -> Result<ExactDistribution> {
    Ok(exact_state_distributions(params, t)?.pop().expect("nonempty"))
}

/// Writes the `t,x1,x2,prob` dump for all times up to `t`, with header.
pub fn write_state_csv<W: Write>(params: &UrnParams, t: u64, out: &mut W) -> Result<()> {
    let io_err = |e: io::Error| UrnError::InvalidArgument(format!("write failed: {e}"));
    writeln!(out, "t,x1,x2,prob").map_err(io_err)?;
    for d in exact_state_distributions(params, t)? {
        d.write_csv_rows(out).map_err(io_err)?;
    }
    Ok(())
}

/// `P[X1(t) = X2(t)]` for `t = 0..=horizon`.
pub fn exact_tie_time_probabilities(params: &UrnParams, horizon: u64) -> Result<BTreeMap<u64, f64>> {
    check_cap("exact_tie_time_probabilities", horizon, STATE_HORIZON_CAP)?;
    Ok(exact_state_distributions(params, horizon)?
        .into_iter()
        .map(|d| {
            let p = d
                .entries
                .iter()
                .filter(|((a, b), _)| a == b)
                .map(|(_, p)| p)
                .sum();
            (d.t, p)
        })
        .collect())
}

/// Exact law of the last tie up to the horizon or of `N_horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactTail {
    pub metric: Metric,
    pub horizon: u64,
    /// For duration, index `i` holds `P[last tie = i - 1]`, index 0 being
    /// "no tie" (`T_0 = -1`). For intensity, index `n` holds `P[N_horizon = n]`.
    pub pmf: Vec<f64>,
}

impl ExactTail {
    /// `P[metric >= v]`, with no-tie runs below every nonnegative value.
    pub fn ccdf_at(&self, v: u64) -> f64 {
        let start = match self.metric {
            Metric::Duration => v as usize + 1,
            Metric::Intensity => v as usize,
        };
        self.pmf.iter().skip(start).sum()
    }

    pub fn to_curve(&self, grid: &[u64]) -> Result<TailCurve> {
        let ccdf = grid.iter().map(|&v| self.ccdf_at(v)).collect();
        TailCurve::exact(self.metric, grid.to_vec(), ccdf, self.horizon)
    }
}

/// Augmented DP keyed by `(x1, last tie)` or `(x1, tie count)`.
pub fn exact_censored_tail(params: &UrnParams, horizon: u64, metric: Metric) -> Result<ExactTail> {
    check_cap("exact_censored_tail", horizon, AUGMENTED_HORIZON_CAP)?;
    let (x01, x02) = params.x0();
    // aux: last tie + 1 (0 = none) or tie count so far
    let mut mass: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    let tie0 = (x01 == x02) as u64;
    mass.insert((x01, tie0), 1.0);
    for t in 0..horizon {
        let mut next = BTreeMap::new();
        for (&(x1, aux), &m) in &mass {
            let x2 = x01 + x02 + t - x1;
            let p1 = color_one_probability(x1, x2, params.beta(), params.r());
            for (y1, y2, p) in [(x1 + 1, x2, p1), (x1, x2 + 1, 1.0 - p1)] {
                let aux = if y1 == y2 {
                    match metric {
                        Metric::Duration => t + 2,
                        Metric::Intensity => aux + 1,
                    }
                } else {
                    aux
                };
                *next.entry((y1, aux)).or_insert(0.0) += m * p;
            }
        }
        mass = next;
    }
    let mut pmf = vec![0.0; horizon as usize + 2];
    for ((_, aux), m) in mass {
        pmf[aux as usize] += m;
    }
    Ok(ExactTail {
        metric,
        horizon,
        pmf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(beta: f64, r: f64, x0: (u64, u64)) -> UrnParams {
        UrnParams::new(beta, r, x0).unwrap()
    }

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn two_step_examples() {
        let d = exact_state_distribution(&p(1.0, 1.0, (1, 1)), 2).unwrap();
        for s in [(3, 1), (2, 2), (1, 3)] {
            assert!((d.prob(s.0, s.1) - 1.0 / 3.0).abs() < 1e-15);
        }
        let d = exact_state_distribution(&p(0.0, 1.0, (1, 1)), 2).unwrap();
        assert_eq!(d.prob(3, 1), 0.25);
        assert_eq!(d.prob(2, 2), 0.5);
        assert_eq!(d.prob(1, 3), 0.25);
        let d = exact_state_distribution(&p(1.7, 1.3, (4, 2)), 0).unwrap();
        assert_eq!(d.entries.len(), 1);
        assert_eq!(d.prob(4, 2), 1.0);
    }

    #[test]
    fn mass_and_support() {
        for (beta, r, x0) in [(0.8, 1.2, (1, 1)), (2.0, 1.0, (3, 1)), (0.0, 1.5, (0, 0))] {
            let q = p(beta, r, x0);
            for d in exact_state_distributions(&q, 64).unwrap() {
                assert!((d.total_mass() - 1.0).abs() < 1e-12);
                for &(a, b) in d.entries.keys() {
                    assert_eq!(a + b, x0.0 + x0.1 + d.t);
                    assert!(a >= x0.0 && b >= x0.1);
                }
            }
        }
        assert!(exact_state_distribution(&p(1.0, 1.0, (1, 1)), 65).is_err());
    }

    #[test]
    fn polya_is_uniform() {
        let d = exact_state_distribution(&p(1.0, 1.0, (1, 1)), 40).unwrap();
        for x1 in 1..=41 {
            assert!((d.prob(x1, 42 - x1) - 1.0 / 41.0).abs() < 1e-13);
        }
    }

    #[test]
    fn tie_probabilities() {
        let q = p(1.0, 1.0, (1, 1));
        let ties = exact_tie_time_probabilities(&q, 20).unwrap();
        assert_eq!(ties[&0], 1.0);
        assert!((ties[&2] - 1.0 / 3.0).abs() < 1e-15);
        for t in (1..20).step_by(2) {
            assert_eq!(ties[&t], 0.0);
        }
        // random walk: P[tie at t] = C(t, t/2 + d/2) p^a q^b for start offset d
        let r = 1.4;
        let pr = r / (r + 1.0);
        let q = p(0.0, r, (3, 1));
        let ties = exact_tie_time_probabilities(&q, 64).unwrap();
        for t in (2..=64u64).step_by(2) {
            let up = (t - 2) / 2;
            let expect = binom(t, up) * pr.powi(up as i32) * (1.0 - pr).powi((t - up) as i32);
            assert!((ties[&t] - expect).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn augmented_examples() {
        let n = exact_censored_tail(&p(0.0, 1.0, (1, 1)), 2, Metric::Intensity).unwrap();
        assert!((n.ccdf_at(2) - 0.5).abs() < 1e-15);
        assert_eq!(n.ccdf_at(1), 1.0);
        let n = exact_censored_tail(&p(1.0, 1.0, (1, 1)), 2, Metric::Intensity).unwrap();
        assert!((n.ccdf_at(2) - 1.0 / 3.0).abs() < 1e-15);
        assert!(exact_censored_tail(&p(1.0, 1.0, (1, 1)), 25, Metric::Duration).is_err());
    }

    #[test]
    fn augmented_consistency() {
        let q = p(1.3, 1.1, (2, 1));
        let h = 24;
        let dur = exact_censored_tail(&q, h, Metric::Duration).unwrap();
        let int = exact_censored_tail(&q, h, Metric::Intensity).unwrap();
        assert!((dur.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((int.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // no tie ever <=> N = 0
        assert!((dur.pmf[0] - int.pmf[0]).abs() < 1e-14);
        // P[last tie = h] = P[tie at h]
        let ties = exact_tie_time_probabilities(&q, h).unwrap();
        assert!((dur.pmf[h as usize + 1] - ties[&h]).abs() < 1e-14);
        // E[N_h] = sum of tie probabilities
        let mean: f64 = int.pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        let sum: f64 = ties.values().sum();
        assert!((mean - sum).abs() < 1e-12);
        for n in 1..int.pmf.len() as u64 {
            assert!(int.ccdf_at(n) <= int.ccdf_at(n - 1) + 1e-15);
        }
    }

    #[test]
    fn csv_dump() {
        let mut buf = Vec::new();
        write_state_csv(&p(1.0, 1.0, (1, 1)), 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2,prob");
        assert_eq!(lines.len(), 1 + 1 + 2 + 3);
        assert!(lines[1].starts_with("0,1,1,1.0"));
    }
}
