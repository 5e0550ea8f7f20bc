//! Goodness-of-fit tests used to compare samplers with exact laws.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Result, UrnError};

/// Bins with a smaller expected count are pooled before the test.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson test of `observed` counts against cell probabilities `probs`.
/// Cells expecting fewer than [`MIN_EXPECTED`] counts are merged into one.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != probs.len() {
        return Err(UrnError::InvalidArgument("observed and probs differ in length".into()));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(UrnError::EmptyBatch);
    }
    let n = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * n;
        if e < MIN_EXPECTED {
            pooled_o += o as f64;
            pooled_e += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled_e > 0.0 || pooled_o > 0.0 {
        cells.push((pooled_o, pooled_e));
    }
    if cells.len() < 2 {
        return Err(UrnError::InvalidArgument("fewer than two cells after pooling".into()));
    }
    let statistic: f64 = cells
        .iter()
        .map(|&(o, e)| {
            if e == 0.0 {
                if o == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (o - e).powi(2) / e
            }
        })
        .sum();
    let dof = cells.len() - 1;
    let p_value = if statistic.is_finite() {
        let dist = ChiSquared::new(dof as f64).expect("positive dof");
        dist.sf(statistic)
    } else {
        0.0
    };
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(UrnError::EmptyBatch);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let sq = ne.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    })
}

/// Total-variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    (0..n)
        .map(|i| (p.get(i).unwrap_or(&0.0) - q.get(i).unwrap_or(&0.0)).abs())
        .sum::<f64>()
        / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_exact_fit() {
        let r = chi_square_gof(&[250, 500, 250], &[0.25, 0.5, 0.25]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 2);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_reference_value() {
        // statistic 4 with 1 dof: p = P[|Z| > 2]
        let r = chi_square_gof(&[60, 40], &[0.5, 0.5]).unwrap();
        assert!((r.statistic - 4.0).abs() < 1e-12);
        assert!((r.p_value - 0.045500263896).abs() < 1e-9);
    }

    #[test]
    fn chi_square_pools_sparse_cells() {
        let r = chi_square_gof(&[500, 495, 3, 2], &[0.5, 0.495, 0.003, 0.002]).unwrap();
        assert_eq!(r.dof, 2);
        let r = chi_square_gof(&[10, 0, 1], &[0.9, 0.0, 0.1]).unwrap();
        assert!(r.p_value > 0.5);
    }

    #[test]
    fn kolmogorov_values() {
        assert!((kolmogorov_sf(1.0) - 0.26999967).abs() < 1e-7);
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let b: Vec<f64> = a.iter().map(|x| x + 300.0).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert!((r.statistic - 0.3).abs() < 1e-12);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn tv_distance() {
        assert!((total_variation(&[0.5, 0.5], &[0.25, 0.75]) - 0.25).abs() < 1e-15);
        assert_eq!(total_variation(&[1.0], &[0.0, 1.0]), 1.0);
    }
}
