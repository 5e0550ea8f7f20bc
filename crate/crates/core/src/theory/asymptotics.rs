//! Asymptotic tail laws and bounds for durations and intensities.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::cf::k_constant;
use super::special::std_normal_ccdf;
use crate::error::{Result, UrnError};

/// Tolerance used for `K` when a caller does not supply one.
pub const DEFAULT_K_TOL: f64 = 1e-7;

/// `(x1 - x2) / sqrt(x1 + x2)`.
pub fn rho(x: (u64, u64)) -> Result<f64> {
    let total = x.0 + x.1;
    if total == 0 {
        return Err(UrnError::InvalidArgument("rho needs a nonempty urn".into()));
    }
    Ok((x.0 as f64 - x.1 as f64) / (total as f64).sqrt())
}

/// Asymptotic bounds on the probability of ever tying from `x` at equal fitness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstVisitBounds {
    pub lower: f64,
    pub upper: f64,
    /// Both bounds hold up to corrections of order `(x1 + x2)^-beta`.
    pub asymptotic: bool,
}

/// `2 Phibar(sqrt(2 beta - 1) |rho|)` and `2 Phibar((1 - eps) sqrt(2 beta - 1) |rho|)`.
pub fn first_visit_gaussian_bounds(x: (u64, u64), beta: f64, epsilon: f64) -> Result<FirstVisitBounds> {
    if !(beta > 0.5) {
        return Err(UrnError::RegimeMismatch(format!(
            "first-visit bounds need beta > 1/2, got {beta}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(UrnError::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let rho = rho(x)?.abs();
    let c2 = (2.0 * beta - 1.0).sqrt();
    let c1 = (1.0 - epsilon) * c2;
    Ok(FirstVisitBounds {
        lower: 2.0 * std_normal_ccdf(c2 * rho),
        upper: 2.0 * std_normal_ccdf(c1 * rho),
        asymptotic: true,
    })
}

/// `P[T >= t] ~ prefactor * t^exponent`, with the `K` it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationAsymptote {
    pub prefactor: f64,
    pub exponent: f64,
    pub k: f64,
    pub k_error: f64,
}

impl DurationAsymptote {
    /// Equal fitness: `2^(beta + 3/2) / sqrt((2 beta - 1) pi) K t^(1/2 - beta)`.
    /// Different fitness, `beta > 1`: `(r - 1) 2^(beta - 1) / (beta - 1) K t^(1 - beta)`.
    pub fn new(beta: f64, r: f64, x0: (u64, u64), k_tol: f64) -> Result<Self> {
        let (coef, exponent) = if r == 1.0 && beta > 0.5 {
            (
                2f64.powf(beta + 1.5) / ((2.0 * beta - 1.0) * PI).sqrt(),
                0.5 - beta,
            )
        } else if r > 1.0 && beta > 1.0 {
            ((r - 1.0) * 2f64.powf(beta - 1.0) / (beta - 1.0), 1.0 - beta)
        } else {
            return Err(UrnError::RegimeMismatch(format!(
                "no power-law duration asymptote for beta = {beta}, r = {r}"
            )));
        };
        let k = k_constant(beta, r, x0, k_tol)?;
        Ok(DurationAsymptote {
            prefactor: coef * k.value,
            exponent,
            k: k.value,
            k_error: k.abs_error_estimate,
        })
    }

    pub fn at(&self, t: f64) -> f64 {
        self.prefactor * t.powf(self.exponent)
    }
}

pub fn duration_asymptote(beta: f64, r: f64, x0: (u64, u64), t: f64) -> Result<f64> {
    Ok(DurationAsymptote::new(beta, r, x0, DEFAULT_K_TOL)?.at(t))
}

/// Large-`t` value of `t^beta P[X(t) = x]` near the diagonal at equal fitness.
pub fn tie_probability_scale(beta: f64, x0: (u64, u64), k_tol: f64) -> Result<f64> {
    if !(beta > 0.5) {
        return Err(UrnError::RegimeMismatch(format!("needs beta > 1/2, got {beta}")));
    }
    Ok(2f64.powf(beta + 1.0) * k_constant(beta, 1.0, x0, k_tol)?.value)
}

/// Probability that a walk stepping up with probability `r / (r + 1)` never
/// returns to its start: `(r - 1) / (r + 1)`.
pub fn no_return_prob(r: f64) -> Result<f64> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(UrnError::InvalidParams(format!("r must be at least 1, got {r}")));
    }
    Ok((r - 1.0) / (r + 1.0))
}

/// `r^-(x01 - x02)^+ (2 / (r + 1))^(n - 1)`, the same for every beta.
pub fn intensity_upper_bound(_beta: f64, r: f64, x0: (u64, u64), n: u64) -> Result<f64> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(UrnError::RegimeMismatch(format!("the intensity bound needs r > 1, got {r}")));
    }
    if n == 0 {
        return Err(UrnError::InvalidArgument("n must be at least 1".into()));
    }
    let lead = x0.0.saturating_sub(x0.1) as f64;
    Ok(r.powf(-lead) * (2.0 / (r + 1.0)).powf(n as f64 - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_values() {
        assert_eq!(rho((4, 4)).unwrap(), 0.0);
        assert_eq!(rho((9, 7)).unwrap(), 0.5);
        assert_eq!(rho((3, 8)).unwrap(), -rho((8, 3)).unwrap());
        assert!(rho((0, 0)).is_err());
    }

    #[test]
    fn first_visit_examples() {
        let b = first_visit_gaussian_bounds((50, 50), 1.5, 0.1).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
        for x in [(120, 80), (30, 2), (7, 9)] {
            let b = first_visit_gaussian_bounds(x, 0.8, 0.2).unwrap();
            assert!(b.lower <= b.upper && b.upper <= 1.0 && b.lower > 0.0);
        }
        assert!(first_visit_gaussian_bounds((3, 1), 0.5, 0.1).is_err());
    }

    #[test]
    fn asymptote_scaling() {
        let a = DurationAsymptote::new(1.5, 1.0, (1, 1), 1e-6).unwrap();
        assert!((a.at(2e3) / a.at(1e3) - 2f64.powf(-1.0)).abs() < 1e-14);
        let a = DurationAsymptote::new(2.0, 1.2, (1, 1), 1e-6).unwrap();
        assert!((a.at(2e3) / a.at(1e3) - 2f64.powf(-1.0)).abs() < 1e-14);
        let a = DurationAsymptote::new(1.3, 1.2, (1, 1), 1e-6).unwrap();
        assert!((a.at(2e3) / a.at(1e3) - 2f64.powf(-0.3)).abs() < 1e-14);
        assert!(DurationAsymptote::new(0.8, 1.2, (1, 1), 1e-6).is_err());
        assert!(DurationAsymptote::new(0.5, 1.0, (1, 1), 1e-6).is_err());
    }

    /// Polya urn at beta = 1 from (1, 1): the limit fraction `U` is uniform and,
    /// given `U = u`, the gap is a walk with drift `mu = 2u - 1`. With
    /// `mu = v / sqrt(t)` the chance of a zero after `t` is `2 Phibar(|v|)`, so
    /// `P[T >= t] ~ t^-1/2 (1/2) int 2 Phibar(|v|) dv = sqrt(2 / (pi t))`.
    #[test]
    fn linear_prefactor_matches_mixture_limit() {
        let a = DurationAsymptote::new(1.0, 1.0, (1, 1), 1e-8).unwrap();
        assert!((a.k - 0.25).abs() < 1e-7);
        let mixture = (2.0 / PI).sqrt();
        assert!((a.prefactor - mixture).abs() < 1e-6);
    }

    #[test]
    fn escape_and_intensity() {
        assert_eq!(no_return_prob(1.0).unwrap(), 0.0);
        assert!((no_return_prob(1.2).unwrap() - 1.0 / 11.0).abs() < 1e-15);
        assert!((1.0 - no_return_prob(1.7).unwrap() - 2.0 / 2.7).abs() < 1e-15);
        assert_eq!(intensity_upper_bound(1.0, 1.2, (3, 3), 1).unwrap(), 1.0);
        let v = intensity_upper_bound(0.3, 1.2, (2, 1), 3).unwrap();
        assert!((v - (1.0 / 1.2) * (2.0f64 / 2.2).powi(2)).abs() < 1e-15);
        assert!((v - 0.68871).abs() < 1e-5);
        assert_eq!(v, intensity_upper_bound(2.5, 1.2, (2, 1), 3).unwrap());
        assert!(intensity_upper_bound(1.0, 1.0, (1, 1), 2).is_err());
    }
}
