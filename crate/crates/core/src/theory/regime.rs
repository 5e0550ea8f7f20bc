//! Tail regimes of duration and intensity over the `(beta, r)` plane.

use serde::{Deserialize, Serialize};

use super::asymptotics::DurationAsymptote;
use crate::error::Result;

/// Shape of `P[T >= t]` for large `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DurationTail {
    /// `T` is infinite almost surely.
    AlwaysInfinite,
    /// `Theta(t^exponent)`.
    PowerLaw { exponent: f64 },
    /// `limsup log P[T >= t] / t^shape <= rate`, with `rate < 0`.
    WeibullUpper { rate: f64, shape: f64 },
    /// Power law with exponent somewhere in `[lo_exp, hi_exp]`; `t^lo_exp` is a lower bound.
    PowerLawRange { lo_exp: f64, hi_exp: f64 },
}

/// Shape of `P[N >= n]` for large `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum IntensityTail {
    AlwaysInfinite,
    /// `Omega(n^lo_exp)` when `lo_exp` is known and `O(n^hi_exp)`.
    PowerLawBounds { lo_exp: Option<f64>, hi_exp: f64 },
    /// `O(exp(rate n))` with `rate = log(2 / (r + 1)) < 0`.
    Exponential { rate: f64 },
}

impl DurationTail {
    pub fn family(&self) -> &'static str {
        match self {
            DurationTail::AlwaysInfinite => "always-infinite",
            DurationTail::PowerLaw { .. } => "power-law",
            DurationTail::WeibullUpper { .. } => "weibull-upper",
            DurationTail::PowerLawRange { .. } => "power-law-range",
        }
    }

    /// Exponent, Weibull rate or the lower-bound exponent of a range.
    pub fn exponent_or_rate(&self) -> Option<f64> {
        match *self {
            DurationTail::AlwaysInfinite => None,
            DurationTail::PowerLaw { exponent } => Some(exponent),
            DurationTail::WeibullUpper { rate, .. } => Some(rate),
            DurationTail::PowerLawRange { lo_exp, .. } => Some(lo_exp),
        }
    }
}

impl IntensityTail {
    pub fn family(&self) -> &'static str {
        match self {
            IntensityTail::AlwaysInfinite => "always-infinite",
            IntensityTail::PowerLawBounds { .. } => "power-law-bounds",
            IntensityTail::Exponential { .. } => "exponential",
        }
    }

    /// Exponential rate, or the upper-bound exponent of a power law.
    pub fn rate(&self) -> Option<f64> {
        match *self {
            IntensityTail::AlwaysInfinite => None,
            IntensityTail::PowerLawBounds { hi_exp, .. } => Some(hi_exp),
            IntensityTail::Exponential { rate } => Some(rate),
        }
    }
}

/// Optional leading constants attached by [`RegimePrediction::with_constants`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegimeConstants {
    /// `c` in `P[T >= t] ~ c t^exponent`.
    pub duration_prefactor: Option<f64>,
    /// `c` in `P[N >= n] <= c exp(rate n)`.
    pub intensity_prefactor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimePrediction {
    pub beta: f64,
    pub r: f64,
    pub x0: (u64, u64),
    pub duration_tail: DurationTail,
    pub intensity_tail: IntensityTail,
    pub constants: RegimeConstants,
}

/// Flat row for regime reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub beta: f64,
    pub r: f64,
    pub duration_family: String,
    pub duration_exponent_or_rate: Option<f64>,
    pub intensity_family: String,
    pub intensity_rate: Option<f64>,
}

/// Tail regime of `(beta, r, x0)`. Total over `beta >= 0`, `r >= 1`; inputs
/// outside that range are clamped onto it (NaN `beta` is treated as 0).
pub fn predict_regime(beta: f64, r: f64, x0: (u64, u64)) -> RegimePrediction {
    let beta = if beta > 0.0 { beta } else { 0.0 };
    let r = if r > 1.0 { r } else { 1.0 };
    let x01 = x0.0 as f64;
    let (duration_tail, intensity_tail) = if r == 1.0 {
        if beta <= 0.5 {
            (DurationTail::AlwaysInfinite, IntensityTail::AlwaysInfinite)
        } else if beta < 1.0 {
            (
                DurationTail::PowerLaw { exponent: 0.5 - beta },
                IntensityTail::PowerLawBounds { lo_exp: Some(-beta), hi_exp: 0.5 - beta },
            )
        } else if beta == 1.0 {
            (
                DurationTail::PowerLaw { exponent: -0.5 },
                IntensityTail::PowerLawBounds { lo_exp: Some(-1.0), hi_exp: -1.0 },
            )
        } else {
            (
                DurationTail::PowerLaw { exponent: 0.5 - beta },
                IntensityTail::PowerLawBounds { lo_exp: None, hi_exp: -beta },
            )
        }
    } else {
        let duration = if beta < 1.0 {
            DurationTail::WeibullUpper {
                rate: (1.0 - r) / (1.0 - beta) * 2f64.powf(beta - 1.0) * x01.powf(beta),
                shape: 1.0 - beta,
            }
        } else if beta == 1.0 {
            DurationTail::PowerLawRange {
                lo_exp: (1.0 - r) * x01,
                hi_exp: (1.0 - r) * (x01 - 1.0 / r),
            }
        } else {
            DurationTail::PowerLaw { exponent: 1.0 - beta }
        };
        (duration, IntensityTail::Exponential { rate: (2.0 / (r + 1.0)).ln() })
    };
    RegimePrediction {
        beta,
        r,
        x0,
        duration_tail,
        intensity_tail,
        constants: RegimeConstants::default(),
    }
}

impl RegimePrediction {
    /// Fills in the prefactors that the theory determines: the duration
    /// constant through `K` (computed to `k_tol`) and the intensity bound constant.
    pub fn with_constants(mut self, k_tol: f64) -> Result<Self> {
        let has_duration_law = (self.r == 1.0 && self.beta > 0.5) || (self.r > 1.0 && self.beta > 1.0);
        if has_duration_law {
            let a = DurationAsymptote::new(self.beta, self.r, self.x0, k_tol)?;
            self.constants.duration_prefactor = Some(a.prefactor);
        }
        if let IntensityTail::Exponential { rate } = self.intensity_tail {
            let lead = self.x0.0.saturating_sub(self.x0.1) as f64;
            self.constants.intensity_prefactor = Some(self.r.powf(-lead) * (-rate).exp());
        }
        Ok(self)
    }

    pub fn row(&self) -> RegimeRow {
        RegimeRow {
            beta: self.beta,
            r: self.r,
            duration_family: self.duration_tail.family().to_string(),
            duration_exponent_or_rate: self.duration_tail.exponent_or_rate(),
            intensity_family: self.intensity_tail.family().to_string(),
            intensity_rate: self.intensity_tail.rate(),
        }
    }
}

/// Regime rows for every pair of the two grids, `beta` major.
pub fn regime_report(betas: &[f64], rs: &[f64], x0: (u64, u64)) -> Vec<RegimeRow> {
    betas
        .iter()
        .flat_map(|&b| rs.iter().map(move |&r| predict_regime(b, r, x0).row()))
        .collect()
}
