//! Characteristic functions of clock sums and the constant `K`.
//!
//! `Psi(s; beta, x, y) = prod_{j=x}^{y-1} (1 - i s / j^beta)^-1` is evaluated in
//! log space. Infinite tails `j >= J` are summed analytically from the power
//! series of `-log(1 - i a)` with Hurwitz zeta coefficients, where `J` is
//! large enough that `|s| / J^beta <= 1/2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::integrate;
use super::special::hurwitz_zeta;
use crate::error::{Result, UrnError};

/// Upper end of a clock-sum product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Upper {
    Finite(u64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValue {
    pub value: Complex64,
    /// First index handled by the analytic tail; `None` when the product was
    /// summed term by term.
    pub truncation: Option<u64>,
    /// Bound on the neglected part of the log-tail series.
    pub error_bound: f64,
}

/// Value, error bound, quadrature error estimate and truncations behind a `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    /// Largest `J` used by the product tails over the integration range.
    pub product_truncation: u64,
    /// Integration cutoff `S`.
    pub integral_truncation: f64,
    /// `|Im (1/2pi) int_{-S}^{S} Psi~|` with both half-lines evaluated directly.
    pub imag_residue: f64,
}

/// `-log(1 - i a)` summed over `j = x..y` with `a = s / j^beta`.
fn log_psi_direct(s: f64, beta: f64, x: u64, y: u64) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for j in x..y {
        let a = s / (j as f64).powf(beta);
        re -= 0.5 * (a * a).ln_1p();
        im += a.atan();
    }
    Complex64::new(re, im)
}

/// Smallest `J >= x` with `|s| / J^beta <= 1/2`, scaled by `j_scale`.
fn tail_start(s: f64, beta: f64, x: u64, j_scale: f64) -> u64 {
    let need = (2.0 * s.abs()).powf(1.0 / beta).ceil();
    let j = (j_scale * need).ceil().max(1.0) as u64;
    j.max(x)
}

/// Tail sums over `j >= big_j` of the real and imaginary parts of
/// `-log(1 - i s / j^beta)`. The imaginary part needs `beta > 1`.
fn log_tail(s: f64, beta: f64, big_j: u64, with_imag: bool) -> (Complex64, f64) {
    let a_j = s.abs() / (big_j as f64).powf(beta);
    debug_assert!(a_j <= 0.5 + 1e-12);
    let j = big_j as f64;
    let (mut re, mut im) = (0.0, 0.0);
    let mut bound = 0.0;
    // real part: sum_m (-1)^m s^{2m} zeta(2 m beta, J) / (2m)
    let mut sp = s * s;
    for m in 1..200 {
        let k = 2 * m;
        let z = hurwitz_zeta(k as f64 * beta, j);
        let term = sp * z / k as f64;
        re += if m % 2 == 1 { -term } else { term };
        if term < 1e-17 * re.abs().max(1e-300) || term == 0.0 {
            bound = term;
            break;
        }
        sp *= s * s;
    }
    if with_imag {
        // imaginary part: sum_m (-1)^m s^{2m+1} zeta((2m+1) beta, J) / (2m+1)
        let mut sp = s;
        for m in 0..200 {
            let k = 2 * m + 1;
            let z = hurwitz_zeta(k as f64 * beta, j);
            let term = sp * z / k as f64;
            im += if m % 2 == 0 { term } else { -term };
            if term.abs() < 1e-17 * im.abs().max(1e-300) || term == 0.0 {
                bound += term.abs();
                break;
            }
            sp *= s * s;
        }
    }
    (Complex64::new(re, im), bound)
}

fn validate(beta: f64, x: u64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(UrnError::InvalidParams(format!("beta must be finite and nonnegative, got {beta}")));
    }
    if x == 0 {
        return Err(UrnError::InvalidArgument("product index must start at 1 or above".into()));
    }
    Ok(())
}

/// `Psi(s; beta, x, y)`; `y = Infinite` requires `beta > 1`.
pub fn psi_product(s: f64, beta: f64, x: u64, y: Upper) -> Result<PsiValue> {
    psi_product_scaled(s, beta, x, y, 1.0)
}

fn psi_product_scaled(s: f64, beta: f64, x: u64, y: Upper, j_scale: f64) -> Result<PsiValue> {
    validate(beta, x)?;
    match y {
        Upper::Finite(y) => Ok(PsiValue {
            value: log_psi_direct(s, beta, x, y).exp(),
            truncation: None,
            error_bound: 0.0,
        }),
        Upper::Infinite => {
            if beta <= 1.0 {
                return Err(UrnError::InvalidArgument(format!(
                    "the infinite product diverges for beta = {beta} <= 1"
                )));
            }
            if s == 0.0 {
                return Ok(PsiValue { value: Complex64::new(1.0, 0.0), truncation: Some(x), error_bound: 0.0 });
            }
            let big_j = tail_start(s, beta, x, j_scale);
            let (tail, bound) = log_tail(s, beta, big_j, true);
            let value = (log_psi_direct(s, beta, x, big_j) + tail).exp();
            Ok(PsiValue { value, truncation: Some(big_j), error_bound: bound * value.norm() })
        }
    }
}

/// `prod_{j >= x} (1 + s^2 / j^(2 beta))^-1` for `beta > 1/2`.
pub fn abs_sq_tail(s: f64, beta: f64, x: u64) -> Result<f64> {
    Ok(abs_sq_tail_scaled(s, beta, x, 1.0)?.0)
}

fn abs_sq_tail_scaled(s: f64, beta: f64, x: u64, j_scale: f64) -> Result<(f64, u64)> {
    validate(beta, x)?;
    if beta <= 0.5 {
        return Err(UrnError::InvalidArgument(format!(
            "the squared-modulus product diverges for beta = {beta} <= 1/2"
        )));
    }
    if s == 0.0 {
        return Ok((1.0, x));
    }
    let big_j = tail_start(s, beta, x, j_scale);
    let (tail, _) = log_tail(s, beta, big_j, false);
    let log = 2.0 * (log_psi_direct(s, beta, x, big_j).re + tail.re);
    Ok((log.exp(), big_j))
}

/// The integrand of `K` for one of the two admissible parameter regions.
#[derive(Debug, Clone, Copy)]
struct PsiTilde {
    beta: f64,
    r: f64,
    x0: (u64, u64),
    j_scale: f64,
}

impl PsiTilde {
    fn new(beta: f64, r: f64, x0: (u64, u64), j_scale: f64) -> Result<Self> {
        validate(beta, x0.0.min(x0.1).max(1))?;
        if x0.0 == 0 || x0.1 == 0 {
            return Err(UrnError::InvalidParams("K needs positive initial counts".into()));
        }
        if !(r >= 1.0 && r.is_finite()) {
            return Err(UrnError::InvalidParams(format!("r must be at least 1, got {r}")));
        }
        let ok = beta > 1.0 || (beta > 0.5 && r == 1.0);
        if !ok {
            return Err(UrnError::RegimeMismatch(format!(
                "K is defined for beta > 1, or beta > 1/2 with r = 1; got beta = {beta}, r = {r}"
            )));
        }
        Ok(PsiTilde { beta, r, x0, j_scale })
    }

    /// Value and the tail index used.
    fn eval(&self, s: f64) -> (Complex64, u64) {
        let (x1, x2) = self.x0;
        if self.r == 1.0 {
            // Psi(s; x1, x2) |Psi(s; x2, inf)|^2, or the mirror image for x1 > x2
            let (lo, hi) = (x1.min(x2), x1.max(x2));
            let (h3, j) = abs_sq_tail_scaled(s, self.beta, hi, self.j_scale).expect("validated");
            let head = log_psi_direct(s, self.beta, lo, hi).exp();
            let head = if x1 <= x2 { head } else { head.conj() };
            (head * h3, j)
        } else {
            let a = psi_product_scaled(s, self.beta, x1, Upper::Infinite, self.j_scale).expect("validated");
            let b = psi_product_scaled(self.r * s, self.beta, x2, Upper::Infinite, self.j_scale)
                .expect("validated");
            (a.value * b.value.conj(), a.truncation.unwrap().max(b.truncation.unwrap()))
        }
    }

    /// Factors `(c, e)` with `|Psi~(s)| <= prod (1 + s^2 / c^2)^-e`, smallest `c` first.
    fn envelope(&self, count: usize) -> Vec<(f64, f64)> {
        let (x1, x2) = self.x0;
        let mut f = Vec::new();
        if self.r == 1.0 {
            let (lo, hi) = (x1.min(x2), x1.max(x2));
            for j in lo..hi {
                f.push(((j as f64).powf(self.beta), 0.5));
            }
            for j in hi..hi + count as u64 {
                f.push(((j as f64).powf(self.beta), 1.0));
            }
        } else {
            for j in x1..x1 + count as u64 {
                f.push(((j as f64).powf(self.beta), 0.5));
            }
            for j in x2..x2 + count as u64 {
                f.push(((j as f64).powf(self.beta) / self.r, 0.5));
            }
        }
        f.sort_by(|a, b| a.0.total_cmp(&b.0));
        f
    }

    /// Bound on `int_S^inf |Psi~(s)| ds` from the envelope factors with `c < S`.
    fn integral_tail_bound(&self, big_s: f64) -> f64 {
        let mut best = f64::INFINITY;
        let (mut log_c, mut q) = (0.0, 0.0);
        for (c, e) in self.envelope(64) {
            if c >= big_s {
                break;
            }
            log_c += 2.0 * e * c.ln();
            q += 2.0 * e;
            if q > 1.0 {
                let b = (log_c + (1.0 - q) * big_s.ln()).exp() / (q - 1.0);
                best = best.min(b);
            }
        }
        best
    }
}

/// Tuning of the truncations, used to check resolution independence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KResolution {
    /// Multiplier on the product-tail start `J`.
    pub j_scale: f64,
    /// Multiplier on the integration cutoff `S`.
    pub s_scale: f64,
}

impl Default for KResolution {
    fn default() -> Self {
        KResolution { j_scale: 1.0, s_scale: 1.0 }
    }
}

/// `K(beta, r, x0) = (1/2pi) int Psi~(s) ds`, certified to `tol`.
pub fn k_constant(beta: f64, r: f64, x0: (u64, u64), tol: f64) -> Result<QuadratureResult> {
    k_constant_with(beta, r, x0, tol, KResolution::default())
}

pub fn k_constant_with(
    beta: f64,
    r: f64,
    x0: (u64, u64),
    tol: f64,
    res: KResolution,
) -> Result<QuadratureResult> {
    if !(tol > 0.0) {
        return Err(UrnError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let psi = PsiTilde::new(beta, r, x0, res.j_scale)?;
    // K = (1/pi) int_0^inf Re Psi~; the cut at S costs at most bound / pi
    let tail_budget = 0.25 * tol * PI;
    let mut big_s = 1.0;
    while psi.integral_tail_bound(big_s) > tail_budget {
        big_s *= 1.25;
        if big_s > 1e9 {
            return Err(UrnError::NonConvergent { estimate: psi.integral_tail_bound(big_s) / PI, tol });
        }
    }
    big_s *= res.s_scale;
    let tail = psi.integral_tail_bound(big_s) / PI;
    let quad_tol = 0.25 * tol * PI;
    let max_j = std::cell::Cell::new(0u64);
    let re = integrate(
        |s| {
            let (v, j) = psi.eval(s);
            max_j.set(max_j.get().max(j));
            v.re
        },
        0.0,
        big_s,
        quad_tol,
        4000,
    );
    let im = integrate(
        |s| {
            let (a, _) = psi.eval(s);
            let (b, _) = psi.eval(-s);
            a.im + b.im
        },
        0.0,
        big_s,
        quad_tol,
        4000,
    );
    let value = re.value / PI;
    let abs_error_estimate = re.error / PI + tail + 64.0 * f64::EPSILON * value.abs();
    let result = QuadratureResult {
        value,
        abs_error_estimate,
        product_truncation: max_j.get(),
        integral_truncation: big_s,
        imag_residue: (im.value / (2.0 * PI)).abs(),
    };
    if !re.converged || abs_error_estimate > tol {
        return Err(UrnError::NonConvergent { estimate: abs_error_estimate, tol });
    }
    Ok(result)
}

/// `K` for `beta > 1` as `int_0^inf h1(z) h2(z) dz`, where `h1` is the density
/// of `S(x01, inf)` and `h2` that of `r S(x02, inf)`, each recovered from its
/// characteristic function by the trapezoid rule on the whole line.
pub fn k_constant_convolution(beta: f64, r: f64, x0: (u64, u64), tol: f64) -> Result<f64> {
    if beta <= 1.0 {
        return Err(UrnError::RegimeMismatch(format!(
            "the density route needs beta > 1, got {beta}"
        )));
    }
    PsiTilde::new(beta, r, x0, 1.0)?;
    let h1 = ClockSumDensity::new(beta, 1.0, x0.0, tol)?;
    let h2 = ClockSumDensity::new(beta, r, x0.1, tol)?;
    let z_max = h1.support.min(h2.support);
    let out = integrate(|z| h1.at(z) * h2.at(z), 0.0, z_max, 0.1 * tol, 2000);
    Ok(out.value)
}

/// Density of `scale * S(x, inf)` on `[0, support]` from cached cf samples.
struct ClockSumDensity {
    step: f64,
    /// `Psi(k step)` for `k >= 1`.
    samples: Vec<Complex64>,
    support: f64,
}

impl ClockSumDensity {
    fn new(beta: f64, scale: f64, x: u64, tol: f64) -> Result<Self> {
        // mean and sd of S(x, inf), then a support beyond which the mass is negligible
        let mean = scale * hurwitz_zeta(beta, x as f64);
        let sd = scale * hurwitz_zeta(2.0 * beta, x as f64).sqrt();
        let first_rate = (x as f64).powf(beta) / scale;
        let support = mean + 12.0 * sd + 40.0 / first_rate;
        // aliasing copies sit 2pi/step apart; the left copy falls on z < 0 where h = 0
        let step = 2.0 * PI / (2.0 * support);
        // truncate where the modulus envelope prod_{j<P} (j^beta / (scale s)) is below tol
        let mut samples = Vec::new();
        let mut k = 1u64;
        loop {
            let s = k as f64 * step;
            let v = psi_product(scale * s, beta, x, Upper::Infinite)?.value;
            samples.push(v);
            // the neglected samples add about (1/pi) int_s^inf |Psi| to h
            if v.norm() * s.max(1.0) < 1e-3 * tol && k > 16 {
                break;
            }
            k += 1;
            if k > 5_000_000 {
                return Err(UrnError::NonConvergent { estimate: v.norm(), tol });
            }
        }
        Ok(ClockSumDensity { step, samples, support })
    }

    fn at(&self, z: f64) -> f64 {
        // h(z) = (step / pi) [1/2 + sum_k Re(Psi(k step) e^{-i k step z})]
        let rot = Complex64::from_polar(1.0, -self.step * z);
        let mut phase = rot;
        let mut sum = 0.5;
        for v in &self.samples {
            sum += (v * phase).re;
            phase *= rot;
        }
        self.step / PI * sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta_fn(a: f64, b: f64) -> f64 {
        statrs::function::beta::beta(a, b)
    }

    #[test]
    fn psi_at_zero_and_symmetry() {
        let v = psi_product(0.0, 1.3, 2, Upper::Finite(40)).unwrap();
        assert_eq!(v.value, Complex64::new(1.0, 0.0));
        for &s in &[0.3, 1.7, 12.0] {
            for y in [Upper::Finite(30), Upper::Infinite] {
                let p = psi_product(s, 1.4, 2, y).unwrap().value;
                let m = psi_product(-s, 1.4, 2, y).unwrap().value;
                assert!((p - m.conj()).norm() < 1e-14);
                assert!(p.norm() <= 1.0);
            }
        }
    }

    #[test]
    fn modulus_matches_real_product() {
        let v = psi_product(1.0, 2.0, 1, Upper::Finite(50)).unwrap().value;
        let real: f64 = (1..50).map(|j| 1.0 / (1.0 + 1.0 / (j as f64).powi(4))).product();
        assert!((v.norm_sqr() - real).abs() < 1e-12);
    }

    #[test]
    fn direct_product_matches_complex_arithmetic() {
        let (s, beta) = (2.3, 0.8);
        let mut prod = Complex64::new(1.0, 0.0);
        for j in 3..60 {
            prod /= Complex64::new(1.0, -s / (j as f64).powf(beta));
        }
        let v = psi_product(s, beta, 3, Upper::Finite(60)).unwrap().value;
        assert!((v - prod).norm() < 1e-13);
    }

    #[test]
    fn analytic_tail_matches_long_product() {
        for &(s, beta, x) in &[(0.7, 1.5, 1u64), (5.0, 2.0, 2), (30.0, 1.2, 1)] {
            let v = psi_product(s, beta, x, Upper::Infinite).unwrap();
            let long = psi_product(s, beta, x, Upper::Finite(2_000_000)).unwrap().value;
            // the remaining tail past 2e6 contributes about s * zeta(beta, 2e6)
            let rest = s * hurwitz_zeta(beta, 2e6);
            assert!((v.value - long).norm() < 2.0 * rest + 1e-12, "{s} {beta}");
        }
        let sq = abs_sq_tail(3.0, 0.7, 2).unwrap();
        let direct: f64 = (2..3_000_000u64)
            .map(|j| (1.0 + 9.0 / (j as f64).powf(1.4)).recip().ln())
            .sum::<f64>()
            .exp();
        assert!((sq - direct).abs() < 1e-6);
    }

    #[test]
    fn divergent_requests_rejected() {
        assert!(psi_product(1.0, 1.0, 1, Upper::Infinite).is_err());
        assert!(abs_sq_tail(1.0, 0.5, 1).is_err());
        assert!(psi_product(1.0, 1.5, 0, Upper::Finite(4)).is_err());
        assert!(matches!(k_constant(0.9, 1.2, (1, 1), 1e-4), Err(UrnError::RegimeMismatch(_))));
        assert!(matches!(k_constant(0.5, 1.0, (1, 1), 1e-4), Err(UrnError::RegimeMismatch(_))));
    }

    #[test]
    fn linear_polya_closed_form() {
        // at beta = 1 the urn is Polya and K = 2^-(a+b) / B(a, b)
        for (a, b) in [(1u64, 1u64), (2, 1), (2, 2), (1, 3), (3, 2)] {
            let k = k_constant(1.0, 1.0, (a, b), 1e-7).unwrap();
            let exact = 2f64.powi(-((a + b) as i32)) / beta_fn(a as f64, b as f64);
            assert!((k.value - exact).abs() < 1e-6, "({a},{b}): {} vs {exact}", k.value);
            assert!(k.imag_residue < 1e-7);
        }
        let k = k_constant(1.0, 1.0, (2, 2), 1e-6).unwrap().value;
        assert!((k - 0.375).abs() < 1e-6);
    }

    #[test]
    fn k_positive_and_certified() {
        for &(beta, r, x0) in &[(2.0, 1.2, (1u64, 1u64)), (1.5, 1.0, (1, 1)), (0.7, 1.0, (2, 1)), (1.3, 2.0, (1, 3))] {
            let k = k_constant(beta, r, x0, 1e-5).unwrap();
            assert!(k.value > 0.0);
            assert!(k.abs_error_estimate <= 1e-5);
            assert!(k.imag_residue < 1e-5);
        }
    }

    #[test]
    fn k_mirror_symmetry_at_equal_fitness() {
        let a = k_constant(0.8, 1.0, (1, 3), 1e-7).unwrap().value;
        let b = k_constant(0.8, 1.0, (3, 1), 1e-7).unwrap().value;
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn k_stable_under_doubled_truncations() {
        let tol = 1e-4;
        let base = k_constant(1.5, 1.0, (1, 1), tol).unwrap();
        let fine = k_constant_with(1.5, 1.0, (1, 1), tol, KResolution { j_scale: 2.0, s_scale: 2.0 }).unwrap();
        assert!((base.value - fine.value).abs() < 2.0 * tol);
        assert!(fine.product_truncation > base.product_truncation);
    }

    #[test]
    fn density_route_agrees() {
        for &(beta, r, x0) in &[(1.5, 1.0, (1u64, 1u64)), (2.0, 1.2, (1, 1)), (1.8, 1.5, (2, 1))] {
            let tol = 1e-5;
            let k = k_constant(beta, r, x0, tol).unwrap().value;
            let alt = k_constant_convolution(beta, r, x0, tol).unwrap();
            assert!((k - alt).abs() < 10.0 * tol, "{beta} {r}: {k} vs {alt}");
        }
    }
}
