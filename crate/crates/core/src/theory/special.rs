//! Special functions: Hurwitz zeta and the normal tail.

/// `B_{2k}` for `k = 1..=10`.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Above this exponent the series is summed term by term.
const DIRECT_SIGMA: f64 = 20.0;

/// `zeta(sigma, a) = sum_{n >= 0} (a + n)^-sigma` for `sigma > 1`, `a > 0`.
pub fn hurwitz_zeta(sigma: f64, a: f64) -> f64 {
    assert!(sigma > 1.0 && a > 0.0, "hurwitz_zeta needs sigma > 1 and a > 0");
    if sigma >= DIRECT_SIGMA {
        let mut sum = 0.0;
        let mut n = 0.0;
        loop {
            let term = (a + n).powf(-sigma);
            sum += term;
            if term <= 1e-17 * sum {
                return sum;
            }
            n += 1.0;
        }
    }
    // Euler-Maclaurin after shifting the argument to at least 12 + sigma
    let shift = (12.0 + sigma - a).ceil().max(0.0) as u64;
    let mut sum: f64 = (0..shift).map(|n| (a + n as f64).powf(-sigma)).sum();
    let b = a + shift as f64;
    sum += b.powf(1.0 - sigma) / (sigma - 1.0) + 0.5 * b.powf(-sigma);
    // term k: B_2k / (2k)! * sigma (sigma + 1) ... (sigma + 2k - 2) * b^(-sigma - 2k + 1)
    let mut rising = sigma;
    let mut fact = 2.0;
    let mut power = b.powf(-sigma - 1.0);
    for (k, bern) in BERNOULLI_EVEN.iter().enumerate() {
        let term = bern / fact * rising * power;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let k2 = 2.0 * (k as f64 + 1.0);
        rising *= (sigma + k2 - 1.0) * (sigma + k2);
        fact *= (k2 + 1.0) * (k2 + 2.0);
        power /= b * b;
    }
    sum
}

/// `P[Z > z]` for a standard normal `Z`.
pub fn std_normal_ccdf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn riemann_values() {
        assert!((hurwitz_zeta(2.0, 1.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((hurwitz_zeta(3.0, 1.0) - 1.202_056_903_159_594_3).abs() < 1e-14);
        assert!((hurwitz_zeta(1.5, 1.0) - 2.612_375_348_685_488_3).abs() < 1e-13);
        assert!((hurwitz_zeta(4.0, 1.0) - PI.powi(4) / 90.0).abs() < 1e-14);
    }

    #[test]
    fn shift_identity() {
        for &s in &[1.1, 1.6, 2.4, 7.0, 19.9, 20.0, 35.0] {
            for &a in &[0.5, 1.0, 3.0, 11.0, 12.0, 250.0] {
                let lhs = hurwitz_zeta(s, a) - hurwitz_zeta(s, a + 1.0);
                let rhs = a.powf(-s);
                assert!(((lhs - rhs) / rhs).abs() < 1e-10, "s {s} a {a}");
            }
        }
    }

    #[test]
    fn large_argument_matches_integral() {
        // zeta(s, a) ~ a^(1-s)/(s-1) + a^-s/2 for large a
        let (s, a) = (1.2f64, 1e6f64);
        let approx = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
        assert!(((hurwitz_zeta(s, a) - approx) / approx).abs() < 1e-12);
    }

    /// `Phi(z) = 1/2 + phi(z) (z + z^3/3 + z^5/(3*5) + ...)`.
    fn normal_cdf_series(z: f64) -> f64 {
        let phi = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        let (mut term, mut sum) = (z, z);
        for k in 1..200 {
            term *= z * z / (2 * k + 1) as f64;
            sum += term;
        }
        0.5 + phi * sum
    }

    #[test]
    fn normal_tail() {
        assert_eq!(std_normal_ccdf(0.0), 0.5);
        assert!((std_normal_ccdf(1.959964) - 0.025).abs() < 1e-6);
        for &z in &[0.3, 1.0, 1.959964, 2.5, 4.0] {
            assert!((std_normal_ccdf(z) - (1.0 - normal_cdf_series(z))).abs() < 1e-12);
            let sum = std_normal_ccdf(z) + std_normal_ccdf(-z);
            assert!((sum - 1.0).abs() <= f64::EPSILON);
        }
    }
}
