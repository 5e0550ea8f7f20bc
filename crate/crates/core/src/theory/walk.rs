//! Visits of the simple symmetric walk to the origin and the `Lambda_n` sum.
//!
//! The walk starts at distance `d0` from the origin; a start at the origin
//! counts as the first visit. `T_n` is the time of the `n`-th visit.

use statrs::function::beta::ln_beta;

use crate::error::{Result, UrnError};

fn check_indices(n: u64, ell: u64) -> Result<()> {
    if n == 0 {
        return Err(UrnError::InvalidArgument("visit index n must be at least 1".into()));
    }
    if ell + 1 < n {
        return Err(UrnError::InvalidArgument(format!(
            "the {n}-th visit needs ell >= {}, got {ell}",
            n - 1
        )));
    }
    Ok(())
}

/// `P[T_n = d0 + 2 ell]` by dynamic programming over time, distance from the
/// origin and visits so far. Cost is quadratic in the target time.
pub fn rw_nth_visit_pmf(n: u64, d0: u64, ell: u64) -> Result<f64> {
    check_indices(n, ell)?;
    let target = (d0 + 2 * ell) as usize;
    let n = n as usize;
    let width = d0 as usize + target + 2;
    // prob[v][d]: not yet at n visits, v visits so far, distance d
    let mut prob = vec![vec![0.0f64; width]; n];
    let start_visits = usize::from(d0 == 0);
    if start_visits == n {
        return Ok(if target == 0 { 1.0 } else { 0.0 });
    }
    prob[start_visits][d0 as usize] = 1.0;
    let mut next = prob.clone();
    for t in 1..=target {
        for row in next.iter_mut() {
            row.fill(0.0);
        }
        let mut absorbed = 0.0;
        for v in 0..n {
            for d in 0..width - 1 {
                let p = prob[v][d];
                if p == 0.0 {
                    continue;
                }
                if d == 0 {
                    next[v][1] += p;
                    continue;
                }
                next[v][d + 1] += 0.5 * p;
                if d == 1 {
                    if v + 1 == n {
                        absorbed += 0.5 * p;
                    } else {
                        next[v + 1][0] += 0.5 * p;
                    }
                } else {
                    next[v][d - 1] += 0.5 * p;
                }
            }
        }
        if t == target {
            return Ok(absorbed);
        }
        std::mem::swap(&mut prob, &mut next);
    }
    Ok(0.0)
}

/// Coefficients of `z^t`, `t = 0..=max_time`, in
/// `G_n(z; d0) = z^-d0 (1 - sqrt(1 - z^2))^(n + d0 - 1)`.
pub fn visit_generating_coefficients(n: u64, d0: u64, max_time: usize) -> Result<Vec<f64>> {
    check_indices(n, n - 1)?;
    let m = (n + d0 - 1) as usize;
    let d0 = d0 as usize;
    let degree = max_time + d0;
    // 1 - sqrt(1 - z^2) = sum_{k >= 1} C(2k, k) / ((2k - 1) 4^k) z^(2k)
    let mut base = vec![0.0; degree + 1];
    let mut central = 1.0; // C(2k, k) / 4^k
    for k in 1..=degree / 2 {
        central *= (2 * k - 1) as f64 / (2 * k) as f64;
        base[2 * k] = central / (2 * k - 1) as f64;
    }
    let mut power = vec![0.0; degree + 1];
    power[0] = 1.0;
    for _ in 0..m {
        let mut out = vec![0.0; degree + 1];
        for (i, &a) in power.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in base.iter().enumerate().take(degree + 1 - i) {
                out[i + j] += a * b;
            }
        }
        power = out;
    }
    Ok(power[d0..].to_vec())
}

/// `P[T_n = d0 + 2 ell]` in closed form. The time of the `n`-th visit is
/// `n - 1` plus a first passage to level `m = n + d0 - 1` at time `k`, and
/// `P[H_m = k] = (m / k) C(k, (k + m) / 2) 2^-k`.
pub fn nth_visit_pmf_closed_form(n: u64, d0: u64, ell: u64) -> Result<f64> {
    check_indices(n, ell)?;
    let m = n + d0 - 1;
    let k = d0 + 2 * ell + 1 - n;
    if m == 0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let (mf, kf) = (m as f64, k as f64);
    let up = ((k + m) / 2) as f64;
    let ln_choose = ln_gamma_int(kf) - ln_gamma_int(up) - ln_gamma_int(kf - up);
    Ok(((mf / kf).ln() + ln_choose - kf * std::f64::consts::LN_2).exp())
}

/// `ln(x!)`.
fn ln_gamma_int(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x + 1.0)
}

/// Smallest truncation point of the `Lambda_n` sum.
const MIN_TERMS: u64 = 4096;

/// `Lambda_n = sum_{ell >= n - 1} [B(x01 + ell, x01 + ell) / B(x01, x02) 2^(d0 + 2 ell)]^beta
/// P[T_n = d0 + 2 ell]` with `d0 = x01 - x02`.
///
/// Terms are advanced by exact ratios in log space. Past the truncation point
/// `L` the terms follow `A ell^-p (1 + c / ell)` with `p = (3 + beta) / 2`;
/// `A` and `c` are fitted at `L / 2` and `L` and the tail is integrated.
/// `L` doubles until the `c` correction is below `rel_tol` of the total.
pub fn lambda_n(beta: f64, x0: (u64, u64), n: u64, rel_tol: f64) -> Result<f64> {
    if !(beta > 0.5 && beta <= 1.0) {
        return Err(UrnError::RegimeMismatch(format!("Lambda_n needs beta in (1/2, 1], got {beta}")));
    }
    let (x01, x02) = x0;
    if x02 == 0 || x01 < x02 {
        return Err(UrnError::InvalidArgument(format!(
            "Lambda_n needs x01 >= x02 >= 1, got ({x01}, {x02})"
        )));
    }
    if n == 0 {
        return Err(UrnError::InvalidArgument("n must be at least 1".into()));
    }
    if !(rel_tol > 0.0) {
        return Err(UrnError::InvalidArgument("rel_tol must be positive".into()));
    }
    let d0 = x01 - x02;
    let m = n + d0 - 1;
    let ell0 = n - 1;
    let a0 = (x01 + ell0) as f64;
    let ln_w0 = ln_beta(a0, a0) - ln_beta(x01 as f64, x02 as f64)
        + (d0 + 2 * ell0) as f64 * std::f64::consts::LN_2;
    let ln_f0 = -(m as f64) * std::f64::consts::LN_2;
    let first = (beta * ln_w0 + ln_f0).exp();
    assert!(first.is_finite(), "Lambda_n leading term overflowed");
    if m == 0 {
        return Ok(first);
    }

    let p = 0.5 * (3.0 + beta);
    let mut ln_term = beta * ln_w0 + ln_f0;
    let mut ell = ell0;
    let mut k = m; // first-passage time of the current term
    let mut sum = 0.0;
    let mut limit = MIN_TERMS.max(64 * m * m) + ell0;
    let mut probe = (0.0, 0.0);
    loop {
        let half = ell0 + (limit - ell0) / 2;
        while ell <= limit {
            let term = ln_term.exp();
            sum += term;
            if ell == half {
                probe.0 = term;
            }
            if ell == limit {
                probe.1 = term;
            }
            let a = (x01 + ell) as f64;
            let j = ((k - m) / 2) as f64;
            let kf = k as f64;
            let ln_f_ratio = (kf * (kf + 1.0) / (4.0 * (j + 1.0) * (j + m as f64 + 1.0))).ln();
            ln_term += -beta * (0.5 / a).ln_1p() + ln_f_ratio;
            ell += 1;
            k += 2;
        }
        // fit term(l) = A l^-p + B l^-(p+1) through l1 = half and l2 = limit
        let (l1, l2) = (half as f64, limit as f64);
        let (u1, u2) = (probe.0 * l1.powf(p), probe.1 * l2.powf(p));
        let amp = (u2 * l2 - u1 * l1) / (l2 - l1);
        let b = u1 * l1 - amp * l1;
        let from = l2 + 0.5;
        let main = amp * from.powf(1.0 - p) / (p - 1.0);
        let correction = b * from.powf(-p) / p;
        let total = sum + main + correction;
        if correction.abs() <= rel_tol * total || limit - ell0 >= 1 << 36 {
            return Ok(total);
        }
        // the new midpoint is the old limit, already summed
        probe.0 = probe.1;
        limit = ell0 + 2 * (limit - ell0);
    }
}
