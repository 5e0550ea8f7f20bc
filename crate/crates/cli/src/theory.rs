//! Regime predictions, the constant `K` and the duration asymptote.

use serde::Serialize;
use urnlab::theory::{k_constant, predict_regime, DurationAsymptote, RegimePrediction};
use urnlab::UrnError;

#[derive(Debug, Serialize)]
pub struct KReport {
    pub value: f64,
    pub abs_error_estimate: f64,
}

#[derive(Debug, Serialize)]
pub struct AsymptoteReport {
    pub prefactor: f64,
    pub exponent: f64,
    /// `(t, prefactor * t^exponent)`
    pub values: Vec<(u64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct TheoryReport {
    pub regime: RegimePrediction,
    pub k: Option<KReport>,
    pub asymptote: Option<AsymptoteReport>,
    /// Failures of the numerical parts; the regime itself is always available.
    pub errors: Vec<String>,
}

const ASYMPTOTE_TIMES: [u64; 4] = [100, 1_000, 10_000, 100_000];

/// `K` exists for equal fitness above beta = 1/2 and for unequal fitness above beta = 1.
fn has_k(beta: f64, r: f64) -> bool {
    (r == 1.0 && beta > 0.5) || (r > 1.0 && beta > 1.0)
}

pub fn theory(beta: f64, r: f64, x0: (u64, u64), tol: f64) -> TheoryReport {
    let base = predict_regime(beta, r, x0);
    let mut errors = Vec::new();
    let mut note = |what: &str, e: UrnError| errors.push(format!("{what}: {e}"));

    let regime = match base.with_constants(tol) {
        Ok(p) => p,
        Err(e) => {
            note("regime constants", e);
            base
        }
    };
    let (mut k, mut asymptote) = (None, None);
    if has_k(base.beta, base.r) {
        match k_constant(base.beta, base.r, x0, tol) {
            Ok(q) => k = Some(KReport { value: q.value, abs_error_estimate: q.abs_error_estimate }),
            Err(e) => note("K", e),
        }
        match DurationAsymptote::new(base.beta, base.r, x0, tol) {
            Ok(a) => {
                asymptote = Some(AsymptoteReport {
                    prefactor: a.prefactor,
                    exponent: a.exponent,
                    values: ASYMPTOTE_TIMES.iter().map(|&t| (t, a.at(t as f64))).collect(),
                })
            }
            Err(e) => note("duration asymptote", e),
        }
    }
    TheoryReport { regime, k, asymptote, errors }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

pub fn render_text(rep: &TheoryReport) -> String {
    let p = &rep.regime;
    let row = p.row();
    let mut s = format!("beta {} r {} x0 ({}, {})\n", p.beta, p.r, p.x0.0, p.x0.1);
    s += &format!(
        "duration:  {} ({})\n",
        row.duration_family,
        serde_json::to_string(&p.duration_tail).expect("serializes")
    );
    s += &format!(
        "intensity: {} ({})\n",
        row.intensity_family,
        serde_json::to_string(&p.intensity_tail).expect("serializes")
    );
    s += &format!(
        "prefactors: duration {} intensity {}\n",
        opt(p.constants.duration_prefactor),
        opt(p.constants.intensity_prefactor)
    );
    if let Some(k) = &rep.k {
        s += &format!("K: {:.10} (+- {:.1e})\n", k.value, k.abs_error_estimate);
    }
    if let Some(a) = &rep.asymptote {
        s += &format!("P[T >= t] ~ {:.6} t^{:.4}\n", a.prefactor, a.exponent);
        for (t, v) in &a.values {
            s += &format!("  t = {t}: {v:.6e}\n");
        }
    }
    for e in &rep.errors {
        s += &format!("error: {e}\n");
    }
    s
}
