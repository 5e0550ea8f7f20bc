//! Analytic side: characteristic functions, the constant `K`, tail laws and
//! random-walk visit distributions.

pub mod asymptotics;
pub mod cf;
pub mod quadrature;
pub mod regime;
pub mod special;
pub mod walk;

pub use asymptotics::{
    duration_asymptote, first_visit_gaussian_bounds, intensity_upper_bound, no_return_prob, rho,
    tie_probability_scale, DurationAsymptote, FirstVisitBounds,
};
pub use cf::{
    k_constant, k_constant_convolution, k_constant_with, psi_product, KResolution, PsiValue,
    QuadratureResult, Upper,
};
pub use regime::{predict_regime, regime_report, DurationTail, IntensityTail, RegimePrediction, RegimeRow};
pub use special::std_normal_ccdf;
pub use walk::{lambda_n, rw_nth_visit_pmf};
