//! Empirical CDFs, Kolmogorov-Smirnov goodness of fit, envelope distribution
//! fits (Rayleigh, Rician, Weibull), and EM fitting of the bi-modal Gaussian
//! mixture over K samples.

mod ecdf;
mod envelope;
mod gmm;
mod weibull;

pub use ecdf::{empirical_cdf, ks_gof, Cdf, EmpiricalCdf};
pub use envelope::{
    fit_rayleigh, fit_rician, marcum_q1, rayleigh_cdf, rician_cdf, RicianFit,
};
pub use gmm::{
    fit_bimodal_gmm, fit_bimodal_gmm_traced, gmm_cdf, gmm_pdf, q_function, FitFlag, GmmFit,
};
pub use weibull::{fit_weibull, weibull_cdf, weibull_linearize, WeibullFit, WeibullPlot};

/// KS pass threshold for envelope fits.
pub const ENVELOPE_GOF_THRESHOLD: f64 = 0.04;
/// KS pass threshold for mixture fits over K samples.
pub const GMM_GOF_THRESHOLD: f64 = 0.06;
