use statrs::distribution::{ContinuousCDF, Normal};

use super::ecdf::Cdf;
use crate::error::{Error, Result};
use crate::kfactor::{estimate_k_envelope, MomEstimate};

/// Rayleigh CDF with scale sigma: F(z) = 1 - exp(-z^2 / (2 sigma^2)).
pub fn rayleigh_cdf(z: f64, sigma: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        -(-z * z / (2.0 * sigma * sigma)).exp_m1()
    }
}

/// Moment fit of the Rayleigh scale: sigma^2 = mean(z^2) / 2.
pub fn fit_rayleigh(envelope: &[f64]) -> Result<f64> {
    if envelope.is_empty() {
        return Err(Error::InvalidArgument("empty envelope".into()));
    }
    if envelope.iter().any(|&z| z < 0.0 || !z.is_finite()) {
        return Err(Error::InvalidArgument("envelope samples must be finite and nonnegative".into()));
    }
    let ms = envelope.iter().map(|&z| z * z).sum::<f64>() / envelope.len() as f64;
    if ms <= 0.0 {
        return Err(Error::DegenerateInput("all-zero envelope".into()));
    }
    Ok((ms / 2.0).sqrt())
}

/// CDF of a noncentral chi-square with 2 degrees of freedom expressed as a
/// Poisson mixture of central chi-squares: P(W <= 2u) with Poisson mean
/// `pois_mean` (= noncentrality / 2).
fn noncentral_chisq2_cdf(pois_mean: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    // Poisson weight p_k and the central chi-square tail term run as
    // coupled recursions; products stay bounded, no overflow.
    let mut p = (-pois_mean).exp();
    let mut inner_term = (-u).exp();
    let mut inner_cum = inner_term;
    let mut cdf = 0.0;
    let mut pcum = p;
    let kmax = (pois_mean + 10.0 * pois_mean.sqrt() + 60.0) as usize;
    for k in 0..=kmax {
        cdf += p * (1.0 - inner_cum);
        if pcum > 1.0 - 1e-13 {
            break;
        }
        let kf = (k + 1) as f64;
        p *= pois_mean / kf;
        pcum += p;
        inner_term *= u / kf;
        inner_cum += inner_term;
    }
    cdf.clamp(0.0, 1.0)
}

/// First-order Marcum Q function, Q1(a, b) = P(Z > b) for a Rician variable
/// with noncentrality a and unit sigma.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    1.0 - noncentral_chisq2_cdf(a * a / 2.0, b * b / 2.0)
}

/// Rician envelope CDF from specular power r^2 and diffuse power 2 sigma^2.
pub fn rician_cdf(z: f64, specular_power: f64, diffuse_power: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let sigma2 = diffuse_power / 2.0;
    if sigma2 <= 0.0 {
        // degenerate: point mass at the specular amplitude
        return if z >= specular_power.sqrt() { 1.0 } else { 0.0 };
    }
    if specular_power <= 0.0 {
        return rayleigh_cdf(z, sigma2.sqrt());
    }
    let k_lin = specular_power / diffuse_power;
    if k_lin > 500.0 {
        // high-K limit: envelope is Gaussian around the specular amplitude
        let norm = Normal::new(specular_power.sqrt(), sigma2.sqrt()).expect("positive sigma");
        return norm.cdf(z);
    }
    noncentral_chisq2_cdf(k_lin, z * z / (2.0 * sigma2))
}

/// Rician envelope fit: the moment estimator applied to the squared
/// envelope, paired with the Marcum-Q-based CDF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianFit {
    pub estimate: MomEstimate,
}

impl RicianFit {
    pub fn cdf(&self, z: f64) -> f64 {
        rician_cdf(z, self.estimate.specular_power, self.estimate.diffuse_power)
    }
}

impl Cdf for RicianFit {
    fn cdf(&self, z: f64) -> f64 {
        RicianFit::cdf(self, z)
    }
}

pub fn fit_rician(envelope: &[f64]) -> Result<RicianFit> {
    if envelope.iter().any(|&z| z < 0.0 || !z.is_finite()) {
        return Err(Error::InvalidArgument("envelope samples must be finite and nonnegative".into()));
    }
    let estimate = estimate_k_envelope(envelope)?;
    Ok(RicianFit { estimate })
}
