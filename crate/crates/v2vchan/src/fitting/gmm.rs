use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::ecdf::{empirical_cdf, ks_gof, Cdf};
use crate::error::{Error, Result};
use crate::scenario::GmmParams;

pub const EM_MAX_ITERATIONS: usize = 500;
pub const EM_LOGLIK_TOLERANCE: f64 = 1e-8;
pub const SIGMA_FLOOR_DB: f64 = 1e-3;
/// Below this mode separation the mixture is effectively a single Gaussian.
pub const UNIMODAL_SEPARATION_DB: f64 = 4.0;

/// Upper-tail probability of the standard normal.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-(z * z) / 2.0).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn gmm_pdf(params: &GmmParams, k_db: f64) -> f64 {
    params.w * normal_pdf(k_db, params.mu1_db, params.sigma1_db)
        + (1.0 - params.w) * normal_pdf(k_db, params.mu2_db, params.sigma2_db)
}

/// Mixture CDF via the Q-function:
/// P0(K) = w (1 - Q((K-mu1)/sigma1)) + (1-w)(1 - Q((K-mu2)/sigma2)).
pub fn gmm_cdf(params: &GmmParams, k_db: f64) -> f64 {
    params.w * (1.0 - q_function((k_db - params.mu1_db) / params.sigma1_db))
        + (1.0 - params.w) * (1.0 - q_function((k_db - params.mu2_db) / params.sigma2_db))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitFlag {
    NonConverged,
    SigmaFloored,
    NearUnimodal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmFit {
    pub params: GmmParams,
    /// KS distance between the sample ECDF and the fitted mixture CDF.
    pub epsilon: f64,
    pub iterations: usize,
    pub loglik: f64,
    pub flags: Vec<FitFlag>,
}

/// Two-component scalar EM over K samples in dB. Deterministic: components
/// are initialized from the two median-split halves, so repeated fits of the
/// same data are identical.
pub fn fit_bimodal_gmm(k_samples: &[f64]) -> Result<GmmFit> {
    fit_bimodal_gmm_traced(k_samples).map(|(fit, _)| fit)
}

/// As `fit_bimodal_gmm`, additionally returning the per-iteration
/// log-likelihood trace.
pub fn fit_bimodal_gmm_traced(k_samples: &[f64]) -> Result<(GmmFit, Vec<f64>)> {
    let data: Vec<f64> = k_samples.iter().copied().filter(|x| x.is_finite()).collect();
    if data.len() < 50 {
        return Err(Error::InsufficientData(format!(
            "mixture fit needs at least 50 finite samples, got {}",
            data.len()
        )));
    }
    let n = data.len();
    let mut sorted = data.clone();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let (lo, hi) = sorted.split_at(n / 2);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let sd = |xs: &[f64], mu: f64| {
        (xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / xs.len() as f64).sqrt()
    };

    let mut w = [0.5f64, 0.5];
    let mut mu = [mean(lo), mean(hi)];
    let mut sigma = [sd(lo, mu[0]).max(SIGMA_FLOOR_DB), sd(hi, mu[1]).max(SIGMA_FLOOR_DB)];
    let mut flags = Vec::new();
    let mut sigma_floored = false;

    let mut resp = vec![0.0f64; n];
    let mut loglik = f64::NEG_INFINITY;
    let mut iterations = EM_MAX_ITERATIONS;
    let mut converged = false;
    let mut trace = Vec::new();
    for it in 1..=EM_MAX_ITERATIONS {
        // E step
        let mut ll = 0.0;
        for (i, &x) in data.iter().enumerate() {
            let p1 = w[0] * normal_pdf(x, mu[0], sigma[0]);
            let p2 = w[1] * normal_pdf(x, mu[1], sigma[1]);
            let tot = p1 + p2;
            if tot > 0.0 {
                resp[i] = p1 / tot;
                ll += tot.ln();
            } else {
                // both densities underflowed; assign to the nearer mode
                resp[i] = if (x - mu[0]).abs() < (x - mu[1]).abs() { 1.0 } else { 0.0 };
                ll += f64::MIN_POSITIVE.ln();
            }
        }
        trace.push(ll);
        // M step
        let n1: f64 = resp.iter().sum();
        let n2 = n as f64 - n1;
        if n1 <= 0.0 || n2 <= 0.0 {
            flags.push(FitFlag::NearUnimodal);
            iterations = it;
            loglik = ll;
            converged = true;
            break;
        }
        let m1 = data.iter().zip(&resp).map(|(&x, &r)| r * x).sum::<f64>() / n1;
        let m2 = data.iter().zip(&resp).map(|(&x, &r)| (1.0 - r) * x).sum::<f64>() / n2;
        let v1 = data.iter().zip(&resp).map(|(&x, &r)| r * (x - m1) * (x - m1)).sum::<f64>() / n1;
        let v2 =
            data.iter().zip(&resp).map(|(&x, &r)| (1.0 - r) * (x - m2) * (x - m2)).sum::<f64>() / n2;
        w = [n1 / n as f64, n2 / n as f64];
        mu = [m1, m2];
        sigma = [v1.sqrt(), v2.sqrt()];
        for s in &mut sigma {
            if *s < SIGMA_FLOOR_DB {
                *s = SIGMA_FLOOR_DB;
                sigma_floored = true;
            }
        }

        if ll - loglik < EM_LOGLIK_TOLERANCE && it > 1 {
            loglik = ll;
            iterations = it;
            converged = true;
            break;
        }
        loglik = ll;
    }
    if !converged {
        flags.push(FitFlag::NonConverged);
    }
    if sigma_floored {
        flags.push(FitFlag::SigmaFloored);
    }

    // order components so mu1 <= mu2
    let (first, second) = if mu[0] <= mu[1] { (0, 1) } else { (1, 0) };
    let params = GmmParams {
        w: w[first],
        mu1_db: mu[first],
        sigma1_db: sigma[first],
        mu2_db: mu[second],
        sigma2_db: sigma[second],
    };
    if (params.mu2_db - params.mu1_db).abs() < UNIMODAL_SEPARATION_DB
        && !flags.contains(&FitFlag::NearUnimodal)
    {
        flags.push(FitFlag::NearUnimodal);
    }

    let emp = empirical_cdf(&data)?;
    let epsilon = ks_gof(&emp, &|z: f64| gmm_cdf(&params, z));
    Ok((GmmFit { params, epsilon, iterations, loglik, flags }, trace))
}

impl Cdf for GmmFit {
    fn cdf(&self, z: f64) -> f64 {
        gmm_cdf(&self.params, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::scenario::{find_profile, sample_k_values};

    #[test]
    fn single_component_reduces_to_gaussian() {
        let p = GmmParams { w: 1.0, mu1_db: -3.0, sigma1_db: 2.0, mu2_db: 0.0, sigma2_db: 1.0 };
        assert!((gmm_cdf(&p, -3.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn far_modes_cdf_plateau_equals_weight() {
        let p = find_profile("general los obstruction - highway").unwrap().gmm;
        let val = gmm_cdf(&p, -20.0);
        assert!((val - 0.05).abs() < 0.005, "{val}");
    }

    #[test]
    fn pdf_integrates_to_one() {
        let p = find_profile("road crossing - urban single lane").unwrap().gmm;
        let lo = p.mu1_db - 10.0 * p.sigma1_db;
        let hi = p.mu2_db + 10.0 * p.sigma2_db;
        let steps = 200_000;
        let dx = (hi - lo) / steps as f64;
        let mut integral = 0.0;
        for i in 0..=steps {
            let x = lo + i as f64 * dx;
            let weight = if i == 0 || i == steps { 0.5 } else { 1.0 };
            integral += weight * gmm_pdf(&p, x) * dx;
        }
        assert!((integral - 1.0).abs() < 1e-6, "{integral}");
    }

    #[test]
    fn cdf_is_monotone_with_proper_limits() {
        let p = find_profile("on-bridge").unwrap().gmm;
        let mut last = 0.0;
        for i in 0..1000 {
            let x = -60.0 + i as f64 * 0.12;
            let f = gmm_cdf(&p, x);
            assert!(f >= last - 1e-14);
            last = f;
        }
        assert!(gmm_cdf(&p, -200.0) < 1e-12);
        assert!(gmm_cdf(&p, 200.0) > 1.0 - 1e-12);
    }

    #[test]
    fn em_recovers_urban_single_lane_row() {
        let truth = find_profile("road crossing - urban single lane").unwrap().gmm;
        let samples = sample_k_values(&truth, 10_000, &mut substream(12, "em", 0)).unwrap();
        let fit = fit_bimodal_gmm(&samples).unwrap();
        let p = fit.params;
        assert!((p.w - truth.w).abs() < 0.03, "w {}", p.w);
        assert!((p.mu1_db - truth.mu1_db).abs() < 0.5, "mu1 {}", p.mu1_db);
        assert!((p.mu2_db - truth.mu2_db).abs() < 0.5, "mu2 {}", p.mu2_db);
        assert!((p.sigma1_db - truth.sigma1_db).abs() < 0.5, "s1 {}", p.sigma1_db);
        assert!((p.sigma2_db - truth.sigma2_db).abs() < 0.5, "s2 {}", p.sigma2_db);
        assert!(fit.epsilon < 0.02, "eps {}", fit.epsilon);
    }

    #[test]
    fn single_gaussian_data_is_flagged_near_unimodal() {
        let truth = GmmParams { w: 1.0, mu1_db: 5.0, sigma1_db: 2.0, mu2_db: 5.0, sigma2_db: 2.0 };
        let samples = sample_k_values(&truth, 5_000, &mut substream(3, "uni", 0)).unwrap();
        let fit = fit_bimodal_gmm(&samples).unwrap();
        assert!(
            fit.flags.contains(&FitFlag::NearUnimodal)
                || fit.params.w < 0.02
                || fit.params.w > 0.98,
            "{fit:?}"
        );
        assert!(fit.epsilon < 0.02);
    }

    #[test]
    fn too_few_samples_errors() {
        assert!(fit_bimodal_gmm(&vec![1.0; 49]).is_err());
        // non-finite entries do not count
        let mut v = vec![f64::NAN; 100];
        v.extend(vec![1.0; 30]);
        assert!(fit_bimodal_gmm(&v).is_err());
    }

    #[test]
    fn em_loglik_is_monotone() {
        let truth = find_profile("in-tunnel").unwrap().gmm;
        let samples = sample_k_values(&truth, 4_000, &mut substream(8, "ll", 0)).unwrap();
        let (fit, trace) = fit_bimodal_gmm_traced(&samples).unwrap();
        assert!(fit.loglik.is_finite());
        assert!(fit.params.mu1_db <= fit.params.mu2_db);
        for pair in trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "loglik decreased: {pair:?}");
        }
    }
}
