use super::ecdf::{Cdf, EmpiricalCdf};
use crate::error::{Error, Result};

/// Weibull CDF: F(z) = 1 - exp(-(z/lambda)^k) for z >= 0.
pub fn weibull_cdf(z: f64, k: f64, lambda: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        -(-(z / lambda).powf(k)).exp_m1()
    }
}

/// Weibull-plot points: x = ln z, y = ln(-ln(1 - F(z))). On these axes a
/// Weibull sample falls on the line y = k x - k ln(lambda).
#[derive(Debug, Clone, PartialEq)]
pub struct WeibullPlot {
    pub points: Vec<(f64, f64)>,
    /// Nonpositive samples dropped before taking logs.
    pub dropped_nonpositive: usize,
}

pub fn weibull_linearize(emp: &EmpiricalCdf) -> Result<WeibullPlot> {
    let mut points = Vec::with_capacity(emp.len());
    let mut dropped_nonpositive = 0;
    for &z in emp.samples() {
        if z <= 0.0 {
            dropped_nonpositive += 1;
            continue;
        }
        let f = emp.cdf(z);
        if f >= 1.0 {
            // top sample(s) would map to ln(0)
            continue;
        }
        points.push((z.ln(), (-(1.0 - f).ln()).ln()));
    }
    if points.is_empty() {
        return Err(Error::DegenerateInput("no positive samples to linearize".into()));
    }
    points.dedup();
    Ok(WeibullPlot { points, dropped_nonpositive })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullFit {
    /// Shape.
    pub k: f64,
    /// Scale, same units as the data.
    pub lambda: f64,
    /// Coefficient of determination of the linearization.
    pub r2: f64,
}

impl Cdf for WeibullFit {
    fn cdf(&self, z: f64) -> f64 {
        weibull_cdf(z, self.k, self.lambda)
    }
}

/// Least-squares line through the Weibull-plot points; k is the slope and
/// lambda = exp(-intercept / k).
pub fn fit_weibull(envelope: &[f64]) -> Result<WeibullFit> {
    if envelope.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "need at least 8 samples, got {}",
            envelope.len()
        )));
    }
    let emp = EmpiricalCdf::new(envelope)?;
    let plot = weibull_linearize(&emp)?;
    let n = plot.points.len() as f64;
    let mx = plot.points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = plot.points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = plot.points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = plot.points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = plot.points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateInput("zero-variance envelope".into()));
    }
    let k = sxy / sxx;
    if k.is_nan() || k <= 0.0 {
        return Err(Error::DegenerateInput(format!("nonpositive fitted shape {k}")));
    }
    let intercept = my - k * mx;
    let lambda = (-intercept / k).exp();
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(WeibullFit { k, lambda, r2 })
}
