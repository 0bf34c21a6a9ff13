use crate::error::{Error, Result};

/// A cumulative distribution function that can be evaluated at a point and,
/// for step functions, at the point's left limit.
pub trait Cdf {
    fn cdf(&self, z: f64) -> f64;
    /// Left limit; defaults to `cdf` for continuous distributions.
    fn cdf_left(&self, z: f64) -> f64 {
        self.cdf(z)
    }
}

impl<F: Fn(f64) -> f64> Cdf for F {
    fn cdf(&self, z: f64) -> f64 {
        self(z)
    }
}

/// Step CDF of a finite sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "empirical CDF needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidArgument("NaN sample".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable_by(|a, b| a.total_cmp(b));
        Ok(EmpiricalCdf { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }
}

impl Cdf for EmpiricalCdf {
    /// F(z) = #{x <= z} / n.
    fn cdf(&self, z: f64) -> f64 {
        let le = self.sorted.partition_point(|&x| x <= z);
        le as f64 / self.sorted.len() as f64
    }

    fn cdf_left(&self, z: f64) -> f64 {
        let lt = self.sorted.partition_point(|&x| x < z);
        lt as f64 / self.sorted.len() as f64
    }
}

pub fn empirical_cdf(samples: &[f64]) -> Result<EmpiricalCdf> {
    EmpiricalCdf::new(samples)
}

/// Supremum distance between an empirical CDF and a reference CDF, checking
/// both one-sided gaps at every sample point.
pub fn ks_gof<C: Cdf + ?Sized>(emp: &EmpiricalCdf, reference: &C) -> f64 {
    let mut sup: f64 = 0.0;
    for &z in emp.samples() {
        let right = (emp.cdf(z) - reference.cdf(z)).abs();
        let left = (emp.cdf_left(z) - reference.cdf_left(z)).abs();
        sup = sup.max(right).max(left);
    }
    sup
}
