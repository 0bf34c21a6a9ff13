//! Scenario catalog: per-scenario speeds, window lengths, and the bi-modal
//! Gaussian mixture describing the time-varying K-factor in dB.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Guard samples added on each side of the K-estimation window when deriving
/// the large-scale window: `s_ls = s_k + 2 * DELTA_S`.
pub const DELTA_S: usize = 50;

/// Antenna-pair to link-index mapping of the measurement layout, kept as a
/// documentation constant. The analyzed link is `link_index(3, 3) == 10`
/// (front-front).
pub fn link_index(n_tx: u32, n_rx: u32) -> u32 {
    4 * (n_tx - 1) + (5 - n_rx)
}

/// Two-component Gaussian mixture over K in dB. Component 1 is the nLOS mode
/// (lower mean), component 2 the LOS mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    /// Weight of component 1, in [0, 1].
    pub w: f64,
    pub mu1_db: f64,
    pub sigma1_db: f64,
    pub mu2_db: f64,
    pub sigma2_db: f64,
}

impl GmmParams {
    pub fn new(w: f64, mu1_db: f64, sigma1_db: f64, mu2_db: f64, sigma2_db: f64) -> Result<Self> {
        let p = GmmParams { w, mu1_db, sigma1_db, mu2_db, sigma2_db };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.w) {
            return Err(Error::InvalidArgument(format!("mixture weight w={} not in [0,1]", self.w)));
        }
        if self.sigma1_db <= 0.0 || self.sigma2_db <= 0.0 {
            return Err(Error::InvalidArgument("mixture sigmas must be positive".into()));
        }
        if self.mu1_db > self.mu2_db {
            return Err(Error::InvalidArgument(format!(
                "components must be ordered mu1 <= mu2, got {} > {}",
                self.mu1_db, self.mu2_db
            )));
        }
        Ok(())
    }

    /// Closed-form mean of the mixture in dB.
    pub fn mean_db(&self) -> f64 {
        self.w * self.mu1_db + (1.0 - self.w) * self.mu2_db
    }
}

/// Named scenario with its average speed, estimation windows, and K mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioProfile {
    pub name: String,
    pub avg_speed_mps: f64,
    /// Window length (samples) for K-factor estimation.
    pub s_k: usize,
    /// Window length (samples) for large-scale fading removal.
    pub s_ls: usize,
    pub gmm: GmmParams,
    /// Number of measurement runs behind the published parameters (metadata).
    #[serde(default)]
    pub runs: u32,
}

impl ScenarioProfile {
    pub fn validate(&self) -> Result<()> {
        if self.avg_speed_mps <= 0.0 {
            return Err(Error::InvalidArgument("avg_speed must be positive".into()));
        }
        if self.s_k == 0 || self.s_ls <= self.s_k {
            return Err(Error::InvalidArgument("need s_ls > s_k > 0".into()));
        }
        self.gmm.validate()
    }
}

fn profile(
    name: &str,
    avg_speed_mps: f64,
    s_k: usize,
    gmm: (f64, f64, f64, f64, f64),
    runs: u32,
) -> ScenarioProfile {
    let (w, mu1_db, sigma1_db, mu2_db, sigma2_db) = gmm;
    ScenarioProfile {
        name: name.to_string(),
        avg_speed_mps,
        s_k,
        s_ls: s_k + 2 * DELTA_S,
        gmm: GmmParams { w, mu1_db, sigma1_db, mu2_db, sigma2_db },
        runs,
    }
}

/// The ten published scenario rows. Road-crossing variants share the
/// road-crossing speed row; traffic-congestion variants use their respective
/// speed rows.
pub fn builtin_profiles() -> Vec<ScenarioProfile> {
    vec![
        profile("road crossing - suburban with traffic", 8.3, 2100, (0.27, -42.7, 7.5, 3.7, 5.2), 3),
        profile("road crossing - suburban without traffic", 8.3, 2100, (0.13, -43.0, 7.7, 4.5, 5.5), 11),
        profile("road crossing - urban single lane", 8.3, 2100, (0.51, -43.3, 6.6, -0.6, 5.6), 5),
        profile("road crossing - urban multiple lane", 8.3, 2100, (0.38, -41.1, 7.2, 0.1, 4.7), 5),
        profile("general los obstruction - highway", 27.8, 630, (0.05, -48.9, 7.9, 7.6, 7.5), 12),
        profile("merging lanes - rural", 22.2, 790, (0.03, -29.9, 21.7, 14.2, 4.2), 7),
        profile("traffic congestion - slow traffic", 5.5, 3100, (0.12, -43.1, 8.0, 4.4, 6.5), 11),
        profile("traffic congestion - approaching traffic jam", 16.7, 1050, (0.03, -49.2, 7.9, 8.1, 6.5), 7),
        profile("in-tunnel", 25.0, 700, (0.10, -43.1, 7.2, 4.7, 5.4), 7),
        profile("on-bridge", 27.8, 630, (0.44, 10.9, 3.2, 14.6, 4.2), 4),
    ]
}

/// Case-insensitive lookup in the builtin catalog.
pub fn find_profile(name: &str) -> Option<ScenarioProfile> {
    let want = name.trim().to_lowercase();
    builtin_profiles().into_iter().find(|p| p.name == want)
}

/// Window lengths for a user-defined scenario from the 100-wavelength rule:
/// `s_k = round(100 * (c / carrier_freq) / (avg_speed * t_s))`, `s_ls = s_k + 100`.
pub fn compute_window_lengths(avg_speed: f64, carrier_freq: f64, t_s: f64) -> Result<(usize, usize)> {
    if avg_speed <= 0.0 || carrier_freq <= 0.0 || t_s <= 0.0 {
        return Err(Error::InvalidArgument(
            "speed, carrier frequency, and snapshot interval must be positive".into(),
        ));
    }
    let wavelength = SPEED_OF_LIGHT / carrier_freq;
    let s_k = (100.0 * wavelength / (avg_speed * t_s)).round();
    if !s_k.is_finite() || s_k < 2.0 {
        return Err(Error::InvalidArgument(format!(
            "window of {s_k} samples is too short; lower the speed or shrink t_s"
        )));
    }
    let s_k = s_k as usize;
    Ok((s_k, s_k + 2 * DELTA_S))
}

/// Draw `count` i.i.d. K values (dB) from the mixture.
pub fn sample_k_values<R: Rng>(gmm: &GmmParams, count: usize, rng: &mut R) -> Result<Vec<f64>> {
    gmm.validate()?;
    let n1 = Normal::new(gmm.mu1_db, gmm.sigma1_db)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let n2 = Normal::new(gmm.mu2_db, gmm.sigma2_db)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok((0..count)
        .map(|_| {
            if rng.gen::<f64>() < gmm.w {
                n1.sample(rng)
            } else {
                n2.sample(rng)
            }
        })
        .collect())
}

pub fn profiles_to_json(profiles: &[ScenarioProfile]) -> Result<String> {
    Ok(serde_json::to_string_pretty(profiles)?)
}

pub fn profiles_from_json(json: &str) -> Result<Vec<ScenarioProfile>> {
    let profiles: Vec<ScenarioProfile> = serde_json::from_str(json)?;
    for p in &profiles {
        p.validate()?;
    }
    Ok(profiles)
}
