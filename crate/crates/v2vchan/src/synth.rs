//! Synthetic time-varying frequency responses with known tap statistics:
//! tap 0 Rician with a block-wise time-varying K-factor, taps 1..4 Rayleigh.
//! Serves as ground truth for the estimation pipeline.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::scenario::{sample_k_values, ScenarioProfile};
use crate::subband::hann_window;

pub const DEFAULT_N: usize = 769;
pub const DEFAULT_NC: usize = 33;
pub const DEFAULT_Q: usize = 24;
pub const DEFAULT_TS: f64 = 307.2e-6;
pub const DEFAULT_BANDWIDTH: f64 = 240e6;
pub const DEFAULT_FS: f64 = DEFAULT_BANDWIDTH / DEFAULT_N as f64;
pub const DEFAULT_FC: f64 = 5.6e9;

/// Phase drift of the specular path, in cycles per K-estimation window.
pub const DEFAULT_SPECULAR_DRIFT: f64 = 0.1;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Tail tap powers (linear) for taps 1..4: -10, -13, -16, -19 dB.
pub fn default_tail_pdp() -> Vec<f64> {
    [-10.0, -13.0, -16.0, -19.0].iter().map(|&d| db_to_linear(d)).collect()
}

/// Sampled time-varying frequency response, S snapshots by N frequency bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTransferFunction {
    /// Row-major [time][frequency].
    pub samples: Vec<Complex64>,
    pub s: usize,
    pub n: usize,
    pub t_s: f64,
    pub f_s: f64,
    pub carrier_freq: f64,
}

impl ChannelTransferFunction {
    pub fn at(&self, m: usize, b: usize) -> Complex64 {
        self.samples[m * self.n + b]
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.len() != self.s * self.n {
            return Err(Error::Format(format!(
                "sample buffer holds {} entries, expected {}x{}",
                self.samples.len(),
                self.s,
                self.n
            )));
        }
        if self.samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Format("non-finite CTF entry".into()));
        }
        Ok(())
    }
}

/// Piecewise-constant per-snapshot K trajectory in dB.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KTrajectory {
    pub k_db: Vec<f64>,
    pub block_length: usize,
}

impl KTrajectory {
    pub fn num_blocks(&self) -> usize {
        self.k_db.len().div_ceil(self.block_length)
    }

    pub fn block_values(&self) -> Vec<f64> {
        self.k_db.iter().step_by(self.block_length).copied().collect()
    }
}

/// Complex tap gains, row-major [time][tap].
#[derive(Debug, Clone, PartialEq)]
pub struct TapMatrix {
    pub h: Vec<Complex64>,
    pub s: usize,
    pub n_taps: usize,
}

impl TapMatrix {
    pub fn at(&self, m: usize, tap: usize) -> Complex64 {
        self.h[m * self.n_taps + tap]
    }
}

/// Everything needed for one reproducible synthesis run.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub profile: ScenarioProfile,
    pub duration_s: f64,
    /// Per-tap mean powers (linear) of taps 1..4.
    pub tail_pdp: Vec<f64>,
    /// Optional large-scale amplitude trajectory g[m].
    pub large_scale: Option<Vec<f64>>,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(profile: ScenarioProfile, duration_s: f64, seed: u64) -> Self {
        SynthSpec { profile, duration_s, tail_pdp: default_tail_pdp(), large_scale: None, seed }
    }

    pub fn snapshots(&self, t_s: f64) -> usize {
        (self.duration_s / t_s) as usize
    }
}

/// Draw one K value per stationarity block of `profile.s_k` snapshots.
pub fn generate_k_trajectory(profile: &ScenarioProfile, s: usize, seed: u64) -> Result<KTrajectory> {
    profile.validate()?;
    if s < profile.s_k {
        return Err(Error::InvalidArgument(format!(
            "need at least one block of {} snapshots, got {s}",
            profile.s_k
        )));
    }
    let blocks = s.div_ceil(profile.s_k);
    let mut k_db = Vec::with_capacity(s);
    for bi in 0..blocks {
        let mut rng = substream(seed, "ktraj", bi as u64);
        let k = sample_k_values(&profile.gmm, 1, &mut rng)?[0];
        let len = profile.s_k.min(s - k_db.len());
        k_db.extend(std::iter::repeat_n(k, len));
    }
    Ok(KTrajectory { k_db, block_length: profile.s_k })
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Generate tap gains for the trajectory. Tap 0 carries a specular component
/// of power `K/(1+K)` (with per-block random phase plus a slow linear drift)
/// and a diffuse component of power `1/(1+K)`, so its total power is 1 for
/// every K. Tail taps are zero-mean complex Gaussian with the given powers.
pub fn synth_taps(
    ktraj: &KTrajectory,
    tail_pdp: &[f64],
    seed: u64,
    drift_cycles: f64,
) -> Result<TapMatrix> {
    if tail_pdp.iter().any(|&p| p <= 0.0) {
        return Err(Error::InvalidArgument("tail tap powers must be positive".into()));
    }
    let s = ktraj.k_db.len();
    let block = ktraj.block_length;
    let n_taps = 1 + tail_pdp.len();
    let mut h = vec![Complex64::new(0.0, 0.0); s * n_taps];

    for bi in 0..s.div_ceil(block) {
        let start = bi * block;
        let end = (start + block).min(s);
        let mut rng = substream(seed, "taps", bi as u64);
        let block_phase: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        for m in start..end {
            let k_db = ktraj.k_db[m];
            let (r, sigma) = if k_db == f64::INFINITY {
                (1.0, 0.0)
            } else if k_db == f64::NEG_INFINITY {
                (0.0, std::f64::consts::FRAC_1_SQRT_2)
            } else {
                let k_lin = db_to_linear(k_db);
                ((k_lin / (1.0 + k_lin)).sqrt(), (0.5 / (1.0 + k_lin)).sqrt())
            };
            let phase = block_phase
                + std::f64::consts::TAU * drift_cycles * (m - start) as f64 / block as f64;
            let x = standard_normal(&mut rng);
            let y = standard_normal(&mut rng);
            h[m * n_taps] = Complex64::from_polar(r, phase) + Complex64::new(x, y) * sigma;
            for (t, &p) in tail_pdp.iter().enumerate() {
                let sd = (p / 2.0).sqrt();
                let x = standard_normal(&mut rng);
                let y = standard_normal(&mut rng);
                h[m * n_taps + 1 + t] = Complex64::new(x * sd, y * sd);
            }
        }
    }
    Ok(TapMatrix { h, s, n_taps })
}

/// Multiply every tap at snapshot m by the gain g[m].
pub fn apply_large_scale(taps: &TapMatrix, g: &[f64]) -> Result<TapMatrix> {
    if g.len() != taps.s {
        return Err(Error::InvalidArgument(format!(
            "gain trajectory length {} != snapshot count {}",
            g.len(),
            taps.s
        )));
    }
    if g.iter().any(|&x| x.is_nan() || x <= 0.0) {
        return Err(Error::InvalidArgument("large-scale gains must be positive".into()));
    }
    let mut out = taps.clone();
    for (row, &gain) in out.h.chunks_exact_mut(taps.n_taps).zip(g) {
        for z in row {
            *z *= gain;
        }
    }
    Ok(out)
}

/// Place taps into an N-bin transfer function so that the sub-band transform
/// (N_c-bin windowed IDFT) returns exactly the tap gains at delay bins
/// 0..n_taps in every sub-band.
///
/// The Hanning window is zero at c=0, which makes the delay-average component
/// of each sub-band CIR unobservable; tap amplitudes are offset by the
/// redistributed delay-average so the observable part lands exactly on the
/// tap grid. The remaining delay bins carry a constant floor of
/// |sum(taps)|^2/(N_c-n_taps)^2 per bin, roughly -29 dB below tap 0 with the
/// default PDP.
pub fn taps_to_ctf(
    taps: &TapMatrix,
    n: usize,
    n_c: usize,
    t_s: f64,
    f_s: f64,
    carrier_freq: f64,
) -> Result<ChannelTransferFunction> {
    if n_c < 2 || taps.n_taps >= n_c {
        return Err(Error::InvalidArgument(format!(
            "need n_c > n_taps, got n_c={n_c}, n_taps={}",
            taps.n_taps
        )));
    }
    if n < 2 * taps.n_taps || n < n_c || !(n - 1).is_multiple_of(n_c - 1) {
        return Err(Error::InvalidArgument(format!(
            "bin count {n} incompatible with sub-band size {n_c} (need (n-1) divisible by (n_c-1))"
        )));
    }
    let window = hann_window(n_c);
    let sqrt_nc = (n_c as f64).sqrt();
    let fft = FftPlanner::new().plan_fft_forward(n_c);
    let mut samples = vec![Complex64::new(0.0, 0.0); taps.s * n];
    let mut d = vec![Complex64::new(0.0, 0.0); n_c];

    for m in 0..taps.s {
        let row = &taps.h[m * taps.n_taps..(m + 1) * taps.n_taps];
        let total: Complex64 = row.iter().sum();
        let offset = total / (n_c - taps.n_taps) as f64;
        for (t, slot) in d.iter_mut().enumerate() {
            *slot = if t < taps.n_taps { row[t] + offset } else { Complex64::new(0.0, 0.0) };
        }
        fft.process(&mut d);
        // d now holds the forward DFT D[c]; invert the analysis window per bin
        let out = &mut samples[m * n..(m + 1) * n];
        out[0] = d[0] / sqrt_nc;
        for (b, slot) in out.iter_mut().enumerate().skip(1) {
            let c = (b - 1) % (n_c - 1) + 1;
            *slot = d[c] / (sqrt_nc * window[c]);
        }
    }
    Ok(ChannelTransferFunction { samples, s: taps.s, n, t_s, f_s, carrier_freq })
}

/// Full synthesis: trajectory, taps, optional large-scale gain, CTF.
pub fn synthesize(spec: &SynthSpec, n: usize, n_c: usize) -> Result<(ChannelTransferFunction, KTrajectory)> {
    let s = spec.snapshots(DEFAULT_TS);
    let ktraj = generate_k_trajectory(&spec.profile, s, spec.seed)?;
    let mut taps = synth_taps(&ktraj, &spec.tail_pdp, spec.seed, DEFAULT_SPECULAR_DRIFT)?;
    if let Some(g) = &spec.large_scale {
        taps = apply_large_scale(&taps, g)?;
    }
    let ctf = taps_to_ctf(&taps, n, n_c, DEFAULT_TS, DEFAULT_FS, DEFAULT_FC)?;
    Ok((ctf, ktraj))
}
