//! Sub-band preprocessing: windowed IDFT into per-sub-band impulse
//! responses, first-tap alignment, and large-scale fading removal.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::synth::ChannelTransferFunction;

/// Periodic Hanning window of length `n_c`, normalized to unit energy
/// (sum of squares = 1). W[0] = 0.
pub fn hann_window(n_c: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n_c)
        .map(|c| 0.5 * (1.0 - (std::f64::consts::TAU * c as f64 / n_c as f64).cos()))
        .collect();
    let energy: f64 = w.iter().map(|x| x * x).sum();
    let scale = energy.sqrt().recip();
    for x in &mut w {
        *x *= scale;
    }
    w
}

/// Per-sub-band complex impulse responses h[m, n; q], stored row-major
/// [time][sub-band][delay].
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandCir {
    pub h: Vec<Complex64>,
    pub s: usize,
    pub n_c: usize,
    pub q: usize,
    pub t_s: f64,
    pub f_s: f64,
    pub carrier_freq: f64,
}

impl SubbandCir {
    pub fn at(&self, m: usize, n: usize, q: usize) -> Complex64 {
        self.h[(m * self.q + q) * self.n_c + n]
    }

    /// Delay-domain samples of sub-band q at snapshot m.
    pub fn snapshot(&self, m: usize, q: usize) -> &[Complex64] {
        let base = (m * self.q + q) * self.n_c;
        &self.h[base..base + self.n_c]
    }

    /// Samples of one (delay, sub-band) cell across time.
    pub fn tap_series(&self, tap: usize, q: usize) -> Vec<Complex64> {
        (0..self.s).map(|m| self.at(m, tap, q)).collect()
    }

    /// Center frequency of sub-band q.
    pub fn subband_center_freq(&self, q: usize) -> f64 {
        let n = self.q * (self.n_c - 1) + 1;
        let bin = q as f64 * (self.n_c - 1) as f64 + (self.n_c - 1) as f64 / 2.0;
        self.carrier_freq - (n as f64 - 1.0) / 2.0 * self.f_s + bin * self.f_s
    }
}

/// Per-(chunk, sub-band) delay shifts applied by `align_first_tap`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentReport {
    /// shifts[chunk][q], in delay bins, each in [0, n_c).
    pub shifts: Vec<Vec<usize>>,
    pub chunk_length: usize,
}

/// Windowed IDFT of each 10 MHz sub-band (Q sub-bands of N_c bins, adjacent
/// sub-bands sharing one edge bin). Scaled by 1/sqrt(N_c) so the transform
/// preserves windowed energy per (m, q).
pub fn subband_transform(ctf: &ChannelTransferFunction, n_c: usize, q: usize) -> Result<SubbandCir> {
    if n_c < 2 || q == 0 {
        return Err(Error::InvalidArgument(format!("bad sub-band geometry n_c={n_c}, q={q}")));
    }
    if ctf.n < q * (n_c - 1) + 1 {
        return Err(Error::InvalidArgument(format!(
            "CTF has {} bins, need at least {} for {q} sub-bands of {n_c}",
            ctf.n,
            q * (n_c - 1) + 1
        )));
    }
    let window = hann_window(n_c);
    let scale = (n_c as f64).sqrt().recip();
    let fft = FftPlanner::new().plan_fft_inverse(n_c);

    let mut h = vec![Complex64::new(0.0, 0.0); ctf.s * q * n_c];
    h.par_chunks_mut(q * n_c).enumerate().for_each(|(m, row)| {
        let src = &ctf.samples[m * ctf.n..(m + 1) * ctf.n];
        for (qi, sub) in row.chunks_exact_mut(n_c).enumerate() {
            for c in 0..n_c {
                sub[c] = src[qi * (n_c - 1) + c] * (window[c] * scale);
            }
            fft.process(sub);
        }
    });
    Ok(SubbandCir { h, s: ctf.s, n_c, q, t_s: ctf.t_s, f_s: ctf.f_s, carrier_freq: ctf.carrier_freq })
}

/// Per sub-band and per chunk of `s_ls` snapshots: locate the delay bin with
/// the largest average power over the chunk and cyclically shift it to n=0.
/// The trailing partial chunk, if any, is folded into the last full chunk.
pub fn align_first_tap(cir: &SubbandCir, s_ls: usize) -> Result<(SubbandCir, AlignmentReport)> {
    if s_ls == 0 || cir.s < s_ls {
        return Err(Error::InvalidArgument(format!(
            "chunk length {s_ls} exceeds {} snapshots",
            cir.s
        )));
    }
    let chunks = cir.s / s_ls;
    let mut out = cir.clone();
    let mut shifts = vec![vec![0usize; cir.q]; chunks];

    for (ci, chunk_shifts) in shifts.iter_mut().enumerate() {
        let start = ci * s_ls;
        let end = if ci + 1 == chunks { cir.s } else { start + s_ls };
        for (qi, shift) in chunk_shifts.iter_mut().enumerate() {
            let mut power = vec![0.0f64; cir.n_c];
            for m in start..end {
                for (n, p) in power.iter_mut().enumerate() {
                    *p += cir.at(m, n, qi).norm_sqr();
                }
            }
            let peak = power
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(n, _)| n)
                .unwrap_or(0);
            *shift = peak;
            if peak != 0 {
                for m in start..end {
                    let base = (m * cir.q + qi) * cir.n_c;
                    out.h[base..base + cir.n_c].rotate_left(peak);
                }
            }
        }
    }
    Ok((out, AlignmentReport { shifts, chunk_length: s_ls }))
}

/// Divide each snapshot by the square root of the moving-average total power
/// over `s_ls` surrounding snapshots. Output is cropped to the snapshots with
/// a full window: absolute times m in [s_ls/2, S-1-s_ls/2].
pub fn remove_large_scale(cir: &SubbandCir, s_ls: usize) -> Result<SubbandCir> {
    if s_ls == 0 || cir.s <= s_ls {
        return Err(Error::InvalidArgument(format!(
            "moving-average window {s_ls} needs more than {} snapshots",
            cir.s
        )));
    }
    let half = s_ls / 2;
    let out_s = cir.s - 1 - half - half + 1; // valid m: half ..= s-1-half
    let mut h = vec![Complex64::new(0.0, 0.0); out_s * cir.q * cir.n_c];

    for qi in 0..cir.q {
        // prefix sums of per-snapshot total power
        let mut prefix = vec![0.0f64; cir.s + 1];
        for m in 0..cir.s {
            let p: f64 = cir.snapshot(m, qi).iter().map(|z| z.norm_sqr()).sum();
            prefix[m + 1] = prefix[m] + p;
        }
        for (i, m) in (half..=cir.s - 1 - half).enumerate() {
            // window [m-half, m+half-1]; divide by the actual sample count so
            // the normalization is exact for odd lengths too
            let eps = (prefix[m + half] - prefix[m - half]) / (2 * half) as f64;
            if eps <= 0.0 {
                return Err(Error::DegenerateInput(format!(
                    "zero windowed power at snapshot {m}, sub-band {qi}"
                )));
            }
            let scale = eps.sqrt().recip();
            let src = cir.snapshot(m, qi);
            let dst = &mut h[(i * cir.q + qi) * cir.n_c..(i * cir.q + qi + 1) * cir.n_c];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s * scale;
            }
        }
    }
    Ok(SubbandCir { h, s: out_s, ..cir.clone() })
}
