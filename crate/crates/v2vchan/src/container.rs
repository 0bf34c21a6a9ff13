//! On-disk artifacts: binary CTF/CIR containers, K-field CSV, and the JSON
//! sidecars that tie a run together.
//!
//! Binary layout (all little-endian): 7-byte magic, u64 shape fields, f64
//! sampling metadata, then interleaved (re, im) f32 pairs in storage order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kfactor::KFactorField;
use crate::scenario::ScenarioProfile;
use crate::subband::SubbandCir;
use crate::synth::{ChannelTransferFunction, KTrajectory};

pub const CTF_MAGIC: &[u8; 7] = b"V2VCTF1";
pub const CIR_MAGIC: &[u8; 7] = b"V2VCIR1";

fn write_complex_block<W: Write>(w: &mut W, data: &[Complex64]) -> Result<()> {
    let mut buf = Vec::with_capacity(data.len() * 8);
    for z in data {
        buf.extend_from_slice(&(z.re as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_complex_block<R: Read>(r: &mut R, count: usize) -> Result<Vec<Complex64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf).map_err(|e| Error::Format(format!("truncated sample block: {e}")))?;
    let mut data = Vec::with_capacity(count);
    for chunk in buf.chunks_exact(8) {
        let re = f32::from_le_bytes(chunk[0..4].try_into().unwrap());
        let im = f32::from_le_bytes(chunk[4..8].try_into().unwrap());
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Format("non-finite sample".into()));
        }
        data.push(Complex64::new(re as f64, im as f64));
    }
    Ok(data)
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| Error::Format(format!("truncated header field {what}")))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| Error::Format(format!("truncated header field {what}")))?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_ctf(path: &Path, ctf: &ChannelTransferFunction) -> Result<()> {
    ctf.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CTF_MAGIC)?;
    w.write_all(&(ctf.s as u64).to_le_bytes())?;
    w.write_all(&(ctf.n as u64).to_le_bytes())?;
    w.write_all(&ctf.t_s.to_le_bytes())?;
    w.write_all(&ctf.f_s.to_le_bytes())?;
    w.write_all(&ctf.carrier_freq.to_le_bytes())?;
    write_complex_block(&mut w, &ctf.samples)?;
    w.flush()?;
    Ok(())
}

pub fn read_ctf(path: &Path) -> Result<ChannelTransferFunction> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 7];
    r.read_exact(&mut magic).map_err(|_| Error::Format("file too short for magic".into()))?;
    if &magic != CTF_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected V2VCTF1")));
    }
    let s = read_u64(&mut r, "S")? as usize;
    let n = read_u64(&mut r, "N")? as usize;
    if s == 0 || n == 0 || s.checked_mul(n).is_none() || s * n > 1 << 32 {
        return Err(Error::Format(format!("implausible shape {s}x{n}")));
    }
    let t_s = read_f64(&mut r, "t_s")?;
    let f_s = read_f64(&mut r, "f_s")?;
    let carrier_freq = read_f64(&mut r, "carrier_freq")?;
    let samples = read_complex_block(&mut r, s * n)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after sample block".into()));
    }
    Ok(ChannelTransferFunction { samples, s, n, t_s, f_s, carrier_freq })
}

pub fn write_cir(path: &Path, cir: &SubbandCir) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CIR_MAGIC)?;
    w.write_all(&(cir.s as u64).to_le_bytes())?;
    w.write_all(&(cir.n_c as u64).to_le_bytes())?;
    w.write_all(&(cir.q as u64).to_le_bytes())?;
    w.write_all(&cir.t_s.to_le_bytes())?;
    w.write_all(&cir.f_s.to_le_bytes())?;
    w.write_all(&cir.carrier_freq.to_le_bytes())?;
    write_complex_block(&mut w, &cir.h)?;
    w.flush()?;
    Ok(())
}

pub fn read_cir(path: &Path) -> Result<SubbandCir> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 7];
    r.read_exact(&mut magic).map_err(|_| Error::Format("file too short for magic".into()))?;
    if &magic != CIR_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected V2VCIR1")));
    }
    let s = read_u64(&mut r, "S")? as usize;
    let n_c = read_u64(&mut r, "N_c")? as usize;
    let q = read_u64(&mut r, "Q")? as usize;
    let total = s
        .checked_mul(n_c)
        .and_then(|x| x.checked_mul(q))
        .filter(|&x| x > 0 && x <= 1 << 32)
        .ok_or_else(|| Error::Format(format!("implausible shape {s}x{n_c}x{q}")))?;
    let t_s = read_f64(&mut r, "t_s")?;
    let f_s = read_f64(&mut r, "f_s")?;
    let carrier_freq = read_f64(&mut r, "carrier_freq")?;
    let h = read_complex_block(&mut r, total)?;
    Ok(SubbandCir { h, s, n_c, q, t_s, f_s, carrier_freq })
}

/// One row of the exported K-field table.
#[derive(Debug, Clone, PartialEq)]
pub struct KFieldRow {
    pub window_center_time_s: f64,
    pub subband_q: usize,
    pub subband_center_freq_hz: f64,
    pub k_db: f64,
    pub valid: bool,
}

fn format_db(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

pub fn write_kfield_csv(path: &Path, field: &KFactorField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "window_center_time_s,subband_q,subband_center_freq_hz,k_db,valid")?;
    for row in 0..field.rows {
        let t = field.window_centers[row] as f64 * field.t_s;
        for qi in 0..field.q {
            let est = field.at(row, qi);
            writeln!(
                w,
                "{},{},{},{},{}",
                t,
                qi,
                field.subband_freqs[qi],
                format_db(est.k_db),
                est.valid
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_kfield_csv(path: &Path) -> Result<Vec<KFieldRow>> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Format("empty K-field CSV".into()))?;
    if !header.starts_with("window_center_time_s,") {
        return Err(Error::Format(format!("unexpected CSV header: {header}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::Format(format!("line {}: expected 5 columns", i + 2)));
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            match s {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => s
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: bad {what} '{s}'", i + 2))),
            }
        };
        rows.push(KFieldRow {
            window_center_time_s: parse_f(parts[0], "time")?,
            subband_q: parts[1]
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad sub-band index", i + 2)))?,
            subband_center_freq_hz: parse_f(parts[2], "frequency")?,
            k_db: parse_f(parts[3], "k_db")?,
            valid: match parts[4] {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::Format(format!("line {}: bad valid flag '{other}'", i + 2)))
                }
            },
        });
    }
    Ok(rows)
}

/// Per-sub-band summary statistics of a K field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubbandSummary {
    pub subband_q: usize,
    pub center_freq_hz: f64,
    pub n_valid_finite: usize,
    pub n_infinite: usize,
    pub n_invalid: usize,
    pub min_db: Option<f64>,
    pub max_db: Option<f64>,
    pub mean_db: Option<f64>,
}

pub fn kfield_summary(field: &KFactorField) -> Vec<SubbandSummary> {
    (0..field.q)
        .map(|qi| {
            let mut finite = Vec::new();
            let mut n_infinite = 0;
            let mut n_invalid = 0;
            for row in 0..field.rows {
                let est = field.at(row, qi);
                if !est.valid {
                    n_invalid += 1;
                } else if est.k_db.is_finite() {
                    finite.push(est.k_db);
                } else {
                    n_infinite += 1;
                }
            }
            let (min_db, max_db, mean_db) = if finite.is_empty() {
                (None, None, None)
            } else {
                let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
                let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mean = finite.iter().sum::<f64>() / finite.len() as f64;
                (Some(min), Some(max), Some(mean))
            };
            SubbandSummary {
                subband_q: qi,
                center_freq_hz: field.subband_freqs[qi],
                n_valid_finite: finite.len(),
                n_infinite,
                n_invalid,
                min_db,
                max_db,
                mean_db,
            }
        })
        .collect()
}

/// Ground-truth sidecar written next to a synthesized CTF.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSidecar {
    pub scenario: ScenarioProfile,
    pub seed: u64,
    pub duration_s: f64,
    pub snapshots: usize,
    pub tail_pdp: Vec<f64>,
    pub k_trajectory: KTrajectory,
}

/// Mixture-fit result with the catalog reference row and per-parameter deltas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub scenario: String,
    /// Number of pooled K samples the fit saw.
    pub n: usize,
    pub w: f64,
    pub mu1_db: f64,
    pub sigma1_db: f64,
    pub mu2_db: f64,
    pub sigma2_db: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub flags: Vec<crate::fitting::FitFlag>,
    pub reference: crate::scenario::GmmParams,
    /// Fitted minus reference, same field order as the parameters.
    pub deltas: GmmDeltas,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmDeltas {
    pub w: f64,
    pub mu1_db: f64,
    pub sigma1_db: f64,
    pub mu2_db: f64,
    pub sigma2_db: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let r = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(r)?)
}

/// CSV export of CTF magnitudes for small instances.
pub fn write_ctf_magnitude_csv(path: &Path, ctf: &ChannelTransferFunction) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for m in 0..ctf.s {
        let row: Vec<String> = (0..ctf.n).map(|b| format!("{}", ctf.at(m, b).norm())).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// CSV export of |h| per (time, sub-band) row for inspection.
pub fn write_cir_magnitude_csv(path: &Path, cir: &SubbandCir) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "m,q,{}",
        (0..cir.n_c).map(|n| format!("abs_h_n{n}")).collect::<Vec<_>>().join(",")
    )?;
    for m in 0..cir.s {
        for qi in 0..cir.q {
            let mags: Vec<String> =
                cir.snapshot(m, qi).iter().map(|z| format!("{}", z.norm())).collect();
            writeln!(w, "{m},{qi},{}", mags.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}
