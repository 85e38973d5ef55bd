//! Windowed FFT of Rabi traces, peak detection, and triplet
//! characterization.

use rustfft::{num_complex::Complex64, FftPlanner};
use thiserror::Error;

use crate::integrator::TimeTrace;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("trace too short for spectral analysis ({len} samples, need >= 8)")]
    TooShort { len: usize },
    #[error("zero_pad_factor must be >= 1")]
    BadZeroPad,
    #[error("no peak within ±20% of the expected center {expected} MHz")]
    NoCenterPeak { expected: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    None,
    Hann,
}

/// One-sided magnitude spectrum on a uniform frequency grid from 0 to the
/// Nyquist frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Frequency grid in MHz (uniform, starting at 0).
    pub freq: Vec<f64>,
    /// Nonnegative amplitude per frequency bin.
    pub mag: Vec<f64>,
    /// Bin width of the unpadded trace in MHz; zero padding refines the
    /// reported grid below this scale but not the true resolution.
    pub native_df: f64,
}

impl Spectrum {
    /// Grid spacing of the (possibly padded) spectrum in MHz.
    pub fn df(&self) -> f64 {
        debug_assert!(self.freq.len() >= 2);
        self.freq[1] - self.freq[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub freq_mhz: f64,
    pub mag: f64,
}

/// Detected triplet lines around an expected center frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletResult {
    pub center: Peak,
    pub lower: Option<Peak>,
    pub upper: Option<Peak>,
    /// Half the sideband separation, (upper − lower)/2, when both flanks
    /// are present.
    pub splitting_mhz: Option<f64>,
}

impl TripletResult {
    /// Signed position asymmetry (upper − center) − (center − lower);
    /// zero for sidebands symmetric about the center.
    pub fn position_asymmetry(&self) -> Option<f64> {
        match (&self.lower, &self.upper) {
            (Some(lo), Some(hi)) => {
                Some((hi.freq_mhz - self.center.freq_mhz) - (self.center.freq_mhz - lo.freq_mhz))
            }
            _ => None,
        }
    }
}

/// Mean-subtracted, optionally Hann-windowed, zero-padded magnitude
/// spectrum of a Rabi trace.
///
/// Amplitudes are scaled so a full-scale cosine of amplitude A gives a
/// peak of height ≈ A with the rectangular window (interior bins carry
/// 2|X_k|/n, the DC and Nyquist bins |X_k|/n).
pub fn fft_spectrum(
    trace: &TimeTrace,
    window: Window,
    zero_pad_factor: usize,
) -> Result<Spectrum, SpectralError> {
    let n = trace.len();
    if n < 8 {
        return Err(SpectralError::TooShort { len: n });
    }
    if zero_pad_factor < 1 {
        return Err(SpectralError::BadZeroPad);
    }
    let dt = trace.dt();
    let mean = trace.p0.iter().sum::<f64>() / n as f64;
    let mut x: Vec<f64> = trace.p0.iter().map(|p| p - mean).collect();
    if let Window::Hann = window {
        let denom = (n - 1) as f64;
        for (i, v) in x.iter_mut().enumerate() {
            *v *= 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / denom).cos());
        }
    }

    let n_pad = n * zero_pad_factor;
    let mut buf: Vec<Complex64> = x
        .iter()
        .map(|&re| Complex64::new(re, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(n_pad)
        .collect();
    FftPlanner::new().plan_fft_forward(n_pad).process(&mut buf);

    let n_half = n_pad / 2;
    let df = 1.0 / (n_pad as f64 * dt);
    let mut freq = Vec::with_capacity(n_half + 1);
    let mut mag = Vec::with_capacity(n_half + 1);
    for (k, c) in buf.iter().take(n_half + 1).enumerate() {
        let edge = k == 0 || (n_pad % 2 == 0 && k == n_half);
        let scale = if edge { 1.0 } else { 2.0 } / n as f64;
        freq.push(k as f64 * df);
        mag.push(c.norm() * scale);
    }
    Ok(Spectrum {
        freq,
        mag,
        native_df: 1.0 / (n as f64 * dt),
    })
}

/// Local maxima above `min_rel_height`·max(mag), greedily pruned so kept
/// peaks are at least `min_separation_mhz` apart (strongest first), each
/// refined by 3-point parabolic interpolation. Sorted by frequency.
pub fn find_peaks(s: &Spectrum, min_rel_height: f64, min_separation_mhz: f64) -> Vec<Peak> {
    assert!(
        min_rel_height > 0.0 && min_rel_height <= 1.0,
        "min_rel_height must be in (0, 1]"
    );
    let max_mag = s.mag.iter().cloned().fold(0.0f64, f64::max);
    if max_mag <= 0.0 {
        return Vec::new();
    }
    let threshold = min_rel_height * max_mag;
    let mut candidates: Vec<usize> = (1..s.mag.len().saturating_sub(1))
        .filter(|&i| s.mag[i] > s.mag[i - 1] && s.mag[i] >= s.mag[i + 1] && s.mag[i] >= threshold)
        .collect();
    // strongest first; index breaks exact ties deterministically
    candidates.sort_by(|&a, &b| {
        s.mag[b]
            .partial_cmp(&s.mag[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let df = s.df();
    let mut kept: Vec<usize> = Vec::new();
    for i in candidates {
        if kept
            .iter()
            .all(|&j| ((i as f64 - j as f64) * df).abs() >= min_separation_mhz)
        {
            kept.push(i);
        }
    }
    let mut peaks: Vec<Peak> = kept
        .into_iter()
        .map(|i| {
            let (a, b, c) = (s.mag[i - 1], s.mag[i], s.mag[i + 1]);
            let denom = a - 2.0 * b + c;
            let d = if denom.abs() < 1e-300 {
                0.0
            } else {
                (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
            };
            Peak {
                freq_mhz: s.freq[i] + d * df,
                mag: b - 0.25 * (a - c) * d,
            }
        })
        .collect();
    peaks.sort_by(|p, q| p.freq_mhz.partial_cmp(&q.freq_mhz).unwrap());
    peaks
}

/// Identifies the peak nearest `expected_center` as the triplet center and
/// the nearest flanking peaks as sidebands.
///
/// Peak detection runs with the default thresholds (relative height 0.1,
/// separation two native bins).
pub fn characterize_triplet(
    s: &Spectrum,
    expected_center: f64,
) -> Result<TripletResult, SpectralError> {
    let peaks = find_peaks(s, 0.1, 2.0 * s.native_df);
    let center = peaks
        .iter()
        .min_by(|p, q| {
            (p.freq_mhz - expected_center)
                .abs()
                .partial_cmp(&(q.freq_mhz - expected_center).abs())
                .unwrap()
        })
        .copied()
        .filter(|p| (p.freq_mhz - expected_center).abs() <= 0.2 * expected_center.abs())
        .ok_or(SpectralError::NoCenterPeak {
            expected: expected_center,
        })?;
    let lower = peaks
        .iter()
        .filter(|p| p.freq_mhz < center.freq_mhz)
        .max_by(|p, q| p.freq_mhz.partial_cmp(&q.freq_mhz).unwrap())
        .copied();
    let upper = peaks
        .iter()
        .filter(|p| p.freq_mhz > center.freq_mhz)
        .min_by(|p, q| p.freq_mhz.partial_cmp(&q.freq_mhz).unwrap())
        .copied();
    let splitting_mhz = match (&lower, &upper) {
        (Some(lo), Some(hi)) => Some(0.5 * (hi.freq_mhz - lo.freq_mhz)),
        _ => None,
    };
    Ok(TripletResult {
        center,
        lower,
        upper,
        splitting_mhz,
    })
}
