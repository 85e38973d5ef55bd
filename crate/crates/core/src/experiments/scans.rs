//! Time-domain sweep drivers: Rabi maps versus MW detuning and the
//! synchronization scans versus MW power, RF amplitude, and RF frequency.

use rayon::prelude::*;

use super::{fit_line, parabola_vertex, ExperimentError, SweepPoint, SweepResult};
use crate::integrator::{rabi_trace, IntegratorConfig, TimeTrace};
use crate::model::DriveParams;
use crate::spectral::{characterize_triplet, fft_spectrum, find_peaks, Peak, SpectralError,
    Spectrum, TripletResult, Window};

const ZERO_PAD: usize = 4;

fn spectrum_of(trace: &TimeTrace) -> Result<Spectrum, SpectralError> {
    fft_spectrum(trace, Window::Hann, ZERO_PAD)
}

fn dominant_peak(spectrum: &Spectrum) -> Option<Peak> {
    find_peaks(spectrum, 0.1, 2.0 * spectrum.native_df)
        .into_iter()
        .max_by(|a, b| a.mag.partial_cmp(&b.mag).unwrap())
}

/// Rabi traces across a MW detuning grid, with the dominant FFT frequency
/// extracted per detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct RabiMap {
    pub sweep: SweepResult<TimeTrace>,
    /// Strongest spectral component per detuning, if any peak clears the
    /// relative-height threshold.
    pub dominant: Vec<Option<Peak>>,
}

pub fn rabi_map(
    p_base: &DriveParams,
    detunings: &[f64],
    tau_max: f64,
    n_tau: usize,
    rf_phase_average: usize,
) -> Result<RabiMap, ExperimentError> {
    p_base.validate()?;
    if detunings.is_empty() {
        return Err(ExperimentError::InvalidScan("empty detuning grid".into()));
    }
    let traces: Vec<Result<TimeTrace, ExperimentError>> = detunings
        .par_iter()
        .map(|&delta| {
            let p = p_base.with_detuning(delta);
            let cfg = IntegratorConfig::for_params(&p);
            Ok(rabi_trace(&p, &cfg, tau_max, n_tau, rf_phase_average)?)
        })
        .collect();
    let mut points = Vec::with_capacity(detunings.len());
    let mut dominant = Vec::with_capacity(detunings.len());
    for (res, &delta) in traces.into_iter().zip(detunings.iter()) {
        let trace = res?;
        dominant.push(dominant_peak(&spectrum_of(&trace)?));
        points.push(SweepPoint {
            params: p_base.with_detuning(delta),
            value: trace,
        });
    }
    Ok(RabiMap {
        sweep: SweepResult::new("mw_detuning_mhz", detunings.to_vec(), points)?,
        dominant,
    })
}

/// Spectrum and triplet characterization of one synchronization sweep
/// point. The triplet is absent where no peak lies near the RF frequency
/// (far-detuned Rabi precession).
#[derive(Debug, Clone, PartialEq)]
pub struct SyncPoint {
    pub trace: TimeTrace,
    pub spectrum: Spectrum,
    pub triplet: Option<TripletResult>,
}

fn sync_point(
    p: &DriveParams,
    tau_max: f64,
    n_tau: usize,
    rf_phase_average: usize,
) -> Result<SyncPoint, ExperimentError> {
    let cfg = IntegratorConfig::for_params(p);
    let trace = rabi_trace(p, &cfg, tau_max, n_tau, rf_phase_average)?;
    let spectrum = spectrum_of(&trace)?;
    let triplet = match characterize_triplet(&spectrum, p.rf_frequency) {
        Ok(t) => Some(t),
        Err(SpectralError::NoCenterPeak { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(SyncPoint {
        trace,
        spectrum,
        triplet,
    })
}

/// Synchronization scan versus MW power.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncScan {
    pub sweep: SweepResult<SyncPoint>,
    /// Measured triplet gap per scan point, where resolved.
    pub gaps: Vec<Option<f64>>,
    /// MW power minimizing the measured gap, from a quadratic fit of gap²
    /// around the scan minimum; None when the minimum is unresolved or
    /// sits at the scan edge.
    pub omega_r_center: Option<f64>,
}

/// Scans the Rabi precession frequency across the RF resonance at fixed
/// MW resonance (δ = 0) and characterizes the triplet per point.
pub fn sync_scan(
    p_base: &DriveParams,
    rabi_grid: &[f64],
    tau_max: f64,
    n_tau: usize,
    rf_phase_average: usize,
) -> Result<SyncScan, ExperimentError> {
    p_base.validate()?;
    if p_base.mw_detuning != 0.0 {
        return Err(ExperimentError::InvalidScan(
            "sync_scan requires mw_detuning = 0".into(),
        ));
    }
    if rabi_grid.is_empty() {
        return Err(ExperimentError::InvalidScan("empty rabi grid".into()));
    }
    let results: Vec<Result<SyncPoint, ExperimentError>> = rabi_grid
        .par_iter()
        .map(|&rabi| sync_point(&p_base.with_rabi(rabi), tau_max, n_tau, rf_phase_average))
        .collect();
    let mut points = Vec::with_capacity(rabi_grid.len());
    let mut gaps = Vec::with_capacity(rabi_grid.len());
    for (res, &rabi) in results.into_iter().zip(rabi_grid.iter()) {
        let sp = res?;
        gaps.push(sp.triplet.as_ref().and_then(|t| t.splitting_mhz));
        points.push(SweepPoint {
            params: p_base.with_rabi(rabi),
            value: sp,
        });
    }
    let omega_r_center = fit_gap_minimum(rabi_grid, &gaps);
    Ok(SyncScan {
        sweep: SweepResult::new("rabi_frequency_mhz", rabi_grid.to_vec(), points)?,
        gaps,
        omega_r_center,
    })
}

/// Quadratic fit of gap² over a window around the resolved minimum.
fn fit_gap_minimum(grid: &[f64], gaps: &[Option<f64>]) -> Option<f64> {
    let resolved: Vec<(f64, f64)> = grid
        .iter()
        .zip(gaps.iter())
        .filter_map(|(&x, g)| g.map(|g| (x, g)))
        .collect();
    if resolved.len() < 5 {
        return None;
    }
    let i_min = resolved
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, _)| i)?;
    if i_min == 0 || i_min + 1 == resolved.len() {
        return None; // minimum unresolved at the scan edge
    }
    let lo = i_min.saturating_sub(5);
    let hi = (i_min + 6).min(resolved.len());
    let xs: Vec<f64> = resolved[lo..hi].iter().map(|&(x, _)| x).collect();
    let ys: Vec<f64> = resolved[lo..hi].iter().map(|&(_, g)| g * g).collect();
    parabola_vertex(&xs, &ys)
}

/// Synchronization-point scan versus RF amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeScan {
    pub sweep: SweepResult<SyncPoint>,
    pub splittings: Vec<Option<f64>>,
    /// Linear fit of the resolved splittings versus δω0.
    pub fit: Option<LineFit>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Measures the triplet splitting at the synchronization point
/// (δ = 0, Ω_R = Ω_m) for increasing RF amplitudes.
pub fn amplitude_scan(
    p_base: &DriveParams,
    amplitudes: &[f64],
    tau_max: f64,
    n_tau: usize,
    rf_phase_average: usize,
) -> Result<AmplitudeScan, ExperimentError> {
    p_base.validate()?;
    if p_base.mw_detuning != 0.0 {
        return Err(ExperimentError::InvalidScan(
            "amplitude_scan requires mw_detuning = 0".into(),
        ));
    }
    if (p_base.rabi_frequency - p_base.rf_frequency).abs() > 1e-9 * p_base.rf_frequency {
        return Err(ExperimentError::InvalidScan(
            "amplitude_scan requires rabi_frequency = rf_frequency".into(),
        ));
    }
    if amplitudes.is_empty() {
        return Err(ExperimentError::InvalidScan("empty amplitude grid".into()));
    }
    let results: Vec<Result<SyncPoint, ExperimentError>> = amplitudes
        .par_iter()
        .map(|&amp| {
            let p = DriveParams {
                rf_amplitude: amp,
                ..p_base.clone()
            };
            sync_point(&p, tau_max, n_tau, rf_phase_average)
        })
        .collect();
    let mut points = Vec::with_capacity(amplitudes.len());
    let mut splittings = Vec::with_capacity(amplitudes.len());
    for (res, &amp) in results.into_iter().zip(amplitudes.iter()) {
        let sp = res?;
        splittings.push(sp.triplet.as_ref().and_then(|t| t.splitting_mhz));
        points.push(SweepPoint {
            params: DriveParams {
                rf_amplitude: amp,
                ..p_base.clone()
            },
            value: sp,
        });
    }
    let resolved: Vec<(f64, f64)> = amplitudes
        .iter()
        .zip(splittings.iter())
        .filter_map(|(&a, s)| s.map(|s| (a, s)))
        .collect();
    let xs: Vec<f64> = resolved.iter().map(|&(a, _)| a).collect();
    let ys: Vec<f64> = resolved.iter().map(|&(_, s)| s).collect();
    let fit = fit_line(&xs, &ys).map(|(slope, intercept)| LineFit { slope, intercept });
    Ok(AmplitudeScan {
        sweep: SweepResult::new("rf_amplitude_mhz", amplitudes.to_vec(), points)?,
        splittings,
        fit,
    })
}

/// One point of the RF-frequency scan.
#[derive(Debug, Clone, PartialEq)]
pub struct RfScanPoint {
    pub trace: TimeTrace,
    pub spectrum: Spectrum,
    pub dominant: Option<Peak>,
    /// Whether the dominant spectral component sits at the RF frequency
    /// within one native FFT bin.
    pub locked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfScan {
    pub sweep: SweepResult<RfScanPoint>,
    /// Extent (min, max) of the contiguous RF-frequency band around the
    /// best-locked point where the spin stays locked.
    pub locking_band: Option<(f64, f64)>,
}

/// Varies the RF/mechanical frequency across the synchronization point at
/// fixed MW power and RF amplitude.
pub fn rf_frequency_scan(
    p_base: &DriveParams,
    rf_grid: &[f64],
    tau_max: f64,
    n_tau: usize,
    rf_phase_average: usize,
) -> Result<RfScan, ExperimentError> {
    p_base.validate()?;
    if p_base.mw_detuning != 0.0 {
        return Err(ExperimentError::InvalidScan(
            "rf_frequency_scan requires mw_detuning = 0".into(),
        ));
    }
    if rf_grid.is_empty() {
        return Err(ExperimentError::InvalidScan("empty rf grid".into()));
    }
    let results: Vec<Result<RfScanPoint, ExperimentError>> = rf_grid
        .par_iter()
        .map(|&rf| {
            let p = DriveParams {
                rf_frequency: rf,
                ..p_base.clone()
            };
            let cfg = IntegratorConfig::for_params(&p);
            let trace = rabi_trace(&p, &cfg, tau_max, n_tau, rf_phase_average)?;
            let spectrum = spectrum_of(&trace)?;
            let dominant = dominant_peak(&spectrum);
            let locked = dominant
                .map(|pk| (pk.freq_mhz - rf).abs() <= spectrum.native_df)
                .unwrap_or(false);
            Ok(RfScanPoint {
                trace,
                spectrum,
                dominant,
                locked,
            })
        })
        .collect();
    let mut points = Vec::with_capacity(rf_grid.len());
    for (res, &rf) in results.into_iter().zip(rf_grid.iter()) {
        let pt = res?;
        points.push(SweepPoint {
            params: DriveParams {
                rf_frequency: rf,
                ..p_base.clone()
            },
            value: pt,
        });
    }
    // contiguous locked band around the point closest to Ω_R
    let locking_band = {
        let locked: Vec<bool> = points.iter().map(|p| p.value.locked).collect();
        let anchor = rf_grid
            .iter()
            .enumerate()
            .filter(|&(i, _)| locked[i])
            .min_by(|a, b| {
                (a.1 - p_base.rabi_frequency)
                    .abs()
                    .partial_cmp(&(b.1 - p_base.rabi_frequency).abs())
                    .unwrap()
            })
            .map(|(i, _)| i);
        anchor.map(|i| {
            let mut lo = i;
            while lo > 0 && locked[lo - 1] {
                lo -= 1;
            }
            let mut hi = i;
            while hi + 1 < locked.len() && locked[hi + 1] {
                hi += 1;
            }
            (rf_grid[lo], rf_grid[hi])
        })
    };
    Ok(RfScan {
        sweep: SweepResult::new("rf_frequency_mhz", rf_grid.to_vec(), points)?,
        locking_band,
    })
}
