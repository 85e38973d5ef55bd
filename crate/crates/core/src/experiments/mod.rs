//! Figure-level experiment drivers composing the model, integrator,
//! spectral, and analytic layers into the measurement protocols of the
//! doubly driven qubit: CW-ESR in both RF regimes, phase-gated ESR, Rabi
//! maps versus MW detuning, and the synchronization scans.
//!
//! Sweep points are independent jobs; they are evaluated in parallel and
//! assembled in index order, so results are invariant under the degree of
//! parallelism.

mod esr;
mod scans;

pub use esr::{
    esr_spectrum, fit_phase_gated_ridge, phase_gated_esr, EsrConfig, EsrLine, EsrResult,
    PhaseGatedEsr, Regime, RidgeFit,
};
pub use scans::{
    amplitude_scan, rabi_map, rf_frequency_scan, sync_scan, AmplitudeScan, LineFit, RabiMap,
    RfScan, RfScanPoint, SyncPoint, SyncScan,
};

use thiserror::Error;

use crate::analytic::AnalyticError;
use crate::integrator::IntegratorError;
use crate::model::{DriveParams, ModelError};
use crate::spectral::SpectralError;

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error("regime violation: {0}")]
    RegimeViolation(String),
    #[error("invalid scan: {0}")]
    InvalidScan(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

/// One sweep point: the value measured there plus the full drive
/// parameters it was measured with, for provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<T> {
    pub params: DriveParams,
    pub value: T,
}

/// Axis plus per-point payloads of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub axis_label: &'static str,
    pub axis: Vec<f64>,
    pub points: Vec<SweepPoint<T>>,
}

impl<T> SweepResult<T> {
    pub fn new(
        axis_label: &'static str,
        axis: Vec<f64>,
        points: Vec<SweepPoint<T>>,
    ) -> Result<Self, ExperimentError> {
        if axis.len() != points.len() {
            return Err(ExperimentError::InvalidScan(
                "axis and points length mismatch".into(),
            ));
        }
        if axis.windows(2).any(|w| !(w[1] > w[0]) && !(w[1] < w[0]))
            || axis
                .windows(2)
                .any(|w| (w[1] > w[0]) != (axis[1] > axis[0]))
        {
            return Err(ExperimentError::InvalidScan(
                "axis must be strictly monotone".into(),
            ));
        }
        Ok(SweepResult {
            axis_label,
            axis,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }
}

/// Ordinary least-squares line through (x, y) points.
pub(crate) fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    Some((slope, (sy - slope * sx) / n))
}

/// Vertex of the least-squares parabola through (x, y); None when the fit
/// does not open upward.
pub(crate) fn parabola_vertex(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return None;
    }
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        let basis = [x * x, x, 1.0];
        for r in 0..3 {
            for c in 0..3 {
                ata[r][c] += basis[r] * basis[c];
            }
            aty[r] += basis[r] * y;
        }
    }
    let a = nalgebra::Matrix3::from_fn(|r, c| ata[r][c]);
    let b = nalgebra::Vector3::from_row_slice(&aty);
    let sol = a.lu().solve(&b)?;
    if sol[0] <= 0.0 {
        return None;
    }
    Some(-sol[1] / (2.0 * sol[0]))
}

pub(crate) fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let step = (stop - start) / (n - 1) as f64;
    (0..n).map(|i| start + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_slope_and_intercept() {
        let xs = [0.5, 1.0, 1.5, 2.0, 2.7];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x + 0.02).collect();
        let (slope, intercept) = fit_line(&xs, &ys).unwrap();
        assert!((slope - 0.5).abs() < 1e-12);
        assert!((intercept - 0.02).abs() < 1e-12);
    }

    #[test]
    fn parabola_vertex_recovers_minimum() {
        let xs: Vec<f64> = (0..9).map(|i| 5.4 + 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * (x - 5.92).powi(2) + 1.3).collect();
        let v = parabola_vertex(&xs, &ys).unwrap();
        assert!((v - 5.92).abs() < 1e-9);
    }

    #[test]
    fn sweep_result_rejects_non_monotone_axis() {
        let mk = |axis: Vec<f64>| {
            let points = axis
                .iter()
                .map(|_| SweepPoint {
                    params: DriveParams::new(),
                    value: 0.0,
                })
                .collect();
            SweepResult::new("x", axis, points)
        };
        assert!(mk(vec![1.0, 2.0, 3.0]).is_ok());
        assert!(mk(vec![3.0, 2.0, 1.0]).is_ok());
        assert!(mk(vec![1.0, 1.0, 2.0]).is_err());
        assert!(mk(vec![1.0, 3.0, 2.0]).is_err());
    }
}
