//! Closed-form and Floquet oracles for the doubly driven qubit: the Bessel
//! sideband law, the doubly dressed splitting, quasi-energy spectra, and
//! the RF light-shift expansion.

mod bessel;
mod floquet;

pub use bessel::bessel_j;
pub use floquet::{
    floquet_quasienergies, lightshift_center, lightshift_series, quasienergy_gap, FloquetConfig,
    LightshiftSeries,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("Floquet truncation not converged: quasi-energy moved {delta:e} MHz between N_F and N_F + 2 (tolerance {tol:e})")]
    NotConverged { delta: f64, tol: f64 },
}

/// Rabi frequency of the n-th motional sideband, Ω_R·|J_n(δω0/Ω_m)|.
pub fn sideband_rabi(
    rabi: f64,
    n: i32,
    rf_amplitude: f64,
    rf_frequency: f64,
) -> Result<f64, AnalyticError> {
    if !(rf_frequency > 0.0) {
        return Err(AnalyticError::OutOfRange("rf_frequency must be > 0".into()));
    }
    Ok(rabi * bessel_j(n, rf_amplitude / rf_frequency)?.abs())
}

/// Doubly dressed state splitting Δ = √((Ω_R − Ω_m)² + δω0²/4).
///
/// The triplet lines of the Rabi spectrum sit at Ω_m and Ω_m ± Δ; at the
/// synchronization point Ω_R = Ω_m the splitting reduces to δω0/2.
pub fn dressed_splitting(rabi: f64, rf_frequency: f64, rf_amplitude: f64) -> f64 {
    let d = rabi - rf_frequency;
    (d * d + rf_amplitude * rf_amplitude / 4.0).sqrt()
}

/// Small-detuning expansion of the generalized Rabi frequency,
/// Ω_R + δ²/(2Ω_R).
///
/// This is the quadratic approximation to √(Ω_R² + δ²); at δ = 3Ω_R/5 it
/// already overestimates the exact value by about 1%.
pub fn effective_rabi(rabi: f64, detuning: f64) -> f64 {
    assert!(rabi > 0.0, "effective_rabi requires rabi > 0");
    rabi + detuning * detuning / (2.0 * rabi)
}
