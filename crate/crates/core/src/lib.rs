//! Simulation and analysis of a single spin qubit that is driven by a
//! quasi-resonant microwave (MW) field while its energy splitting is
//! parametrically modulated by a radio-frequency (RF) field.
//!
//! The crate is organized around the measurement chain of a doubly driven
//! qubit experiment:
//!
//! - [`model`] — drive/relaxation parameters and the rotating-frame Bloch
//!   equations, with the RF term kept fully time dependent.
//! - [`integrator`] — deterministic RK4 integration (fixed step or
//!   step-doubling adaptive) and Rabi-trace acquisition with RF phase
//!   averaging and optional shot noise.
//! - [`spectral`] — windowed FFT of Rabi traces, peak detection with
//!   parabolic refinement, and triplet characterization.
//! - [`analytic`] — closed-form oracles: Bessel sideband law, doubly
//!   dressed splitting, Floquet quasi-energies, and RF light shifts.
//! - [`experiments`] — figure-level drivers: CW-ESR spectra (adiabatic and
//!   resolved-sideband), phase-gated ESR, Rabi maps, and the
//!   synchronization scans.
//!
//! Unit convention, used repo-wide: all frequencies are ordinary
//! frequencies (cycles) in MHz, times are in µs, rates in 1/µs. Angular
//! factors of 2π are applied internally where equations of motion need
//! them.

// validation uses negated comparisons so NaN fails the checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod experiments;
pub mod integrator;
pub mod model;
pub mod spectral;

pub use analytic::{
    bessel_j, dressed_splitting, effective_rabi, floquet_quasienergies, lightshift_center,
    lightshift_series, quasienergy_gap, sideband_rabi, AnalyticError, FloquetConfig,
    LightshiftSeries,
};
pub use experiments::{
    amplitude_scan, esr_spectrum, fit_phase_gated_ridge, phase_gated_esr, rabi_map,
    rf_frequency_scan, sync_scan, EsrConfig, EsrResult, ExperimentError, PhaseGatedEsr, Regime,
    RidgeFit, SweepPoint, SweepResult,
};
pub use integrator::{
    integrate, rabi_trace, with_shot_noise, IntegratorConfig, IntegratorError, StepMode, TimeTrace,
};
pub use model::{bloch_rhs, instantaneous_detuning, BlochState, DriveParams, Hyperfine, ModelError};
pub use spectral::{
    characterize_triplet, fft_spectrum, find_peaks, Peak, SpectralError, Spectrum, TripletResult,
    Window,
};
