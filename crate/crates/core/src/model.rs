//! Physical quantities and rotating-frame equations of motion for the
//! doubly driven spin qubit.
//!
//! The MW drive is treated in the rotating-wave approximation (its Rabi
//! frequency is orders of magnitude below the qubit splitting), while the
//! RF energy modulation is kept fully time dependent so that
//! counter-rotating RF effects (light shifts) emerge from the dynamics
//! without further approximation.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid drive parameters: {0}")]
    InvalidParams(String),
}

/// Optional hyperfine structure, modeled as an incoherent three-component
/// ensemble with line centers shifted by −A, 0, +A and fixed population
/// weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperfine {
    /// Hyperfine splitting A in MHz.
    pub splitting_mhz: f64,
    /// Population weights of the three components; must sum to 1.
    pub weights: [f64; 3],
}

impl Hyperfine {
    /// Equal-weight triplet with the NV ¹⁴N splitting of 2.16 MHz.
    pub fn nv_nitrogen14() -> Self {
        Hyperfine {
            splitting_mhz: 2.16,
            weights: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        }
    }

    /// Nuclear-spin-polarized ensemble (single central line), as obtained
    /// at the excited-state level anti-crossing.
    pub fn polarized() -> Self {
        Hyperfine {
            splitting_mhz: 2.16,
            weights: [0.0, 1.0, 0.0],
        }
    }

    /// Detuning offsets and weights of the ensemble components.
    pub fn components(&self) -> [(f64, f64); 3] {
        let a = self.splitting_mhz;
        [
            (-a, self.weights[0]),
            (0.0, self.weights[1]),
            (a, self.weights[2]),
        ]
    }
}

/// All drive and relaxation constants of the doubly driven qubit.
///
/// Frequencies are ordinary frequencies in MHz, rates in 1/µs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// MW drive strength Ω_R (Rabi frequency).
    pub rabi_frequency: f64,
    /// MW detuning δ ≡ ω − ω0.
    pub mw_detuning: f64,
    /// RF / emulated mechanical frequency Ω_m.
    pub rf_frequency: f64,
    /// Parametric energy-modulation depth δω0.
    pub rf_amplitude: f64,
    /// RF phase at t = 0, radians.
    pub rf_phase: f64,
    /// Longitudinal relaxation rate Γ₁ = 1/T1.
    pub gamma1: f64,
    /// Transverse decay rate Γ₂ (the spin decoherence rate).
    pub gamma2: f64,
    /// Equilibrium longitudinal polarization.
    pub w_eq: f64,
    pub hyperfine: Option<Hyperfine>,
}

impl DriveParams {
    /// Drive-free template: unit RF frequency (the model requires Ω_m > 0),
    /// no decay, optically pumped equilibrium w_eq = +1.
    pub fn new() -> Self {
        DriveParams {
            rabi_frequency: 0.0,
            mw_detuning: 0.0,
            rf_frequency: 1.0,
            rf_amplitude: 0.0,
            rf_phase: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            w_eq: 1.0,
            hyperfine: None,
        }
    }

    pub fn with_detuning(&self, mw_detuning: f64) -> Self {
        DriveParams {
            mw_detuning,
            ..self.clone()
        }
    }

    pub fn with_rabi(&self, rabi_frequency: f64) -> Self {
        DriveParams {
            rabi_frequency,
            ..self.clone()
        }
    }

    pub fn with_rf_phase(&self, rf_phase: f64) -> Self {
        DriveParams {
            rf_phase,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::InvalidParams(msg.to_string()));
        if !(self.rabi_frequency >= 0.0 && self.rabi_frequency.is_finite()) {
            return bad("rabi_frequency must be finite and >= 0");
        }
        if !(self.rf_frequency > 0.0 && self.rf_frequency.is_finite()) {
            return bad("rf_frequency must be finite and > 0");
        }
        if !(self.rf_amplitude >= 0.0 && self.rf_amplitude.is_finite()) {
            return bad("rf_amplitude must be finite and >= 0");
        }
        if !self.mw_detuning.is_finite() || !self.rf_phase.is_finite() {
            return bad("mw_detuning and rf_phase must be finite");
        }
        if !(self.gamma1 >= 0.0 && self.gamma1.is_finite()) {
            return bad("gamma1 must be finite and >= 0");
        }
        if !(self.gamma2 >= 0.0 && self.gamma2.is_finite()) {
            return bad("gamma2 must be finite and >= 0");
        }
        if !(self.w_eq.abs() <= 1.0) {
            return bad("|w_eq| must be <= 1");
        }
        if let Some(hf) = &self.hyperfine {
            if !(hf.splitting_mhz >= 0.0 && hf.splitting_mhz.is_finite()) {
                return bad("hyperfine splitting must be finite and >= 0");
            }
            if hf.weights.iter().any(|w| !(*w >= 0.0)) {
                return bad("hyperfine weights must be nonnegative");
            }
            let sum: f64 = hf.weights.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return bad("hyperfine weights must sum to 1");
            }
        }
        Ok(())
    }
}

impl Default for DriveParams {
    fn default() -> Self {
        Self::new()
    }
}

/// Spin polarization vector (u, v, w) in the MW rotating frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl BlochState {
    pub const fn new(u: f64, v: f64, w: f64) -> Self {
        BlochState { u, v, w }
    }

    /// Optically pumped m_S = 0 state, the starting point of every pulse.
    pub const fn pumped() -> Self {
        BlochState::new(0.0, 0.0, 1.0)
    }

    pub fn norm(&self) -> f64 {
        (self.u * self.u + self.v * self.v + self.w * self.w).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.w.is_finite()
    }

    /// Population of the m_S = 0 readout state, P = (1 + w)/2.
    pub fn p0(&self) -> f64 {
        0.5 * (1.0 + self.w)
    }
}

/// Instantaneous MW detuning in MHz: δ + δω0·cos(2π Ω_m t + φ_RF).
///
/// The RF phase is folded modulo one period before the cosine is taken,
/// which keeps the evaluation well conditioned at large t and makes the
/// 1/Ω_m periodicity exact whenever Ω_m·t is exactly representable.
pub fn instantaneous_detuning(p: &DriveParams, t: f64) -> f64 {
    let cycles = p.rf_frequency * t;
    let frac = cycles - cycles.floor();
    p.mw_detuning + p.rf_amplitude * (TAU * frac + p.rf_phase).cos()
}

/// Right-hand side of the rotating-frame Bloch equations, in 1/µs.
///
/// With Δ(t) = 2π·instantaneous_detuning and Ω = 2π·Ω_R:
///
/// ```text
/// du/dt = −Δ(t)·v − Γ₂·u
/// dv/dt = +Δ(t)·u − Ω·w − Γ₂·v
/// dw/dt = +Ω·v − Γ₁·(w − w_eq)
/// ```
pub fn bloch_rhs(p: &DriveParams, t: f64, s: &BlochState) -> BlochState {
    let delta = TAU * instantaneous_detuning(p, t);
    let omega = TAU * p.rabi_frequency;
    BlochState {
        u: -delta * s.v - p.gamma2 * s.u,
        v: delta * s.u - omega * s.w - p.gamma2 * s.v,
        w: omega * s.v - p.gamma1 * (s.w - p.w_eq),
    }
}
