//! Deterministic integration of the Bloch equations over pulse sequences.
//!
//! A classical 4th-order Runge–Kutta step is used either with a fixed step
//! size or with step-doubling local error control. Identical inputs always
//! produce bit-identical outputs: there is no hidden global state, and all
//! averaging reductions run in index order regardless of how the work was
//! scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{bloch_rhs, BlochState, DriveParams};

#[derive(Debug, Error, PartialEq)]
pub enum IntegratorError {
    #[error("state became non-finite at t = {t} µs")]
    NonFinite { t: f64 },
    #[error("adaptive step size underflowed at t = {t} µs")]
    StepUnderflow { t: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Upper bound on the step size, µs.
    pub dt_max: f64,
    /// Local relative error target for adaptive stepping.
    pub rel_tol: f64,
    pub mode: StepMode,
}

impl IntegratorConfig {
    /// Step bound resolving the fastest drive scale: at least 50 steps per
    /// period of max(Ω_R, Ω_m, |δ| + δω0), and at least 50 steps per 1/Γ
    /// when relaxation is the fastest process.
    pub fn for_params(p: &DriveParams) -> Self {
        let f_max = p
            .rabi_frequency
            .max(p.rf_frequency)
            .max(p.mw_detuning.abs() + p.rf_amplitude);
        let mut dt = 1.0 / (50.0 * f_max);
        let gamma = p.gamma1.max(p.gamma2);
        if gamma > 0.0 {
            dt = dt.min(1.0 / (50.0 * gamma));
        }
        IntegratorConfig {
            dt_max: dt,
            rel_tol: 1e-10,
            mode: StepMode::Fixed,
        }
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(IntegratorError::InvalidConfig(
                "dt_max must be finite and > 0".into(),
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(IntegratorError::InvalidConfig(
                "rel_tol must be finite and > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Uniformly sampled P(m_S = 0) versus MW pulse duration.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    /// Sample times, a strictly increasing uniform grid in µs.
    pub t: Vec<f64>,
    /// P(m_S = 0) = (1 + w)/2 at each sample time.
    pub p0: Vec<f64>,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Sample spacing in µs.
    pub fn dt(&self) -> f64 {
        debug_assert!(self.t.len() >= 2);
        (self.t[self.t.len() - 1] - self.t[0]) / (self.t.len() - 1) as f64
    }

    /// Total span of the trace in µs.
    pub fn span(&self) -> f64 {
        self.t[self.t.len() - 1] - self.t[0]
    }
}

fn rk4_step(p: &DriveParams, t: f64, s: &BlochState, h: f64) -> BlochState {
    let k1 = bloch_rhs(p, t, s);
    let s2 = BlochState::new(
        s.u + 0.5 * h * k1.u,
        s.v + 0.5 * h * k1.v,
        s.w + 0.5 * h * k1.w,
    );
    let k2 = bloch_rhs(p, t + 0.5 * h, &s2);
    let s3 = BlochState::new(
        s.u + 0.5 * h * k2.u,
        s.v + 0.5 * h * k2.v,
        s.w + 0.5 * h * k2.w,
    );
    let k3 = bloch_rhs(p, t + 0.5 * h, &s3);
    let s4 = BlochState::new(s.u + h * k3.u, s.v + h * k3.v, s.w + h * k3.w);
    let k4 = bloch_rhs(p, t + h, &s4);
    BlochState::new(
        s.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
        s.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
        s.w + h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w),
    )
}

fn integrate_fixed(
    p: &DriveParams,
    cfg: &IntegratorConfig,
    s0: BlochState,
    t0: f64,
    t1: f64,
) -> Result<BlochState, IntegratorError> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(s0);
    }
    let n = (span / cfg.dt_max).ceil().max(1.0) as u64;
    let h = span / n as f64;
    let mut s = s0;
    for i in 0..n {
        let t = t0 + i as f64 * h;
        s = rk4_step(p, t, &s, h);
    }
    if !s.is_finite() {
        return Err(IntegratorError::NonFinite { t: t1 });
    }
    Ok(s)
}

fn integrate_adaptive(
    p: &DriveParams,
    cfg: &IntegratorConfig,
    s0: BlochState,
    t0: f64,
    t1: f64,
) -> Result<BlochState, IntegratorError> {
    let mut s = s0;
    let mut t = t0;
    let mut h = cfg.dt_max.min(t1 - t0);
    let min_h = (t1 - t0) * 1e-14;
    while t < t1 {
        h = h.min(t1 - t);
        let full = rk4_step(p, t, &s, h);
        let half = rk4_step(p, t, &s, 0.5 * h);
        let two = rk4_step(p, t + 0.5 * h, &half, 0.5 * h);
        if !two.is_finite() || !full.is_finite() {
            return Err(IntegratorError::NonFinite { t });
        }
        let du = full.u - two.u;
        let dv = full.v - two.v;
        let dw = full.w - two.w;
        // step-doubling estimate of the h-step local error
        let err = (du * du + dv * dv + dw * dw).sqrt() / 15.0;
        let scale = two.norm().max(1.0);
        if err <= cfg.rel_tol * scale {
            t += h;
            s = two;
            if err < 0.03 * cfg.rel_tol * scale {
                h = (2.0 * h).min(cfg.dt_max);
            }
        } else {
            h *= 0.5;
            if h < min_h {
                return Err(IntegratorError::StepUnderflow { t });
            }
        }
    }
    Ok(s)
}

/// Propagates the state from t0 to t1.
///
/// Fixed mode takes uniform steps of at most `dt_max` (global error
/// O(dt⁴)); adaptive mode halves the step until the step-doubling local
/// error estimate is below `rel_tol`.
pub fn integrate(
    p: &DriveParams,
    cfg: &IntegratorConfig,
    s0: BlochState,
    t0: f64,
    t1: f64,
) -> Result<BlochState, IntegratorError> {
    cfg.validate()?;
    assert!(t1 >= t0, "integrate requires t1 >= t0");
    if !s0.is_finite() {
        return Err(IntegratorError::NonFinite { t: t0 });
    }
    match cfg.mode {
        StepMode::Fixed => integrate_fixed(p, cfg, s0, t0, t1),
        StepMode::Adaptive => integrate_adaptive(p, cfg, s0, t0, t1),
    }
}

/// Records one trajectory from the pumped state, sampling P(m_S = 0) on the
/// given uniform grid. The ODE is the same regardless of where the pulse
/// ends, so the trace over pulse durations equals one trajectory sampled
/// along the way.
fn single_trace(
    p: &DriveParams,
    cfg: &IntegratorConfig,
    taus: &[f64],
) -> Result<Vec<f64>, IntegratorError> {
    let mut s = BlochState::pumped();
    let mut out = Vec::with_capacity(taus.len());
    out.push(s.p0());
    for i in 1..taus.len() {
        s = integrate(p, cfg, s, taus[i - 1], taus[i])?;
        out.push(s.p0());
    }
    Ok(out)
}

/// Rabi trace of the doubly driven qubit: for each pulse duration τ on a
/// uniform `n_samples` grid over [0, τ_max], the population (1 + w)/2 after
/// integrating from the pumped state.
///
/// With `rf_phase_average = K > 1` the trace is averaged over RF phases
/// φ_RF ∈ {2πk/K}, reproducing a MW pulse sequence that is not
/// synchronized to the RF field. Hyperfine ensembles are averaged with
/// their population weights. Members are evaluated in parallel and reduced
/// in index order, so the result does not depend on the parallelism.
pub fn rabi_trace(
    p: &DriveParams,
    cfg: &IntegratorConfig,
    tau_max: f64,
    n_samples: usize,
    rf_phase_average: usize,
) -> Result<TimeTrace, IntegratorError> {
    assert!(n_samples >= 2, "rabi_trace requires n_samples >= 2");
    assert!(rf_phase_average >= 1, "rabi_trace requires K >= 1");
    assert!(tau_max > 0.0, "rabi_trace requires tau_max > 0");
    let step = tau_max / (n_samples - 1) as f64;
    let taus: Vec<f64> = (0..n_samples).map(|i| i as f64 * step).collect();

    let components: Vec<(f64, f64)> = match &p.hyperfine {
        Some(hf) => hf.components().to_vec(),
        None => vec![(0.0, 1.0)],
    };
    let k = rf_phase_average;
    let jobs: Vec<(DriveParams, f64)> = components
        .iter()
        .flat_map(|&(shift, weight)| {
            (0..k).map(move |j| {
                let phase = std::f64::consts::TAU * j as f64 / k as f64;
                (shift, weight, phase)
            })
        })
        .map(|(shift, weight, phase)| {
            let mut pj = p.clone();
            pj.mw_detuning += shift;
            pj.rf_phase += phase;
            (pj, weight / k as f64)
        })
        .collect();

    let traces: Vec<Result<Vec<f64>, IntegratorError>> = jobs
        .par_iter()
        .map(|(pj, _)| single_trace(pj, cfg, &taus))
        .collect();

    let mut p0 = vec![0.0; n_samples];
    for (res, (_, weight)) in traces.into_iter().zip(jobs.iter()) {
        let trace = res?;
        for (acc, v) in p0.iter_mut().zip(trace.iter()) {
            *acc += weight * v;
        }
    }
    Ok(TimeTrace { t: taus, p0 })
}

/// Binomial readout noise: each point is replaced by k/n where
/// k ~ Binomial(n = photons_per_point, p = clamp(p0, 0, 1)).
///
/// The generator is seeded per point, so the output is deterministic and
/// independent of evaluation order.
pub fn with_shot_noise(trace: &TimeTrace, photons_per_point: u64, seed: u64) -> TimeTrace {
    assert!(photons_per_point > 0);
    let p0 = trace
        .p0
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mixed = seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut rng = ChaCha12Rng::seed_from_u64(mixed);
            let prob = p.clamp(0.0, 1.0);
            let bin = Binomial::new(photons_per_point, prob).expect("probability in [0,1]");
            bin.sample(&mut rng) as f64 / photons_per_point as f64
        })
        .collect();
    TimeTrace {
        t: trace.t.clone(),
        p0,
    }
}
