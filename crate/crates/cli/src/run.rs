//! Experiment execution: sweeps run through the library, results rendered
//! as a CSV body plus a JSON summary.
//!
//! CSV numbers use the shortest round-trip decimal representation, so a
//! rerun with the same config and seed is bit-identical regardless of the
//! parallelism degree.

use std::fmt::Write as _;

use serde_json::{json, Value};
use spinsync::experiments::{
    amplitude_scan, esr_spectrum, fit_phase_gated_ridge, phase_gated_esr, rabi_map,
    rf_frequency_scan, sync_scan, EsrConfig, ExperimentError, Regime,
};
use spinsync::{
    fft_spectrum, find_peaks, floquet_quasienergies, lightshift_center, lightshift_series,
    quasienergy_gap, with_shot_noise, FloquetConfig, Window,
};

use crate::config::{ExperimentKind, RunConfig};

pub struct Outputs {
    pub csv: String,
    pub summary: Value,
}

fn grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let step = (stop - start) / (n - 1) as f64;
    (0..n).map(|i| start + i as f64 * step).collect()
}

fn mix_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn peak_json(p: Option<spinsync::Peak>) -> Value {
    match p {
        Some(p) => json!({"freq_mhz": p.freq_mhz, "mag": p.mag}),
        None => Value::Null,
    }
}

pub fn execute(config: &RunConfig, seed: u64) -> Result<Outputs, ExperimentError> {
    let params = config.drive.to_params();
    let mut csv = String::new();
    let summary: Value;

    match &config.kind {
        ExperimentKind::Esr(s) => {
            let regime = if s.regime == "adiabatic" {
                Regime::Adiabatic
            } else {
                Regime::ResolvedSideband
            };
            let mut cfg = EsrConfig::new((s.scan_start_mhz, s.scan_stop_mhz, s.scan_points), regime);
            cfg.linewidth = s.linewidth_mhz;
            cfg.contrast = s.contrast;
            let res = esr_spectrum(&params, &cfg)?;
            csv.push_str("mw_detuning_mhz,contrast\n");
            for (delta, point) in res.sweep.axis.iter().zip(res.sweep.points.iter()) {
                writeln!(csv, "{},{}", delta, point.value).unwrap();
            }
            summary = json!({
                "lines": res.lines.iter().map(|l| json!({
                    "order": l.order,
                    "center_mhz": l.center_mhz,
                    "weight": l.weight,
                })).collect::<Vec<_>>(),
                "total_line_weight": res.lines.iter().map(|l| l.weight).sum::<f64>(),
            });
        }
        ExperimentKind::PhaseGatedEsr(s) => {
            let mut cfg = EsrConfig::new(
                (s.scan_start_mhz, s.scan_stop_mhz, s.scan_points),
                Regime::Adiabatic,
            );
            cfg.linewidth = s.linewidth_mhz;
            cfg.contrast = s.contrast;
            let map = phase_gated_esr(&params, &cfg, s.phase_bins, s.duty)?;
            let fit = fit_phase_gated_ridge(&map);
            csv.push_str("phase_rad,mw_detuning_mhz,contrast\n");
            for (k, row) in map.contrast.iter().enumerate() {
                for (i, value) in row.iter().enumerate() {
                    writeln!(csv, "{},{},{}", map.phases[k], map.detunings[i], value).unwrap();
                }
            }
            summary = json!({
                "ridge_mhz": map.ridge,
                "ridge_sign_changes": map.ridge_sign_changes(),
                "fit": {
                    "amplitude_mhz": fit.amplitude_mhz,
                    "phase_rad": fit.phase_rad,
                    "relative_residual": fit.relative_residual,
                },
            });
        }
        ExperimentKind::RabiMap(s) => {
            let detunings = grid(s.detuning_start_mhz, s.detuning_stop_mhz, s.detuning_points);
            let map = rabi_map(&params, &detunings, s.tau_max_us, s.tau_points, s.phase_average)?;
            let mut traces: Vec<spinsync::TimeTrace> = map
                .sweep
                .points
                .iter()
                .map(|p| p.value.clone())
                .collect();
            let mut dominant = map.dominant.clone();
            if let Some(noise) = &config.noise {
                for (i, trace) in traces.iter_mut().enumerate() {
                    *trace = with_shot_noise(trace, noise.photons_per_point, mix_seed(seed, i));
                }
                // recompute the dominant components from the noisy traces
                dominant = traces
                    .iter()
                    .map(|t| {
                        let spec = fft_spectrum(t, Window::Hann, 4)?;
                        Ok(find_peaks(&spec, 0.1, 2.0 * spec.native_df)
                            .into_iter()
                            .max_by(|a, b| a.mag.partial_cmp(&b.mag).unwrap()))
                    })
                    .collect::<Result<Vec<_>, ExperimentError>>()?;
            }
            csv.push_str("mw_detuning_mhz,tau_us,p0\n");
            for (delta, trace) in detunings.iter().zip(traces.iter()) {
                for (t, p0) in trace.t.iter().zip(trace.p0.iter()) {
                    writeln!(csv, "{},{},{}", delta, t, p0).unwrap();
                }
            }
            summary = json!({
                "dominant": detunings.iter().zip(dominant.iter()).map(|(d, pk)| json!({
                    "mw_detuning_mhz": d,
                    "peak": peak_json(*pk),
                })).collect::<Vec<_>>(),
            });
        }
        ExperimentKind::SyncScan(s) => {
            let rabi = grid(s.rabi_start_mhz, s.rabi_stop_mhz, s.rabi_points);
            let scan = sync_scan(&params, &rabi, s.tau_max_us, s.tau_points, s.phase_average)?;
            csv.push_str("rabi_frequency_mhz,freq_mhz,mag\n");
            for (r, point) in scan.sweep.axis.iter().zip(scan.sweep.points.iter()) {
                let spec = &point.value.spectrum;
                for (f, m) in spec.freq.iter().zip(spec.mag.iter()) {
                    writeln!(csv, "{},{},{}", r, f, m).unwrap();
                }
            }
            summary = json!({
                "omega_r_center_mhz": scan.omega_r_center,
                "gaps": rabi.iter().zip(scan.gaps.iter()).map(|(r, g)| json!({
                    "rabi_frequency_mhz": r,
                    "splitting_mhz": g,
                })).collect::<Vec<_>>(),
            });
        }
        ExperimentKind::AmplitudeScan(s) => {
            let scan = amplitude_scan(
                &params,
                &s.rf_amplitudes_mhz,
                s.tau_max_us,
                s.tau_points,
                s.phase_average,
            )?;
            csv.push_str("rf_amplitude_mhz,freq_mhz,mag\n");
            for (a, point) in scan.sweep.axis.iter().zip(scan.sweep.points.iter()) {
                let spec = &point.value.spectrum;
                for (f, m) in spec.freq.iter().zip(spec.mag.iter()) {
                    writeln!(csv, "{},{},{}", a, f, m).unwrap();
                }
            }
            summary = json!({
                "splittings": s.rf_amplitudes_mhz.iter().zip(scan.splittings.iter())
                    .map(|(a, g)| json!({
                        "rf_amplitude_mhz": a,
                        "splitting_mhz": g,
                    })).collect::<Vec<_>>(),
                "fit": scan.fit.map(|f| json!({"slope": f.slope, "intercept_mhz": f.intercept})),
            });
        }
        ExperimentKind::RfScan(s) => {
            let rf = grid(s.rf_start_mhz, s.rf_stop_mhz, s.rf_points);
            let scan = rf_frequency_scan(&params, &rf, s.tau_max_us, s.tau_points, s.phase_average)?;
            csv.push_str("rf_frequency_mhz,freq_mhz,mag\n");
            for (r, point) in scan.sweep.axis.iter().zip(scan.sweep.points.iter()) {
                let spec = &point.value.spectrum;
                for (f, m) in spec.freq.iter().zip(spec.mag.iter()) {
                    writeln!(csv, "{},{},{}", r, f, m).unwrap();
                }
            }
            summary = json!({
                "points": scan.sweep.axis.iter().zip(scan.sweep.points.iter())
                    .map(|(r, p)| json!({
                        "rf_frequency_mhz": r,
                        "dominant": peak_json(p.value.dominant),
                        "locked": p.value.locked,
                    })).collect::<Vec<_>>(),
                "locking_band_mhz": scan.locking_band.map(|(lo, hi)| json!([lo, hi])),
            });
        }
        ExperimentKind::Floquet(s) => {
            let cfg = FloquetConfig {
                truncation: s.truncation,
                eigentolerance: s.eigentolerance_mhz,
            };
            let (ep, em) = floquet_quasienergies(
                params.rabi_frequency,
                params.rf_frequency,
                params.rf_amplitude,
                &cfg,
            )?;
            let gap = quasienergy_gap(
                params.rabi_frequency,
                params.rf_frequency,
                params.rf_amplitude,
                &cfg,
            )?;
            csv.push_str("quasienergy_plus_mhz,quasienergy_minus_mhz,gap_mhz\n");
            writeln!(csv, "{},{},{}", ep, em, gap).unwrap();
            summary = json!({
                "quasienergy_plus_mhz": ep,
                "quasienergy_minus_mhz": em,
                "gap_mhz": gap,
            });
        }
        ExperimentKind::Lightshift(s) => {
            let cfg = FloquetConfig {
                truncation: s.truncation,
                eigentolerance: s.eigentolerance_mhz,
            };
            let series = lightshift_series(params.rf_frequency, &cfg)?;
            let center = lightshift_center(params.rf_frequency, params.rf_amplitude, &cfg)?;
            csv.push_str("modulation_index,omega_center_mhz,series_omega_center_mhz\n");
            for &(x, omega) in &series.samples {
                writeln!(csv, "{},{},{}", x, omega, series.omega_center(x)).unwrap();
            }
            summary = json!({
                "omega_r_center_mhz": center,
                "series": {"c2": series.c2, "c4": series.c4, "c6": series.c6},
                "samples": series.samples.iter().map(|(x, omega)| json!({
                    "modulation_index": x,
                    "omega_center_mhz": omega,
                })).collect::<Vec<_>>(),
            });
        }
    }

    let summary = json!({
        "experiment": config.kind.name(),
        "config": config.to_json(),
        "summary": summary,
    });
    Ok(Outputs { csv, summary })
}
