//! Cross-module checks of the time-domain physics: sideband Rabi maps,
//! triplet spectra against the Floquet oracle, and RF-frequency locking.

use spinsync::experiments::{rabi_map, rf_frequency_scan, sync_scan};
use spinsync::{
    dressed_splitting, fft_spectrum, find_peaks, quasienergy_gap, rabi_trace, DriveParams,
    FloquetConfig, IntegratorConfig, Window,
};

fn undamped(rabi: f64, rf: f64, amp: f64) -> DriveParams {
    DriveParams {
        rabi_frequency: rabi,
        rf_frequency: rf,
        rf_amplitude: amp,
        ..DriveParams::new()
    }
}

fn relaxed(rabi: f64, rf: f64, amp: f64) -> DriveParams {
    DriveParams {
        gamma1: 1.0 / 173.0,
        gamma2: 0.3,
        ..undamped(rabi, rf, amp)
    }
}

#[test]
fn rabi_map_with_rf_drives_sidebands_only() {
    let p = undamped(0.5, 15.0, 4.5);
    let map = rabi_map(&p, &[-15.0, 7.5, 15.0], 60.0, 1024, 4).unwrap();
    let expect = 0.5 * spinsync::bessel_j(1, 0.3).unwrap();

    let lower = map.dominant[0].expect("sideband peak at -15");
    let upper = map.dominant[2].expect("sideband peak at +15");
    assert!(
        (lower.freq_mhz - expect).abs() <= 0.03 * expect,
        "δ=-15: {} vs {}",
        lower.freq_mhz,
        expect
    );
    assert!(
        (upper.freq_mhz - expect).abs() <= 0.03 * expect,
        "δ=+15: {} vs {}",
        upper.freq_mhz,
        expect
    );

    // halfway between sidebands no slow oscillation rises above the noise
    // floor: nothing in the sub-2-MHz band within 5% of the sideband peak
    let quiet = &map.sweep.points[1].value;
    let spectrum = fft_spectrum(quiet, Window::Hann, 4).unwrap();
    let floor = spectrum
        .freq
        .iter()
        .zip(spectrum.mag.iter())
        .filter(|(f, _)| **f > 0.1 && **f < 2.0)
        .map(|(_, m)| *m)
        .fold(0.0f64, f64::max);
    println!("quiet floor {floor:e} vs sideband mag {}", upper.mag);
    assert!(floor < 0.05 * upper.mag, "floor {floor} vs {}", upper.mag);
}

#[test]
fn triplet_spectrum_matches_floquet_gap_off_sync() {
    // detuned synchronization: Ω_R = 5, Ω_m = 6 still inside the capture
    // region (|Ω_R − Ω_m| < δω0/2)
    let p = relaxed(5.0, 6.0, 2.7);
    let cfg = IntegratorConfig::for_params(&p);
    let trace = rabi_trace(&p, &cfg, 20.0, 2048, 16).unwrap();
    let spectrum = fft_spectrum(&trace, Window::Hann, 4).unwrap();
    // away from the sync point the outer line weakens to a few percent of
    // the dominant one; drop the detection threshold accordingly
    let peaks = find_peaks(&spectrum, 0.02, 2.0 * spectrum.native_df);
    assert!(peaks.len() >= 3, "expected a triplet, got {peaks:?}");

    let gap = quasienergy_gap(5.0, 6.0, 2.7, &FloquetConfig::default()).unwrap();
    let near = |target: f64| {
        peaks
            .iter()
            .map(|p| (p.freq_mhz - target).abs())
            .fold(f64::MAX, f64::min)
    };
    let tol = (2.0 * spectrum.native_df).max(0.03 * gap);
    assert!(near(6.0) <= tol, "central line missing: {}", near(6.0));
    assert!(near(6.0 - gap) <= tol, "lower line: {}", near(6.0 - gap));
    assert!(near(6.0 + gap) <= tol, "upper line: {}", near(6.0 + gap));
}

#[test]
fn sync_gap_matches_dressed_splitting_at_small_amplitude() {
    // cross-oracle invariant: for δω0/Ω_m ≤ 0.3 the measured gap follows
    // the dressed splitting within max(2 bins, 3%)
    for amp in [1.0, 1.8] {
        let p = relaxed(6.0, 6.0, amp);
        let grid = [5.8, 6.0, 6.2];
        let scan = sync_scan(&p, &grid, 20.0, 2048, 8).unwrap();
        for (i, &rabi) in grid.iter().enumerate() {
            let gap = scan.gaps[i].expect("resolved gap");
            let expect = dressed_splitting(rabi, 6.0, amp);
            let bin = scan.sweep.points[i].value.spectrum.native_df;
            let tol = (2.0 * bin).max(0.03 * expect);
            assert!(
                (gap - expect).abs() <= tol,
                "amp {amp}, Ω_R {rabi}: gap {gap} vs dressed {expect} (tol {tol})"
            );
        }
    }
}

#[test]
fn capture_band_grows_with_rf_amplitude() {
    let grid: Vec<f64> = (0..25).map(|i| 3.5 + 0.125 * i as f64).collect();
    let mut widths = Vec::new();
    for amp in [1.35, 2.7] {
        let p = relaxed(5.0, 5.0, amp);
        let scan = rf_frequency_scan(&p, &grid, 20.0, 2048, 8).unwrap();
        let (lo, hi) = scan.locking_band.expect("locked at resonance");
        println!("amp {amp}: band [{lo}, {hi}]");
        widths.push(hi - lo);
        // at Ω_m = Ω_R = 5 the dominant component sits on the RF exactly
        let mid = &scan.sweep.points[12].value;
        assert!(mid.locked);
    }
    assert!(
        widths[1] > widths[0],
        "capture band should widen: {widths:?}"
    );

    // far off resonance there is no locking: the dominant component stays
    // near Ω_R (pushed up by the RF light shift), far from Ω_m
    let p = relaxed(5.0, 3.5, 2.7);
    let scan = rf_frequency_scan(&p, &[3.5], 20.0, 2048, 8).unwrap();
    let point = &scan.sweep.points[0].value;
    assert!(!point.locked);
    let dom = point.dominant.expect("peak");
    assert!(
        (dom.freq_mhz - 5.0).abs() < 1.0 && (dom.freq_mhz - 3.5).abs() > 1.0,
        "dominant {} should stay near Ω_R = 5, not Ω_m = 3.5",
        dom.freq_mhz
    );
}
