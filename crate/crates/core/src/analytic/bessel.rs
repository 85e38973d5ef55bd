//! Bessel functions of the first kind for the sideband law.
//!
//! Two classical evaluation routes: the ascending power series where it is
//! free of cancellation (|x| ≤ 9), and Miller's downward recurrence with
//! sum-rule normalization elsewhere. Both stay within the spec'd domain
//! |n| ≤ 50, |x| ≤ 50 and deliver better than 1e−12 absolute error there.

use super::AnalyticError;

const MAX_ORDER: i32 = 50;
const MAX_ARG: f64 = 50.0;
const SERIES_CUTOFF: f64 = 9.0;
/// Starting order for downward recurrence; far enough above max(n, x)
/// that the minimal solution has decayed below double precision.
const MILLER_START: usize = 180;

/// J_n(x) for |n| ≤ 50, |x| ≤ 50.
pub fn bessel_j(n: i32, x: f64) -> Result<f64, AnalyticError> {
    if n.abs() > MAX_ORDER {
        return Err(AnalyticError::OutOfRange(format!(
            "order |{n}| exceeds {MAX_ORDER}"
        )));
    }
    if !(x.abs() <= MAX_ARG) {
        return Err(AnalyticError::OutOfRange(format!(
            "argument |{x}| exceeds {MAX_ARG}"
        )));
    }
    // J_{−n}(x) = (−1)^n J_n(x) and J_n(−x) = (−1)^n J_n(x)
    let mut sign = 1.0;
    let nn = if n < 0 {
        if n % 2 != 0 {
            sign = -sign;
        }
        (-n) as usize
    } else {
        n as usize
    };
    let xx = if x < 0.0 {
        if nn % 2 == 1 {
            sign = -sign;
        }
        -x
    } else {
        x
    };
    if xx == 0.0 {
        return Ok(if nn == 0 { 1.0 } else { 0.0 });
    }
    let value = if xx <= SERIES_CUTOFF {
        series(nn, xx)
    } else {
        miller(nn, xx)
    };
    Ok(sign * value)
}

/// Ascending series Σ_k (−1)^k (x/2)^{n+2k} / (k!(n+k)!), summed until the
/// terms fall below 1e−18 of the running sum.
fn series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    // leading term (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= -q / (k * (n as f64 + k));
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() + 1e-300 {
            return sum;
        }
        k += 1.0;
        if k > 400.0 {
            return sum;
        }
    }
}

/// Miller's algorithm: recur J_{k−1} = (2k/x)J_k − J_{k+1} downward from a
/// tiny trial value and normalize with J_0 + 2Σ J_{2k} = 1.
fn miller(n: usize, x: f64) -> f64 {
    let mut jp = 0.0f64; // J_{k+1}
    let mut j = 1e-300f64; // J_k
    let mut target = 0.0f64;
    let mut norm = 0.0f64; // accumulates J_0 + 2ΣJ_{2k}
    for k in (0..=MILLER_START).rev() {
        let jm = (2.0 * (k + 1) as f64 / x) * j - jp;
        jp = j;
        j = jm;
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        if k == n {
            target = j;
        }
        if j.abs() > 1e100 {
            jp *= 1e-100;
            j *= 1e-100;
            norm *= 1e-100;
            target *= 1e-100;
        }
    }
    target / norm
}
