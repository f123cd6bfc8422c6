//! Quadrature and angle bookkeeping used by the phase integrals.

use std::f64::consts::{PI, TAU};

/// Composite trapezoid rule for samples on a uniform grid of spacing `dt`.
pub fn trapezoid(samples: &[f64], dt: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = samples[1..n - 1].iter().sum();
            dt * (interior + 0.5 * (samples[0] + samples[n - 1]))
        }
    }
}

/// Running trapezoid integral; element `k` integrates from node 0 to node `k`.
pub fn cumulative_trapezoid(samples: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    for (k, &s) in samples.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * dt * (samples[k - 1] + s);
        }
        out.push(acc);
    }
    out
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_two_pi(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid of a tiny negative number rounds up to exactly 2π
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduces an angle to `(-π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let r = wrap_two_pi(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_pi(a - b).abs()
}

/// Removes 2π jumps between adjacent samples of a principal-valued angle.
pub fn unwrap(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut offset = 0.0;
    for (k, &a) in angles.iter().enumerate() {
        if k > 0 {
            let step = a - angles[k - 1];
            if step > PI {
                offset -= TAU;
            } else if step < -PI {
                offset += TAU;
            }
        }
        out.push(a + offset);
    }
    out
}
