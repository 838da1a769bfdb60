//! Trajectory diagnostics and the exact recursions of the piecewise-constant
//! argument example.

use alloc::format;
use alloc::vec::Vec;

use crate::solver::{example1_epsilon, Example1Variant, Trajectory};
use crate::{Error, Result};

/// Exact per-period multiplier `x(n + 1) / x(n)`.
pub fn example1_ratio(b: f64, variant: Example1Variant) -> f64 {
    let eps = example1_epsilon(b);
    match variant {
        Example1Variant::Baseline => 1.0 - b,
        Example1Variant::VanishingA => -b * (1.0 - eps),
        Example1Variant::PositiveA => 2.0 * b * libm::expm1(-0.5 * (1.0 - eps)),
    }
}

/// `x(0), ..., x(n)` from `x(0) = 1`.
pub fn example1_exact(b: f64, variant: Example1Variant, n: usize) -> Vec<f64> {
    let ratio = example1_ratio(b, variant);
    let mut out = Vec::with_capacity(n + 1);
    let mut x = 1.0;
    out.push(x);
    for _ in 0..n {
        x *= ratio;
        out.push(x);
    }
    out
}

/// Geometric mean of `|x(t + period)| / |x(t)|` over `t = burn_in + k period`.
/// Ratios with a zero denominator are skipped; if every sample is zero the
/// result is 0.
pub fn growth_factor(trajectory: &Trajectory, period: f64, burn_in: f64) -> Result<f64> {
    if !(period > 0.0) || !(burn_in >= 0.0) {
        return Err(Error::Precondition(format!(
            "need period > 0 and burn_in >= 0, got {period} and {burn_in}"
        )));
    }
    let horizon = trajectory.horizon();
    let tol = 1e-9 * horizon.max(1.0);
    if horizon + tol < burn_in + 3.0 * period {
        return Err(Error::InsufficientData(format!(
            "horizon {horizon} is shorter than burn_in + 3 periods = {}",
            burn_in + 3.0 * period
        )));
    }
    let count = libm::floor((horizon - burn_in + tol) / period) as usize;
    let mut samples = Vec::with_capacity(count + 1);
    for k in 0..=count {
        let t = (burn_in + k as f64 * period).min(horizon);
        samples.push(trajectory.evaluate(t)?.abs());
    }
    if samples.iter().all(|x| *x == 0.0) {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut used = 0usize;
    for w in samples.windows(2) {
        if w[0] == 0.0 {
            continue;
        }
        if w[1] == 0.0 {
            return Ok(0.0);
        }
        log_sum += libm::log(w[1] / w[0]);
        used += 1;
    }
    if used == 0 {
        return Ok(0.0);
    }
    Ok(libm::exp(log_sum / used as f64))
}

/// Least-squares slope of `ln |x|` against `t` after `burn_in`. When the
/// solution changes sign in the window the fit uses the local maxima of
/// `|x|` instead of every grid node.
pub fn decay_rate(trajectory: &Trajectory, burn_in: f64) -> Result<f64> {
    let horizon = trajectory.horizon();
    if !(burn_in >= 0.0) || horizon < 2.0 * burn_in {
        return Err(Error::Precondition(format!(
            "decay rate needs horizon >= 2 burn_in, got horizon {horizon} and burn_in {burn_in}"
        )));
    }
    let window: Vec<(f64, f64)> = trajectory.nodes().filter(|(t, _)| *t >= burn_in).collect();
    let oscillating = sign_changes(window.iter().map(|p| p.1)) > 0;
    let points: Vec<(f64, f64)> = if oscillating {
        peaks(&window)
    } else {
        window
    };
    let usable: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|(_, x)| x.abs() > 1e-300)
        .map(|(t, x)| (t, libm::log(x.abs())))
        .collect();
    if usable.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "only {} usable samples for the decay-rate fit",
            usable.len()
        )));
    }
    Ok(slope(&usable))
}

fn peaks(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points
        .windows(3)
        .filter(|w| {
            let (a, b, c) = (w[0].1.abs(), w[1].1.abs(), w[2].1.abs());
            b >= a && b > c
        })
        .map(|w| w[1])
        .collect()
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (t, y) in points {
        sxy += (t - mt) * (y - my);
        sxx += (t - mt) * (t - mt);
    }
    sxy / sxx
}

/// Strict sign alternations, ignoring values negligible against the
/// largest magnitude (a solution passing exactly through zero would
/// otherwise be counted by its rounding noise).
fn sign_changes(values: impl Iterator<Item = f64> + Clone) -> usize {
    let scale = values.clone().fold(0.0, |m: f64, x| m.max(x.abs()));
    let floor = 1e-12 * scale;
    let mut last = 0i8;
    let mut count = 0;
    for x in values {
        let s = if x > floor {
            1
        } else if x < -floor {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
    }
    count
}

/// Sign changes of the grid values on `[from, to]`.
pub fn count_sign_changes(trajectory: &Trajectory, from: f64, to: f64) -> usize {
    let values: Vec<f64> = trajectory
        .nodes()
        .filter(|(t, _)| *t >= from && *t <= to)
        .map(|(_, x)| x)
        .collect();
    sign_changes(values.iter().copied())
}
