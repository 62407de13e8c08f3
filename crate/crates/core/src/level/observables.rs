//! Per-path distortion observables.
//!
//! `h` (one sample) and `h*` (multi-sample, full or truncated) are the
//! integrated squared predictors along one trajectory; the distortion of a
//! policy is `baseline - E[h]` resp. `baseline - E[h*]`. Censored samples
//! contribute nothing: later segments keep the last informative predictor
//! and segments beyond the horizon are empty.

use super::{trigger_times, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::fbm::{FbmPath, HurstParameter, ThreeSampleCoefficients, TwoSampleCoefficients};
use crate::distortion::EstimatorMode;
use crate::quad::{power_product_integral, quad, QuadratureSpec};

/// Closed form of `(1 / tau^4H) int_tau^b (t^2H + tau^2H - (t-tau)^2H)^2 dt`,
/// the bracket of the one-sample observable. Only the scale-free
/// `mu^2H (mu-1)^2H` integral is numeric; it runs tightened because the
/// power terms cancel heavily when `b/tau` is large.
pub fn one_sample_bracket(tau: f64, b: f64, h: HurstParameter) -> Result<f64> {
    if !(tau > 0.0 && tau <= b) {
        return Err(Error::invalid(format!(
            "bracket needs 0 < tau <= b, got ({tau}, {b})"
        )));
    }
    let two_h = h.two_h();
    let four_h1 = 2.0 * two_h + 1.0;
    let two_h1 = two_h + 1.0;
    let p2 = tau.powf(two_h);
    let p4 = p2 * p2;
    let mu = power_product_integral(b / tau, two_h, &QuadratureSpec::tight())?;
    Ok((b - tau)
        + (b.powf(four_h1) / p4 - tau) / four_h1
        + 2.0 * (b.powf(two_h1) - tau.powf(two_h1)) / p2 / two_h1
        + (b - tau).powf(four_h1) / p4 / four_h1
        - 2.0 * (b - tau).powf(two_h1) / p2 / two_h1
        - 2.0 * tau * mu)
}

/// One-sample observable `h(eta, path)`: zero when the level is never hit
/// before the horizon, otherwise `eta^2 / 4` times the closed bracket at the
/// hitting time. The threshold value `eta^2` is used even though the
/// discrete trigger sample slightly overshoots it; the Monte Carlo oracle
/// uses actual values, and the gap is part of the discretization budget.
pub fn observed_distortion_one(eta: f64, path: &FbmPath) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::invalid(format!(
            "threshold must be positive, got {eta}"
        )));
    }
    let policy = ThresholdPolicy::from_level(eta, path.hurst(), path.horizon())?;
    let outcome = trigger_times(path, &policy)?;
    if outcome.censored[0] {
        return Ok(0.0);
    }
    let bracket = one_sample_bracket(outcome.times[0], path.horizon().value(), path.hurst())?;
    Ok(0.25 * eta * eta * bracket)
}

/// Multi-sample observable `h*` for a threshold policy on one path.
pub fn observed_modified_distortion(
    policy: &ThresholdPolicy,
    path: &FbmPath,
    mode: EstimatorMode,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if mode == EstimatorMode::Full && policy.len() > 3 {
        return Err(Error::invalid(
            "full-history observable has closed forms for at most three samples",
        ));
    }
    let outcome = trigger_times(path, policy)?;
    let k = outcome.observed();
    modified_distortion_at_times(
        &outcome.times[..k],
        &outcome.values[..k],
        path.hurst(),
        path.horizon().value(),
        mode,
        spec,
    )
}

/// `h*` for explicit (time, value) samples: the sum over segments
/// `[tau_i, tau_{i+1})` (with `tau_{k+1} = T`) of the integrated squared
/// predictor, using the sampled values. Degenerate policies with fixed
/// times land here too, which is what the deterministic/Monte Carlo
/// sandwich checks exercise.
pub fn modified_distortion_at_times(
    times: &[f64],
    values: &[f64],
    h: HurstParameter,
    t_end: f64,
    mode: EstimatorMode,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::invalid("times/values length mismatch"));
    }
    let k = times.len();
    if k == 0 {
        return Ok(0.0);
    }
    if mode == EstimatorMode::Full && k > 3 {
        return Err(Error::invalid(
            "full-history observable has closed forms for at most three samples",
        ));
    }

    let mut total = 0.0;
    for i in 0..k {
        let seg_start = times[i];
        let seg_end = if i + 1 < k { times[i + 1] } else { t_end };
        if seg_end <= seg_start {
            continue;
        }
        total += match (mode, i) {
            (_, 0) | (EstimatorMode::Truncated, _) => {
                let b = values[i];
                let tau = times[i];
                0.25 * b * b * one_sample_bracket_segment(tau, seg_start, seg_end, h)?
            }
            (EstimatorMode::Full, 1) => {
                let c = TwoSampleCoefficients::new(times[0], times[1], h)?;
                quad(
                    |t| c.square_at(t, values[0], values[1]),
                    seg_start,
                    seg_end,
                    spec,
                )?
            }
            (EstimatorMode::Full, _) => {
                let c = ThreeSampleCoefficients::new(times[0], times[1], times[2], h)?;
                quad(
                    |t| c.square_at(t, values[0], values[1], values[2]),
                    seg_start,
                    seg_end,
                    spec,
                )?
            }
        };
    }
    Ok(total)
}

/// Bracket restricted to a segment `[a, b]` that starts at the sample time.
fn one_sample_bracket_segment(tau: f64, a: f64, b: f64, h: HurstParameter) -> Result<f64> {
    debug_assert!((a - tau).abs() < 1e-12 * tau.max(1.0));
    let _ = a;
    one_sample_bracket(tau, b, h)
}
