//! Monte Carlo distortion oracle: the true pathwise integrated squared
//! error of a design, estimated over simulated trajectories.

use super::{trigger_times, ThresholdPolicy};
use crate::distortion::{DistortionReport, EstimatorMode, SamplingSchedule};
use crate::error::{Error, Result};
use crate::fbm::{ConditioningSolve, FbmPath, Horizon, HurstParameter, PathGenerator};
use rayon::prelude::*;

/// Fixed sampling times or a trigger policy.
#[derive(Debug, Clone, Copy)]
pub enum Design<'a> {
    Schedule(&'a SamplingSchedule),
    Policy(&'a ThresholdPolicy),
}

/// Simulates `n_paths` trajectories, applies the design to each, computes
/// the pathwise `int_0^T (B_t - pred_t)^2 dt` by grid quadrature through
/// the conditioning solve, and returns mean and standard error.
///
/// Deterministic times are snapped to the simulation grid. Path substreams
/// are pre-assigned and the reduction order is fixed, so the result does
/// not depend on the degree of parallelism.
pub fn empirical_distortion(
    design: Design<'_>,
    h: HurstParameter,
    horizon: Horizon,
    grid_n: usize,
    n_paths: u64,
    seed: u64,
    mode: EstimatorMode,
) -> Result<DistortionReport> {
    if n_paths < 2 {
        return Err(Error::invalid("need at least two paths for a standard error"));
    }
    if (n_paths as u128) * (grid_n as u128) > 1 << 40 {
        return Err(Error::ResourceLimit(format!(
            "{n_paths} paths x {grid_n} grid points exceeds the sampling budget"
        )));
    }
    match design {
        Design::Schedule(s) => {
            if s.horizon() != horizon {
                return Err(Error::invalid("schedule horizon mismatch"));
            }
        }
        Design::Policy(p) => {
            if p.horizon() != horizon || p.hurst() != h {
                return Err(Error::invalid("policy parameters mismatch"));
            }
        }
    }

    let generator = PathGenerator::new(h, horizon, grid_n, seed)?;
    let per_path: Result<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let path = generator.generate(i);
            path_squared_error(&path, design, mode)
        })
        .collect();
    let per_path = per_path?;

    // Fixed-order reduction for reproducibility.
    let n = per_path.len() as f64;
    let mean = per_path.iter().sum::<f64>() / n;
    let var = per_path.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(DistortionReport::empirical(mean, (var / n).sqrt()))
}

/// Sample indices for a design on one path: grid index and observed value
/// per retained (informative) sample.
fn design_samples(path: &FbmPath, design: Design<'_>) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = path.grid_n();
    let dt = path.dt();
    match design {
        Design::Schedule(sched) => {
            let mut idx = Vec::with_capacity(sched.len());
            for &tau in sched.times() {
                let j = ((tau / dt).round() as usize).clamp(1, n);
                if let Some(&prev) = idx.last() {
                    if j <= prev {
                        return Err(Error::invalid(
                            "schedule times collapse onto the same grid point",
                        ));
                    }
                }
                idx.push(j);
            }
            let values = idx.iter().map(|&j| path.values()[j]).collect();
            Ok((idx, values))
        }
        Design::Policy(policy) => {
            let outcome = trigger_times(path, policy)?;
            let k = outcome.observed();
            let idx = outcome.times[..k]
                .iter()
                .map(|&t| ((t / dt).round() as usize).clamp(1, n))
                .collect();
            Ok((idx, outcome.values[..k].to_vec()))
        }
    }
}

/// Trapezoid integral of the squared estimation error along one path.
fn path_squared_error(path: &FbmPath, design: Design<'_>, mode: EstimatorMode) -> Result<f64> {
    let (sample_idx, sample_values) = design_samples(path, design)?;
    let n = path.grid_n();
    let dt = path.dt();
    let values = path.values();
    let h = path.hurst();

    // Squared error at every grid node.
    let mut sq = vec![0.0f64; n + 1];
    // Before the first sample the predictor is zero.
    let first = sample_idx.first().copied().unwrap_or(n + 1);
    for j in 0..=first.min(n) {
        sq[j] = values[j] * values[j];
    }

    for (seg, &start_idx) in sample_idx.iter().enumerate() {
        let end_idx = sample_idx.get(seg + 1).copied().unwrap_or(n);
        if end_idx <= start_idx {
            continue;
        }
        let (cond_times, cond_values): (Vec<f64>, Vec<f64>) = match mode {
            EstimatorMode::Full => (
                sample_idx[..=seg].iter().map(|&j| dt * j as f64).collect(),
                sample_values[..=seg].to_vec(),
            ),
            EstimatorMode::Truncated => {
                (vec![dt * start_idx as f64], vec![sample_values[seg]])
            }
        };
        let solve = ConditioningSolve::new(&cond_times, h)?;
        let weights_cache: Result<Vec<Vec<f64>>> = ((start_idx + 1)..=end_idx)
            .map(|j| solve.weights(dt * j as f64))
            .collect();
        for (off, w) in weights_cache?.into_iter().enumerate() {
            let j = start_idx + 1 + off;
            let pred: f64 = w.iter().zip(&cond_values).map(|(a, b)| a * b).sum();
            let e = values[j] - pred;
            sq[j] = e * e;
        }
        // At the sample node itself the error is zero under full
        // conditioning; under truncation it is too (the sample is its own
        // predictor there).
        sq[start_idx] = 0.0;
    }

    let mut acc = 0.0;
    for j in 0..n {
        acc += 0.5 * (sq[j] + sq[j + 1]) * dt;
    }
    Ok(acc)
}
