//! Deterministic schedule optimizers: bracketing search for one sample,
//! reparameterized multi-start simplex search for larger budgets.

mod brent;
mod simplex;

pub use brent::minimize_scan_brent;

use crate::distortion::{
    baseline_distortion, distortion_multi, distortion_one, DistortionReport, EstimatorMode,
    SamplingSchedule, MIN_FIRST_SAMPLE_FRACTION,
};
use crate::error::Result;
use crate::fbm::{Horizon, HurstParameter};
use crate::quad::QuadratureSpec;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use simplex::{nelder_mead, SimplexOptions};

/// An optimized schedule with its distortion and convergence evidence.
/// `converged` certifies a first-order stationarity check: the central
/// finite-difference gradient of `J / baseline` with respect to `tau / T`
/// has norm below `1e-4`.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizeResult {
    pub schedule: SamplingSchedule,
    pub distortion: DistortionReport,
    pub evaluations: u64,
    pub converged: bool,
}

const STATIONARITY_NORM_TOL: f64 = 1e-4;
const STATIONARITY_STEP: f64 = 1e-5;
const RESTARTS: usize = 8;

/// Optimal single sampling time on `[eps T, T]` by scan + Brent with
/// bracketing tolerance `1e-6 T`.
pub fn optimize_one(
    h: HurstParameter,
    horizon: Horizon,
    spec: &QuadratureSpec,
) -> Result<OptimizeResult> {
    let t_end = horizon.value();
    let lo = MIN_FIRST_SAMPLE_FRACTION * t_end;
    let objective = |tau: f64| match distortion_one(tau, h, horizon, spec) {
        Ok(r) => r.value,
        Err(_) => f64::INFINITY,
    };
    let (tau, _, evaluations) =
        minimize_scan_brent(objective, lo, t_end, 16, 1e-6 * t_end, 200);
    let schedule = SamplingSchedule::new(vec![tau], horizon)?;
    let distortion = distortion_one(tau, h, horizon, spec)?;
    let converged = stationary(&schedule, h, EstimatorMode::Full, spec)?;
    Ok(OptimizeResult {
        schedule,
        distortion,
        evaluations,
        converged,
    })
}

/// Optimal `n`-sample schedule. Runs Nelder–Mead in unconstrained
/// coordinates (cumulative softplus scaled into `(0, T]`), restarted from
/// jittered uniform schedules; returns the best restart, ties broken by the
/// lexicographically smallest schedule.
pub fn optimize_multi(
    h: HurstParameter,
    horizon: Horizon,
    n: usize,
    mode: EstimatorMode,
    spec: &QuadratureSpec,
) -> Result<OptimizeResult> {
    if n == 1 {
        return optimize_one(h, horizon, spec);
    }
    let t_end = horizon.value();
    let base = baseline_distortion(h, horizon);
    let mut evaluations = 0u64;

    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for restart in 0..RESTARTS {
        // Jittered uniform schedule as the start.
        let mut times: Vec<f64> = (1..=n)
            .map(|i| {
                let u = i as f64 / (n + 1) as f64;
                let jitter = if restart == 0 {
                    0.0
                } else {
                    rng.random_range(-0.3..0.3) / (n + 1) as f64
                };
                ((u + jitter).clamp(0.02, 0.98)) * t_end
            })
            .collect();
        times.sort_by(f64::total_cmp);
        let x0 = free_from_times(&times, t_end);

        let mut objective = |x: &[f64]| {
            let times = times_from_free(x, t_end);
            if times[0] < MIN_FIRST_SAMPLE_FRACTION * t_end {
                return f64::INFINITY;
            }
            match SamplingSchedule::new(times, horizon)
                .and_then(|s| distortion_multi(&s, h, mode, spec))
            {
                Ok(r) => r.value,
                Err(_) => f64::INFINITY,
            }
        };
        let opts = SimplexOptions {
            max_iter: 250 * (n + 1),
            diameter_tol: 1e-7 * t_end,
            spread_tol: 1e-9 * base,
        };
        let r = nelder_mead(
            &mut objective,
            |x| times_from_free(x, t_end),
            &x0,
            0.25,
            &opts,
        );
        evaluations += r.evaluations;
        let cand_times = times_from_free(&r.x, t_end);
        let replace = match &best {
            None => true,
            Some((fbest, tbest, _)) => {
                r.fx < *fbest
                    || (r.fx == *fbest && lexicographically_smaller(&cand_times, tbest))
            }
        };
        if replace {
            best = Some((r.fx, cand_times, r.converged));
        }
    }

    let (_, times, simplex_converged) = best.expect("at least one restart ran");
    let schedule = SamplingSchedule::new(times, horizon)?;
    let distortion = distortion_multi(&schedule, h, mode, spec)?;
    let converged = simplex_converged && stationary(&schedule, h, mode, spec)?;
    Ok(OptimizeResult {
        schedule,
        distortion,
        evaluations,
        converged,
    })
}

fn lexicographically_smaller(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn inv_softplus(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

/// `n + 1` free variables -> `n` strictly increasing times in `(0, T)`:
/// positive increments by softplus, cumulated, then normalized by the total
/// so the last increment is the gap to the horizon.
fn times_from_free(x: &[f64], t_end: f64) -> Vec<f64> {
    let increments: Vec<f64> = x.iter().map(|&v| softplus(v).max(1e-300)).collect();
    let total: f64 = increments.iter().sum();
    let n = x.len() - 1;
    let mut acc = 0.0;
    let mut times = Vec::with_capacity(n);
    for inc in increments.iter().take(n) {
        acc += inc;
        times.push(acc / total * t_end);
    }
    times
}

fn free_from_times(times: &[f64], t_end: f64) -> Vec<f64> {
    let mut prev = 0.0;
    let mut x = Vec::with_capacity(times.len() + 1);
    for &t in times {
        x.push(inv_softplus((t - prev) / t_end));
        prev = t;
    }
    x.push(inv_softplus((t_end - prev) / t_end));
    x
}

/// Central finite-difference stationarity of `J / baseline` in `tau / T`
/// coordinates.
fn stationary(
    schedule: &SamplingSchedule,
    h: HurstParameter,
    mode: EstimatorMode,
    spec: &QuadratureSpec,
) -> Result<bool> {
    let horizon = schedule.horizon();
    let t_end = horizon.value();
    let base = baseline_distortion(h, horizon);
    let times = schedule.times();
    let eval = |ts: &[f64]| -> Result<f64> {
        let s = SamplingSchedule::new(ts.to_vec(), horizon)?;
        Ok(distortion_multi(&s, h, mode, spec)?.value / base)
    };
    let step = STATIONARITY_STEP * t_end;
    let mut norm_sq = 0.0;
    for i in 0..times.len() {
        let mut plus = times.to_vec();
        let mut minus = times.to_vec();
        plus[i] += step;
        minus[i] -= step;
        // Keep the perturbed schedules valid; at an interior optimum this
        // never binds.
        let upper = times.get(i + 1).copied().unwrap_or(t_end);
        let lower = if i == 0 { 0.0 } else { times[i - 1] };
        if plus[i] >= upper || minus[i] <= lower {
            return Ok(false);
        }
        let g = (eval(&plus)? - eval(&minus)?) / (2.0 * STATIONARITY_STEP);
        norm_sq += g * g;
    }
    Ok(norm_sq.sqrt() < STATIONARITY_NORM_TOL)
}
