//! Aggregate squared-error distortion of deterministic sampling schedules,
//! in full-history and truncated estimation modes.
//!
//! The distortion of a schedule is the no-sample baseline
//! `T^(2H+1) / (2H+1)` minus the integrated second moment of the predictor
//! over each inter-sample segment. For one, two and three samples the
//! segment integrands have closed coefficient forms; for larger budgets the
//! second moment comes from the general conditioning solve. Both routes are
//! kept: the closed forms are fast paths, the general solve is their
//! cross-check.

use crate::error::{Error, Result};
use crate::fbm::{
    ConditioningSolve, Horizon, HurstParameter, ThreeSampleCoefficients, TwoSampleCoefficients,
};
use crate::quad::{quad, QuadratureSpec};
use serde::Serialize;

/// Optimizers keep `tau_1 >= MIN_FIRST_SAMPLE_FRACTION * T` to avoid the
/// `1 / tau_1^2H` blow-up at the origin.
pub const MIN_FIRST_SAMPLE_FRACTION: f64 = 1e-6;

/// Ordered deterministic sampling times in `(0, T]`. May be empty (the
/// no-sample design) for Monte Carlo baselines; closed-form evaluation
/// requires at least one sample.
#[derive(Debug, Clone, Serialize)]
pub struct SamplingSchedule {
    times: Vec<f64>,
    horizon: Horizon,
}

impl SamplingSchedule {
    pub fn new(times: Vec<f64>, horizon: Horizon) -> Result<Self> {
        if let Some(&first) = times.first() {
            if !(first > 0.0) {
                return Err(Error::invalid(format!(
                    "first sampling time must be positive, got {first}"
                )));
            }
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(
                "sampling times must be strictly increasing",
            ));
        }
        if let Some(&last) = times.last() {
            if last > horizon.value() {
                return Err(Error::invalid(format!(
                    "last sampling time {last} exceeds horizon {}",
                    horizon.value()
                )));
            }
        }
        Ok(SamplingSchedule { times, horizon })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Which estimator produced a distortion figure, and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistortionKind {
    DeterministicFull,
    DeterministicTruncated,
    LevelFull,
    LevelTruncated,
    Empirical,
}

/// Full-history vs last-sample-only estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    Full,
    Truncated,
}

/// A distortion value in units of time x value^2, tagged with its mode.
/// `std_error` is populated only for Monte Carlo estimates.
#[derive(Debug, Clone, Serialize)]
pub struct DistortionReport {
    pub value: f64,
    pub kind: DistortionKind,
    pub std_error: Option<f64>,
}

impl DistortionReport {
    pub(crate) fn analytic(value: f64, kind: DistortionKind, baseline: f64) -> Self {
        debug_assert!(
            value >= -1e-9 * baseline && value <= baseline * (1.0 + 1e-9),
            "distortion {value} outside [0, baseline {baseline}]"
        );
        DistortionReport {
            value,
            kind,
            std_error: None,
        }
    }

    pub(crate) fn empirical(value: f64, std_error: f64) -> Self {
        DistortionReport {
            value,
            kind: DistortionKind::Empirical,
            std_error: Some(std_error),
        }
    }
}

/// `T^(2H+1) / (2H+1)`: the distortion with zero samples, and the upper
/// bound for every design.
pub fn baseline_distortion(h: HurstParameter, horizon: Horizon) -> f64 {
    let e = h.two_h() + 1.0;
    horizon.value().powf(e) / e
}

/// Squared one-sample predictor kernel `(s^2H + tau^2H - |s-tau|^2H)^2`.
fn one_sample_kernel_sq(s: f64, tau: f64, two_h: f64) -> f64 {
    let v = s.powf(two_h) + tau.powf(two_h) - (s - tau).abs().powf(two_h);
    v * v
}

/// Integrated predictor second moment over `[a, b]` for a single sample at
/// `tau <= a`: `(1 / 4 tau^2H) int_a^b (s^2H + tau^2H - |s-tau|^2H)^2 ds`.
fn one_sample_segment(tau: f64, a: f64, b: f64, two_h: f64, spec: &QuadratureSpec) -> Result<f64> {
    let integral = quad(|s| one_sample_kernel_sq(s, tau, two_h), a, b, spec)?;
    Ok(integral / (4.0 * tau.powf(two_h)))
}

/// Distortion of a single sample at `tau1`:
/// `baseline - (1 / 4 tau1^2H) int_tau1^T (s^2H + tau1^2H - |s-tau1|^2H)^2 ds`.
pub fn distortion_one(
    tau1: f64,
    h: HurstParameter,
    horizon: Horizon,
    spec: &QuadratureSpec,
) -> Result<DistortionReport> {
    let t_end = horizon.value();
    if !(tau1 > 0.0) {
        return Err(Error::invalid(format!(
            "sample time must be positive, got {tau1}"
        )));
    }
    if tau1 > t_end {
        return Err(Error::invalid(format!(
            "sample time {tau1} exceeds horizon {t_end}"
        )));
    }
    let base = baseline_distortion(h, horizon);
    let gain = one_sample_segment(tau1, tau1, t_end, h.two_h(), spec)?;
    Ok(DistortionReport::analytic(
        base - gain,
        DistortionKind::DeterministicFull,
        base,
    ))
}

/// Distortion of a multi-sample schedule.
///
/// Full mode conditions on the whole sample history; budgets of one to
/// three samples use the closed coefficient forms, larger budgets integrate
/// the general-solve predictor second moment segment by segment. Truncated
/// mode applies the one-sample formula per segment for any budget.
pub fn distortion_multi(
    sched: &SamplingSchedule,
    h: HurstParameter,
    mode: EstimatorMode,
    spec: &QuadratureSpec,
) -> Result<DistortionReport> {
    if sched.is_empty() {
        return Err(Error::invalid(
            "closed-form distortion needs at least one sample",
        ));
    }
    let t_end = sched.horizon().value();
    let base = baseline_distortion(h, sched.horizon());
    let times = sched.times();
    let kind = match mode {
        EstimatorMode::Full => DistortionKind::DeterministicFull,
        EstimatorMode::Truncated => DistortionKind::DeterministicTruncated,
    };
    let gain = match mode {
        EstimatorMode::Truncated => truncated_gain(times, t_end, h, spec)?,
        EstimatorMode::Full => full_gain(times, t_end, h, spec)?,
    };
    Ok(DistortionReport::analytic(base - gain, kind, base))
}

/// Sum of per-segment one-sample second moments (last observation only).
fn truncated_gain(
    times: &[f64],
    t_end: f64,
    h: HurstParameter,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let two_h = h.two_h();
    let mut gain = 0.0;
    for (i, &tau) in times.iter().enumerate() {
        let next = times.get(i + 1).copied().unwrap_or(t_end);
        gain += one_sample_segment(tau, tau, next, two_h, spec)?;
    }
    Ok(gain)
}

/// Sum of per-segment full-history predictor second moments.
fn full_gain(times: &[f64], t_end: f64, h: HurstParameter, spec: &QuadratureSpec) -> Result<f64> {
    let two_h = h.two_h();
    let n = times.len();
    let mut gain = 0.0;
    for (i, &tau) in times.iter().enumerate() {
        let next = times.get(i + 1).copied().unwrap_or(t_end);
        if next <= tau {
            continue;
        }
        gain += match i {
            0 => one_sample_segment(tau, tau, next, two_h, spec)?,
            1 => {
                let c = TwoSampleCoefficients::new(times[0], times[1], h)?;
                quad(|t| c.mean_square_at(t), tau, next, spec)?
            }
            2 => {
                let c = ThreeSampleCoefficients::new(times[0], times[1], times[2], h)?;
                quad(|t| c.mean_square_at(t), tau, next, spec)?
            }
            _ => {
                let solve = ConditioningSolve::new(&times[..=i], h)?;
                general_segment_gain(&solve, tau, next, spec)?
            }
        };
        let _ = n;
    }
    Ok(gain)
}

/// `int_a^b E(pred_t^2) dt` through the general conditioning solve; the
/// quadrature oracle for the closed forms and the route for budgets > 3.
pub(crate) fn general_segment_gain(
    solve: &ConditioningSolve,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    // The integrand needs a Result-free closure; capture failures and
    // surface the first one afterwards.
    let failed = std::cell::Cell::new(false);
    let v = quad(
        |t| match solve.predictor_mean_square(t) {
            Ok(v) => v,
            Err(_) => {
                failed.set(true);
                f64::NAN
            }
        },
        a,
        b,
        spec,
    );
    if failed.get() {
        return Err(Error::SingularConditioning(
            "conditioning solve failed inside segment integral".into(),
        ));
    }
    v
}
