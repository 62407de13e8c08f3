//! Fractional Brownian motion kernel: covariance structure, increment
//! correlation, exact path synthesis and Gaussian-conditioning prediction.

mod predict;
mod synthesis;

pub use predict::{
    predict, three_sample_coefficients, two_sample_coefficients, ConditioningSet,
    ConditioningSolve, PredictorCoefficients, ThreeSampleCoefficients, TwoSampleCoefficients,
};
pub use synthesis::{simulate_path, PathGenerator};

use crate::error::{Error, Result};
use serde::Serialize;

/// Hurst parameter, the dependence exponent of the process. Strictly inside
/// (0, 1); the endpoints are degenerate and rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HurstParameter(f64);

impl HurstParameter {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::invalid(format!(
                "Hurst parameter must lie strictly in (0, 1), got {h}"
            )));
        }
        Ok(HurstParameter(h))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `2H`, the exponent that appears in the covariance kernel.
    pub fn two_h(self) -> f64 {
        2.0 * self.0
    }

    /// `(2H + 1) / 4`, the exponent of the threshold–horizon scaling law.
    pub fn threshold_exponent(self) -> f64 {
        (2.0 * self.0 + 1.0) / 4.0
    }
}

/// End of the estimation window `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Horizon(f64);

impl Horizon {
    pub fn new(t_end: f64) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invalid(format!(
                "horizon must be positive and finite, got {t_end}"
            )));
        }
        Ok(Horizon(t_end))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `Cov(B_t, B_s) = (t^2H + s^2H - |t-s|^2H) / 2`. Symmetric in `(t, s)`;
/// negative times are rejected.
pub fn covariance(t: f64, s: f64, h: HurstParameter) -> Result<f64> {
    if t < 0.0 || s < 0.0 {
        return Err(Error::invalid(format!(
            "covariance requires nonnegative times, got ({t}, {s})"
        )));
    }
    let two_h = h.two_h();
    Ok(0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h)))
}

/// Correlation of unit increments `n` lags apart:
/// `rho_H(n) = ((n+1)^2H + (n-1)^2H - 2 n^2H) / 2`.
///
/// Positive for H > 1/2 (long memory), zero at H = 1/2, negative for
/// H < 1/2. Lag zero is rejected: the formula targets disjoint increments.
pub fn increment_autocorrelation(n: u32, h: HurstParameter) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid(
            "increment autocorrelation needs lag >= 1 (disjoint increments)",
        ));
    }
    let two_h = h.two_h();
    let n = n as f64;
    Ok(0.5 * ((n + 1.0).powf(two_h) + (n - 1.0).powf(two_h) - 2.0 * n.powf(two_h)))
}

/// A discretized trajectory on the uniform grid `0, dt, 2dt, ..., T` with
/// `dt = T / grid_n`. `values[0] = 0` always, and regenerating with the same
/// `(h, t_end, grid_n, seed)` yields bit-identical values.
#[derive(Debug, Clone)]
pub struct FbmPath {
    h: HurstParameter,
    t_end: Horizon,
    grid_n: usize,
    values: Vec<f64>,
    seed: u64,
}

impl FbmPath {
    pub(crate) fn from_parts(
        h: HurstParameter,
        t_end: Horizon,
        grid_n: usize,
        values: Vec<f64>,
        seed: u64,
    ) -> Self {
        debug_assert_eq!(values.len(), grid_n + 1);
        debug_assert_eq!(values[0], 0.0);
        FbmPath {
            h,
            t_end,
            grid_n,
            values,
            seed,
        }
    }

    pub fn hurst(&self) -> HurstParameter {
        self.h
    }

    pub fn horizon(&self) -> Horizon {
        self.t_end
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn dt(&self) -> f64 {
        self.t_end.value() / self.grid_n as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Grid time of index `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.dt() * i as f64
    }

    /// Writes the path as two-column CSV (`time,value`).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.time(i), v)?;
        }
        Ok(())
    }
}
