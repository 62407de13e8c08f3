//! Level-triggered sampling: hitting-time detection with censoring at the
//! horizon, threshold policies with the `(T - tau)^((2H+1)/4)` structure,
//! per-path distortion observables and the Monte Carlo distortion oracle.

mod monte_carlo;
mod observables;

pub use monte_carlo::{empirical_distortion, Design};
pub use observables::{
    modified_distortion_at_times, observed_distortion_one, observed_modified_distortion,
    one_sample_bracket,
};

use crate::error::{Error, Result};
use crate::fbm::{FbmPath, Horizon, HurstParameter};
use serde::Serialize;

/// Threshold coefficients `q_i`. The realized threshold for sample `i` is
/// `eta_i = q_i * (T - tau_{i-1})^((2H+1)/4)` with `tau_0 = 0`, so later
/// thresholds shrink with the remaining horizon.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdPolicy {
    q: Vec<f64>,
    h: HurstParameter,
    horizon: Horizon,
}

impl ThresholdPolicy {
    pub fn new(q: Vec<f64>, h: HurstParameter, horizon: Horizon) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::invalid("policy needs at least one coefficient"));
        }
        if q.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid(
                "threshold coefficients must be positive and finite",
            ));
        }
        Ok(ThresholdPolicy { q, h, horizon })
    }

    /// Policy whose first threshold is the raw level `eta` (single sample).
    pub fn from_level(eta: f64, h: HurstParameter, horizon: Horizon) -> Result<Self> {
        let scale = horizon.value().powf(h.threshold_exponent());
        ThresholdPolicy::new(vec![eta / scale], h, horizon)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.q
    }

    pub fn hurst(&self) -> HurstParameter {
        self.h
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Realized threshold for sample `index` given the previous sampling
    /// time.
    pub fn threshold(&self, index: usize, prev_time: f64) -> f64 {
        let remaining = (self.horizon.value() - prev_time).max(0.0);
        self.q[index] * remaining.powf(self.h.threshold_exponent())
    }
}

/// Trigger times, sampled values and censoring flags for one path under one
/// policy. Once a sample censors, every later entry is censored at `T`.
#[derive(Debug, Clone, Serialize)]
pub struct TriggerOutcome {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub censored: Vec<bool>,
}

impl TriggerOutcome {
    /// Number of leading uncensored samples.
    pub fn observed(&self) -> usize {
        self.censored.iter().take_while(|&&c| !c).count()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sample,time,value,censored")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{},{}",
                i + 1,
                self.times[i],
                self.values[i],
                self.censored[i]
            )?;
        }
        Ok(())
    }
}

/// Scans the grid left to right. Sample `i` fires at the first grid point
/// where `|B_t - B_{tau_{i-1}}| >= eta_i` strictly before the horizon;
/// otherwise it censors at `T`. Thresholds for later samples are recomputed
/// from the remaining horizon.
pub fn trigger_times(path: &FbmPath, policy: &ThresholdPolicy) -> Result<TriggerOutcome> {
    if path.hurst() != policy.hurst() || path.horizon() != policy.horizon() {
        return Err(Error::invalid(
            "path and policy must share the Hurst parameter and horizon",
        ));
    }
    let n = path.grid_n();
    let values = path.values();
    let t_end = path.horizon().value();
    let dt = path.dt();

    let mut out = TriggerOutcome {
        times: Vec::with_capacity(policy.len()),
        values: Vec::with_capacity(policy.len()),
        censored: Vec::with_capacity(policy.len()),
    };
    let mut prev_idx = 0usize;
    let mut prev_time = 0.0f64;
    let mut prev_value = 0.0f64;
    let mut dead = false;

    for i in 0..policy.len() {
        if dead {
            out.times.push(t_end);
            out.values.push(values[n]);
            out.censored.push(true);
            continue;
        }
        let eta = policy.threshold(i, prev_time);
        let mut hit = None;
        for j in (prev_idx + 1)..n {
            if (values[j] - prev_value).abs() >= eta {
                hit = Some(j);
                break;
            }
        }
        match hit {
            Some(j) => {
                prev_idx = j;
                prev_time = dt * j as f64;
                prev_value = values[j];
                out.times.push(prev_time);
                out.values.push(prev_value);
                out.censored.push(false);
            }
            None => {
                dead = true;
                out.times.push(t_end);
                out.values.push(values[n]);
                out.censored.push(true);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::simulate_path;

    fn h(v: f64) -> HurstParameter {
        HurstParameter::new(v).unwrap()
    }

    fn t20() -> Horizon {
        Horizon::new(20.0).unwrap()
    }

    #[test]
    fn rejects_nonpositive_coefficients() {
        assert!(ThresholdPolicy::new(vec![0.5, 0.0], h(0.5), t20()).is_err());
        assert!(ThresholdPolicy::new(vec![], h(0.5), t20()).is_err());
    }

    #[test]
    fn unreachable_threshold_censors_everything() {
        let path = simulate_path(h(0.5), t20(), 512, 3).unwrap();
        let policy = ThresholdPolicy::new(vec![1e3, 1e3], h(0.5), t20()).unwrap();
        let out = trigger_times(&path, &policy).unwrap();
        assert_eq!(out.censored, vec![true, true]);
        assert_eq!(out.times, vec![20.0, 20.0]);
        assert_eq!(out.observed(), 0);
    }

    #[test]
    fn vanishing_threshold_fires_at_first_grid_point() {
        let path = simulate_path(h(0.5), t20(), 512, 3).unwrap();
        let policy = ThresholdPolicy::new(vec![1e-12], h(0.5), t20()).unwrap();
        let out = trigger_times(&path, &policy).unwrap();
        assert!(!out.censored[0]);
        assert!((out.times[0] - path.dt()).abs() < 1e-12);
    }

    #[test]
    fn first_passage_monotone_in_threshold() {
        let path = simulate_path(h(0.6), t20(), 2048, 11).unwrap();
        let mut prev = 0.0;
        for q in [0.1, 0.3, 0.5, 0.8, 1.2] {
            let policy = ThresholdPolicy::new(vec![q], h(0.6), t20()).unwrap();
            let out = trigger_times(&path, &policy).unwrap();
            assert!(out.times[0] >= prev, "tau not monotone in threshold");
            prev = out.times[0];
        }
    }

    #[test]
    fn trigger_respects_type_invariants() {
        for seed in 0..50u64 {
            let hv = h(0.3 + 0.05 * (seed % 9) as f64);
            let path = simulate_path(hv, t20(), 1024, seed).unwrap();
            let q = vec![
                0.3 + 0.2 * ((seed * 7 % 10) as f64 / 10.0),
                0.5 + 0.3 * ((seed * 13 % 10) as f64 / 10.0),
                0.8,
            ];
            let policy = ThresholdPolicy::new(q, hv, t20()).unwrap();
            let out = trigger_times(&path, &policy).unwrap();
            let mut censored_seen = false;
            let mut prev_time = 0.0;
            let mut prev_value = 0.0;
            for i in 0..out.times.len() {
                assert!(out.times[i] >= prev_time);
                assert!(out.times[i] <= 20.0);
                if censored_seen {
                    assert!(out.censored[i], "censoring must be absorbing");
                    assert_eq!(out.times[i], 20.0);
                }
                if out.censored[i] {
                    censored_seen = true;
                } else {
                    let eta = policy.threshold(i, prev_time);
                    assert!(
                        (out.values[i] - prev_value).abs() >= eta,
                        "trigger below threshold"
                    );
                    prev_time = out.times[i];
                    prev_value = out.values[i];
                }
            }
        }
    }

    #[test]
    fn mismatched_path_and_policy_rejected() {
        let path = simulate_path(h(0.5), t20(), 256, 0).unwrap();
        let policy = ThresholdPolicy::new(vec![0.5], h(0.6), t20()).unwrap();
        assert!(trigger_times(&path, &policy).is_err());
    }
}
