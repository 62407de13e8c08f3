//! Noisy objectives that drive the stochastic approximation: per-path
//! distortion gains of level-triggered policies, evaluated on pre-assigned
//! path substreams.

use super::{evaluate_policy_distortion, NoisyObjective, ObservableBundle};
use crate::distortion::{DistortionKind, DistortionReport, EstimatorMode};
use crate::error::{Error, Result};
use crate::fbm::{Horizon, HurstParameter, PathGenerator};
use crate::level::{observed_distortion_one, observed_modified_distortion, ThresholdPolicy};
use crate::quad::QuadratureSpec;

/// One-sample objective `F(eta) = E[h(eta, path)]`, maximized.
pub struct OneSampleLevelObjective {
    generator: PathGenerator,
}

impl OneSampleLevelObjective {
    pub fn new(h: HurstParameter, horizon: Horizon, grid_n: usize, seed: u64) -> Result<Self> {
        Ok(OneSampleLevelObjective {
            generator: PathGenerator::new(h, horizon, grid_n, seed)?,
        })
    }

    pub fn generator(&self) -> &PathGenerator {
        &self.generator
    }
}

impl NoisyObjective for OneSampleLevelObjective {
    fn dim(&self) -> usize {
        1
    }

    fn observe(&self, point: &[f64], draw: u64) -> Result<f64> {
        let path = self.generator.generate(draw);
        observed_distortion_one(point[0], &path)
    }

    fn observe_pair(&self, plus: &[f64], minus: &[f64], draw: u64) -> Result<(f64, f64)> {
        let path = self.generator.generate(draw);
        Ok((
            observed_distortion_one(plus[0], &path)?,
            observed_distortion_one(minus[0], &path)?,
        ))
    }
}

impl ObservableBundle for OneSampleLevelObjective {
    fn policy_at(&self, point: &[f64]) -> Result<ThresholdPolicy> {
        ThresholdPolicy::from_level(point[0], self.generator.hurst(), self.generator.horizon())
    }

    fn final_distortion(&self, point: &[f64], eval_paths: u64) -> Result<DistortionReport> {
        let eta = point[0];
        evaluate_policy_distortion(&self.generator, eval_paths, DistortionKind::LevelFull, |i| {
            let path = self.generator.generate(FRESH_EVAL_STREAM_BASE + i);
            observed_distortion_one(eta, &path)
        })
    }
}

/// Multi-threshold objective `F(q) = E[h*(q, path)]`, maximized.
pub struct MultiSampleLevelObjective {
    generator: PathGenerator,
    n: usize,
    mode: EstimatorMode,
    spec: QuadratureSpec,
}

/// Final evaluations draw from a stream range far above anything the
/// iteration loop can reach (3000 iterations x batch x sides stays below
/// 2^24), so they never reuse an optimization path.
const FRESH_EVAL_STREAM_BASE: u64 = 1 << 40;

impl MultiSampleLevelObjective {
    pub fn new(
        h: HurstParameter,
        horizon: Horizon,
        n: usize,
        mode: EstimatorMode,
        grid_n: usize,
        seed: u64,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("need at least one threshold"));
        }
        Ok(MultiSampleLevelObjective {
            generator: PathGenerator::new(h, horizon, grid_n, seed)?,
            n,
            mode,
            spec: QuadratureSpec {
                rel_tol: 1e-9,
                abs_tol: 1e-11,
                max_subdivisions: 1 << 16,
            },
        })
    }

    pub fn generator(&self) -> &PathGenerator {
        &self.generator
    }

    fn policy(&self, q: &[f64]) -> Result<ThresholdPolicy> {
        ThresholdPolicy::new(
            q.to_vec(),
            self.generator.hurst(),
            self.generator.horizon(),
        )
    }
}

impl NoisyObjective for MultiSampleLevelObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn observe(&self, point: &[f64], draw: u64) -> Result<f64> {
        let policy = self.policy(point)?;
        let path = self.generator.generate(draw);
        observed_modified_distortion(&policy, &path, self.mode, &self.spec)
    }

    fn observe_pair(&self, plus: &[f64], minus: &[f64], draw: u64) -> Result<(f64, f64)> {
        let path = self.generator.generate(draw);
        Ok((
            observed_modified_distortion(&self.policy(plus)?, &path, self.mode, &self.spec)?,
            observed_modified_distortion(&self.policy(minus)?, &path, self.mode, &self.spec)?,
        ))
    }
}

impl ObservableBundle for MultiSampleLevelObjective {
    fn policy_at(&self, point: &[f64]) -> Result<ThresholdPolicy> {
        self.policy(point)
    }

    fn final_distortion(&self, point: &[f64], eval_paths: u64) -> Result<DistortionReport> {
        let policy = self.policy(point)?;
        let kind = match self.mode {
            EstimatorMode::Full => DistortionKind::LevelFull,
            EstimatorMode::Truncated => DistortionKind::LevelTruncated,
        };
        evaluate_policy_distortion(&self.generator, eval_paths, kind, |i| {
            let path = self.generator.generate(FRESH_EVAL_STREAM_BASE + i);
            observed_modified_distortion(&policy, &path, self.mode, &self.spec)
        })
    }
}
