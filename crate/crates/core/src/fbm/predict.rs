//! Gaussian conditioning: the least-squares predictor of the process given
//! samples, in both the general linear-solve form and the closed-form
//! two/three-sample coefficient versions.

use super::{covariance, HurstParameter};
use crate::error::{Error, Result};

/// Relative floor on Cholesky pivots. Near-singular conditioning is an
/// error rather than silently regularized: jitter would corrupt optimizer
/// gradients downstream.
const PIVOT_REL_TOL: f64 = 1e-12;

/// Observed samples `(tau_i, B_{tau_i})` with strictly increasing positive
/// times.
#[derive(Debug, Clone)]
pub struct ConditioningSet {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl ConditioningSet {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("conditioning set must not be empty"));
        }
        if times.len() != values.len() {
            return Err(Error::invalid(format!(
                "times/values length mismatch: {} vs {}",
                times.len(),
                values.len()
            )));
        }
        if !(times[0] > 0.0) {
            return Err(Error::invalid("first conditioning time must be positive"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(
                "conditioning times must be strictly increasing",
            ));
        }
        Ok(ConditioningSet { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Cached Cholesky factorization of the sample Gram matrix for one set of
/// conditioning times. Amortizes the solve across many query times.
#[derive(Debug, Clone)]
pub struct ConditioningSolve {
    times: Vec<f64>,
    h: HurstParameter,
    /// Lower-triangular factor, row-major packed, k x k.
    factor: Vec<f64>,
}

impl ConditioningSolve {
    pub fn new(times: &[f64], h: HurstParameter) -> Result<Self> {
        let k = times.len();
        if k == 0 {
            return Err(Error::invalid("conditioning set must not be empty"));
        }
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                gram[i * k + j] = covariance(times[i], times[j], h)?;
            }
        }
        let factor = cholesky_lower(gram, k)?;
        Ok(ConditioningSolve {
            times: times.to_vec(),
            h,
            factor,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn cross_covariances(&self, t: f64) -> Result<Vec<f64>> {
        self.times
            .iter()
            .map(|&tau| covariance(t, tau, self.h))
            .collect()
    }

    /// Weights `w` with `Sigma_22 w = Sigma_12(t)`; the predictor is then
    /// `w . values`.
    pub fn weights(&self, t: f64) -> Result<Vec<f64>> {
        let mut rhs = self.cross_covariances(t)?;
        solve_with_factor(&self.factor, &mut rhs);
        Ok(rhs)
    }

    /// Predictor value at `t` for the stored times and given samples.
    pub fn predict(&self, values: &[f64], t: f64) -> Result<f64> {
        let w = self.weights(t)?;
        Ok(w.iter().zip(values).map(|(a, b)| a * b).sum())
    }

    /// Second moment of the predictor,
    /// `E(pred_t^2) = Sigma_12 Sigma_22^-1 Sigma_12^T`.
    pub fn predictor_mean_square(&self, t: f64) -> Result<f64> {
        let mut rhs = self.cross_covariances(t)?;
        let k = self.times.len();
        // Forward substitution only: E = |L^-1 s|^2.
        for i in 0..k {
            let mut v = rhs[i];
            for j in 0..i {
                v -= self.factor[i * k + j] * rhs[j];
            }
            rhs[i] = v / self.factor[i * k + i];
        }
        Ok(rhs.iter().map(|v| v * v).sum())
    }
}

/// Least-squares prediction of `B_t` given the samples, by a symmetric
/// positive-definite solve (never an explicit inverse). For a single
/// conditioning point this reduces to
/// `B_tau / (2 tau^2H) * (t^2H + tau^2H - |t - tau|^2H)`.
pub fn predict(cond: &ConditioningSet, t: f64, h: HurstParameter) -> Result<f64> {
    let last = *cond.times().last().unwrap();
    if t < last {
        return Err(Error::invalid(format!(
            "prediction time {t} precedes last conditioning time {last}"
        )));
    }
    ConditioningSolve::new(cond.times(), h)?.predict(cond.values(), t)
}

fn cholesky_lower(mut a: Vec<f64>, k: usize) -> Result<Vec<f64>> {
    let max_diag = (0..k).map(|i| a[i * k + i]).fold(0.0f64, f64::max);
    for j in 0..k {
        let mut d = a[j * k + j];
        for l in 0..j {
            d -= a[j * k + l] * a[j * k + l];
        }
        if !(d > PIVOT_REL_TOL * max_diag) {
            return Err(Error::SingularConditioning(format!(
                "pivot {d:.3e} below relative threshold at row {j}"
            )));
        }
        let d = d.sqrt();
        a[j * k + j] = d;
        for i in (j + 1)..k {
            let mut v = a[i * k + j];
            for l in 0..j {
                v -= a[i * k + l] * a[j * k + l];
            }
            a[i * k + j] = v / d;
        }
    }
    Ok(a)
}

fn solve_with_factor(factor: &[f64], rhs: &mut [f64]) {
    let k = rhs.len();
    for i in 0..k {
        let mut v = rhs[i];
        for j in 0..i {
            v -= factor[i * k + j] * rhs[j];
        }
        rhs[i] = v / factor[i * k + i];
    }
    for i in (0..k).rev() {
        let mut v = rhs[i];
        for j in (i + 1)..k {
            v -= factor[j * k + i] * rhs[j];
        }
        rhs[i] = v / factor[i * k + i];
    }
}

/// Closed-form predictor coefficients at one query time: the predictor is
/// `scale * sum_k weights[k] * B_{tau_k}`. Estimator sign conventions are
/// folded into the weights so consumers always take a plain dot product.
#[derive(Debug, Clone)]
pub struct PredictorCoefficients {
    pub scale: f64,
    pub weights: Vec<f64>,
}

impl PredictorCoefficients {
    pub fn apply(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.weights.len());
        self.scale
            * self
                .weights
                .iter()
                .zip(samples)
                .map(|(w, b)| w * b)
                .sum::<f64>()
    }
}

/// Two-sample closed form with the time-independent pieces precomputed, so
/// sweeping the query time costs three power evaluations.
#[derive(Debug, Clone)]
pub struct TwoSampleCoefficients {
    tau1: f64,
    tau2: f64,
    two_h: f64,
    /// tau1^2H, tau2^2H, (tau2-tau1)^2H
    p1: f64,
    p2: f64,
    d21: f64,
    scale: f64,
}

impl TwoSampleCoefficients {
    pub fn new(tau1: f64, tau2: f64, h: HurstParameter) -> Result<Self> {
        if !(tau1 > 0.0 && tau1 < tau2) {
            return Err(Error::invalid(format!(
                "need 0 < tau1 < tau2, got ({tau1}, {tau2})"
            )));
        }
        let two_h = h.two_h();
        let p1 = tau1.powf(two_h);
        let p2 = tau2.powf(two_h);
        let d21 = (tau2 - tau1).powf(two_h);
        let den = p1 * p1 + (p2 - d21) * (p2 - d21) - 2.0 * p1 * (p2 + d21);
        let mag = p1 * p1 + (p2 - d21) * (p2 - d21) + 2.0 * p1 * (p2 + d21);
        if den.abs() <= PIVOT_REL_TOL * mag {
            return Err(Error::SingularConditioning(format!(
                "two-sample configuration ({tau1}, {tau2}) is numerically singular"
            )));
        }
        Ok(TwoSampleCoefficients {
            tau1,
            tau2,
            two_h,
            p1,
            p2,
            d21,
            scale: 1.0 / den,
        })
    }

    /// Common factor `C(tau1, tau2, H)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Raw `(A_1, A_2)` at query time `t >= tau2`; the estimator is
    /// `C (A_1 B_1 - A_2 B_2)`.
    pub fn raw_at(&self, t: f64) -> (f64, f64) {
        let (p1, p2, d21) = (self.p1, self.p2, self.d21);
        let tt = t.powf(self.two_h);
        let u1 = (t - self.tau1).powf(self.two_h);
        let u2 = (t - self.tau2).powf(self.two_h);
        let a1 = 2.0 * u1 * p2 - u2 * p2 + p2 * p2 + u2 * d21 - p2 * d21 - p1 * (u2 + p2)
            + tt * (p1 - p2 - d21);
        let a2 = -p1 * p1
            + u1 * (p2 - d21)
            + tt * (p1 - p2 + d21)
            + p1 * (u1 - 2.0 * u2 + p2 + d21);
        (a1, a2)
    }

    pub fn at(&self, t: f64) -> PredictorCoefficients {
        let (a1, a2) = self.raw_at(t);
        PredictorCoefficients {
            scale: self.scale,
            weights: vec![a1, -a2],
        }
    }

    /// `E(pred_t^2)` built from the closed form: the integrand of the
    /// two-sample distortion segment.
    pub fn mean_square_at(&self, t: f64) -> f64 {
        let (a1, a2) = self.raw_at(t);
        let cross = self.p1 + self.p2 - self.d21;
        self.scale * self.scale * (a1 * a1 * self.p1 + a2 * a2 * self.p2 - a1 * a2 * cross)
    }

    /// Pathwise `pred_t^2` for observed samples `(b1, b2)`.
    pub fn square_at(&self, t: f64, b1: f64, b2: f64) -> f64 {
        let (a1, a2) = self.raw_at(t);
        let v = self.scale * (a1 * b1 - a2 * b2);
        v * v
    }
}

/// Three-sample closed form, same layout as [`TwoSampleCoefficients`].
#[derive(Debug, Clone)]
pub struct ThreeSampleCoefficients {
    tau1: f64,
    tau2: f64,
    tau3: f64,
    two_h: f64,
    p1: f64,
    p2: f64,
    p3: f64,
    d21: f64,
    d31: f64,
    d32: f64,
    scale: f64,
}

impl ThreeSampleCoefficients {
    pub fn new(tau1: f64, tau2: f64, tau3: f64, h: HurstParameter) -> Result<Self> {
        if !(tau1 > 0.0 && tau1 < tau2 && tau2 < tau3) {
            return Err(Error::invalid(format!(
                "need 0 < tau1 < tau2 < tau3, got ({tau1}, {tau2}, {tau3})"
            )));
        }
        let two_h = h.two_h();
        let p1 = tau1.powf(two_h);
        let p2 = tau2.powf(two_h);
        let p3 = tau3.powf(two_h);
        let d21 = (tau2 - tau1).powf(two_h);
        let d31 = (tau3 - tau1).powf(two_h);
        let d32 = (tau3 - tau2).powf(two_h);
        let den = 2.0
            * (p2 * p2 * d31
                + d21 * (p3 * p3 + d31 * d32 + p3 * (d21 - d31 - d32))
                + p1 * p1 * d32
                + p1 * (p2 * (d21 - d31 - d32)
                    - d32 * (d21 + d31 - d32)
                    - p3 * (d21 - d31 + d32))
                - p2 * (p3 * (d21 + d31 - d32) + d31 * (d21 - d31 + d32)));
        let mag = 2.0
            * (p2 * p2 * d31
                + d21 * (p3 * p3 + d31 * d32 + p3 * (d21 + d31 + d32))
                + p1 * p1 * d32
                + p1 * (p2 * (d21 + d31 + d32)
                    + d32 * (d21 + d31 + d32)
                    + p3 * (d21 + d31 + d32))
                + p2 * (p3 * (d21 + d31 + d32) + d31 * (d21 + d31 + d32)));
        if den.abs() <= PIVOT_REL_TOL * mag.abs() {
            return Err(Error::SingularConditioning(format!(
                "three-sample configuration ({tau1}, {tau2}, {tau3}) is numerically singular"
            )));
        }
        Ok(ThreeSampleCoefficients {
            tau1,
            tau2,
            tau3,
            two_h,
            p1,
            p2,
            p3,
            d21,
            d31,
            d32,
            scale: 1.0 / den,
        })
    }

    /// Common factor `C(tau1, tau2, tau3, H)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Raw `(A_1, A_2, A_3)` at `t >= tau3`; the estimator is
    /// `C (A_1 B_1 + A_2 B_2 + A_3 B_3)`.
    pub fn raw_at(&self, t: f64) -> (f64, f64, f64) {
        let (p1, p2, p3) = (self.p1, self.p2, self.p3);
        let (d21, d31, d32) = (self.d21, self.d31, self.d32);
        let tt = t.powf(self.two_h);
        let u1 = (t - self.tau1).powf(self.two_h);
        let u2 = (t - self.tau2).powf(self.two_h);
        let u3 = (t - self.tau3).powf(self.two_h);

        let a1 = -tt * d21 * p3 + 2.0 * u2 * d21 * p3 - d21 * u3 * p3 - u1 * p3 * p3
            + u2 * p3 * p3
            + d21 * p3 * p3
            + tt * p3 * d31
            - u2 * p3 * d31
            - tt * d21 * d32
            + d21 * u3 * d32
            - tt * p3 * d32
            + 2.0 * u1 * p3 * d32
            - u2 * p3 * d32
            - d21 * p3 * d32
            - tt * d31 * d32
            + u2 * d31 * d32
            + tt * d32 * d32
            - u1 * d32 * d32
            + p2 * p2 * (-u1 + u3 + d31)
            + p1 * (p2 * (u2 - u3 - d32) + d32 * (2.0 * tt - u2 - u3 + d32)
                - p3 * (u2 - u3 + d32))
            - p2 * (d21 * u3 + u2 * d31 - 2.0 * u3 * d31 - 2.0 * u1 * d32
                + u3 * d32
                + d31 * d32
                + p3 * (-2.0 * u1 + u2 + d21 + u3 + d31 - 2.0 * d32)
                + tt * (-d21 + d31 + d32));

        let a2 = -(tt * d21 * p3 - 2.0 * u1 * d21 * p3 + d21 * u3 * p3 - u1 * p3 * p3
            + u2 * p3 * p3
            - d21 * p3 * p3
            + tt * d21 * d31
            - d21 * u3 * d31
            + tt * p3 * d31
            + u1 * p3 * d31
            - 2.0 * u2 * p3 * d31
            + d21 * p3 * d31
            - tt * d31 * d31
            + u2 * d31 * d31
            - tt * p3 * d32
            + u1 * p3 * d32
            + tt * d31 * d32
            - u1 * d31 * d32
            + p1 * p1 * (u2 - u3 - d32)
            + p2 * (d31 * (-2.0 * tt + u1 + u3 - d31) + p3 * (u1 - u3 + d31))
            + p1 * (d21 * u3 + u1 * p3 - 2.0 * u2 * p3 + d21 * p3 + u3 * p3 - 2.0 * u2 * d31
                + u3 * d31
                - 2.0 * p3 * d31
                + u1 * d32
                - 2.0 * u3 * d32
                + p3 * d32
                + d31 * d32
                + p2 * (-u1 + u3 + d31)
                + tt * (-d21 + d31 + d32)));

        let a3 = p2 * p2 * (u1 - u3 + d31)
            + p1 * p1 * (u2 - u3 + d32)
            + d21
                * (-d21 * u3 - (u1 + u2 - d21) * p3
                    + u2 * d31
                    + u1 * d32
                    + tt * (d21 + 2.0 * p3 - d31 - d32))
            - p2 * (u1 * d21 - 2.0 * d21 * u3 + (u1 - u2 + d21) * p3 - 2.0 * u1 * d31
                + u2 * d31
                + d21 * d31
                + u1 * d32
                + tt * (d21 + d31 - d32))
            - p1 * (u2 * d21 - 2.0 * d21 * u3 - u1 * p3
                + u2 * p3
                + d21 * p3
                + u2 * d31
                + u1 * d32
                - 2.0 * u2 * d32
                + d21 * d32
                + tt * (d21 - d31 + d32)
                + p2 * (u1 + u2 - 2.0 * d21 - 2.0 * u3 + d31 + d32));

        (a1, a2, a3)
    }

    pub fn at(&self, t: f64) -> PredictorCoefficients {
        let (a1, a2, a3) = self.raw_at(t);
        PredictorCoefficients {
            scale: self.scale,
            weights: vec![a1, a2, a3],
        }
    }

    /// `E(pred_t^2)`: the three-sample distortion integrand.
    pub fn mean_square_at(&self, t: f64) -> f64 {
        let (a1, a2, a3) = self.raw_at(t);
        let c12 = self.p1 + self.p2 - self.d21;
        let c13 = self.p1 + self.p3 - self.d31;
        let c23 = self.p2 + self.p3 - self.d32;
        self.scale
            * self.scale
            * (a1 * a1 * self.p1
                + a2 * a2 * self.p2
                + a3 * a3 * self.p3
                + a1 * a2 * c12
                + a1 * a3 * c13
                + a2 * a3 * c23)
    }

    /// Pathwise `pred_t^2` for observed samples.
    pub fn square_at(&self, t: f64, b1: f64, b2: f64, b3: f64) -> f64 {
        let (a1, a2, a3) = self.raw_at(t);
        let v = self.scale * (a1 * b1 + a2 * b2 + a3 * b3);
        v * v
    }
}

/// Coefficients of the two-sample estimator at one query time.
pub fn two_sample_coefficients(
    tau1: f64,
    tau2: f64,
    t: f64,
    h: HurstParameter,
) -> Result<PredictorCoefficients> {
    if !(t >= tau2) {
        return Err(Error::invalid(format!(
            "query time {t} must not precede tau2 = {tau2}"
        )));
    }
    Ok(TwoSampleCoefficients::new(tau1, tau2, h)?.at(t))
}

/// Coefficients of the three-sample estimator at one query time.
pub fn three_sample_coefficients(
    tau1: f64,
    tau2: f64,
    tau3: f64,
    t: f64,
    h: HurstParameter,
) -> Result<PredictorCoefficients> {
    if !(t >= tau3) {
        return Err(Error::invalid(format!(
            "query time {t} must not precede tau3 = {tau3}"
        )));
    }
    Ok(ThreeSampleCoefficients::new(tau1, tau2, tau3, h)?.at(t))
}
