//! Adaptive Simpson quadrature with a global error budget.
//!
//! Panels are kept in a max-heap ordered by their local error estimate and
//! the worst panel is bisected until the summed estimate meets the requested
//! tolerance. Splitting the worst panel first concentrates work near
//! integrable endpoint kinks such as `|s - tau|^(2H)` for H < 1/2, which
//! defeat the classic tolerance-halving recursion.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

/// Tolerances and subdivision budget for one integration call.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 1 << 16,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: u32) -> Result<Self> {
        if !(rel_tol > 0.0) || !(abs_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerances must be positive"));
        }
        Ok(QuadratureSpec {
            rel_tol,
            abs_tol,
            max_subdivisions,
        })
    }

    /// Tightened spec used where the integral participates in a larger
    /// cancellation-prone expression.
    pub(crate) fn tight() -> Self {
        QuadratureSpec {
            rel_tol: 1e-13,
            abs_tol: 1e-14,
            max_subdivisions: 1 << 17,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    estimate: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrate `f` over `[a, b]`.
///
/// Returns 0 for a degenerate interval; `a > b` is rejected. If the
/// subdivision budget is exhausted the error carries the best estimate.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if a > b {
        return Err(Error::invalid(format!(
            "integration bounds out of order: [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }

    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::invalid(format!("integrand not finite at {x}")))
        }
    };

    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (eval(a)?, eval(m)?, eval(b)?);
    let whole = simpson(a, b, fa, fm, fb);

    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        fa,
        fm,
        fb,
        estimate: whole,
        err: f64::INFINITY,
    });
    let mut total = whole;
    let mut total_err = f64::INFINITY;
    let mut splits: u32 = 0;

    loop {
        if total_err.is_finite() && total_err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(total);
        }
        if splits >= spec.max_subdivisions {
            return Err(Error::QuadratureFailure { best: total });
        }
        let top = heap.pop().expect("heap never empties before convergence");

        let ml = 0.5 * (top.a + 0.5 * (top.a + top.b));
        let mr = 0.5 * (0.5 * (top.a + top.b) + top.b);
        let mid = 0.5 * (top.a + top.b);
        // Interval too narrow to resolve further: keep its estimate as exact.
        if !(top.a < ml && ml < mid && mid < mr && mr < top.b) {
            total_err = if total_err.is_finite() {
                (total_err - top.err).max(0.0)
            } else {
                recompute_err(&heap)
            };
            heap.push(Panel { err: 0.0, ..top });
            continue;
        }
        let (fml, fmr) = (eval(ml)?, eval(mr)?);
        let left = simpson(top.a, mid, top.fa, fml, top.fm);
        let right = simpson(mid, top.b, top.fm, fmr, top.fb);
        let refined = left + right;
        let local_err = (refined - top.estimate).abs() / 15.0;
        total += refined - top.estimate;

        let child_err = 0.5 * local_err;
        heap.push(Panel {
            a: top.a,
            b: mid,
            fa: top.fa,
            fm: fml,
            fb: top.fm,
            estimate: left,
            err: child_err,
        });
        heap.push(Panel {
            a: mid,
            b: top.b,
            fa: top.fm,
            fm: fmr,
            fb: top.fb,
            estimate: right,
            err: child_err,
        });
        splits += 1;
        total_err = if total_err.is_finite() {
            total_err - top.err + local_err
        } else {
            recompute_err(&heap)
        };
    }
}

fn recompute_err(heap: &BinaryHeap<Panel>) -> f64 {
    heap.iter().map(|p| p.err).filter(|e| e.is_finite()).sum()
}

/// `int_1^r mu^(2H) (mu-1)^(2H) dmu`, the scale-free integral that appears
/// in every one-sample distortion bracket.
///
/// The integrand's derivative is unbounded at the left endpoint for
/// `2H < 1`. Substituting `v = mu - 1` and expanding `(1+v)^(2H)`
/// binomially integrates `[0, delta]` as a geometrically convergent series
/// in closed terms; the remainder over `[1 + delta, r]` is smooth and goes
/// through the adaptive rule.
pub fn power_product_integral(r: f64, two_h: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::invalid(format!(
            "upper ratio must be >= 1, got {r}"
        )));
    }
    if r == 1.0 {
        return Ok(0.0);
    }
    let delta = 0.5f64.min(r - 1.0);

    // sum_j binom(2H, j) delta^(2H + j + 1) / (2H + j + 1)
    let mut series = 0.0;
    let mut coeff = 1.0;
    let mut delta_pow = delta.powf(two_h + 1.0);
    for j in 0..128 {
        let term = coeff * delta_pow / (two_h + j as f64 + 1.0);
        series += term;
        if term.abs() < 1e-16 * series.abs() {
            break;
        }
        coeff *= (two_h - j as f64) / (j as f64 + 1.0);
        delta_pow *= delta;
    }

    if r - 1.0 <= delta {
        return Ok(series);
    }
    let tail = quad(
        |mu| mu.powf(two_h) * (mu - 1.0).powf(two_h),
        1.0 + delta,
        r,
        spec,
    )?;
    Ok(series + tail)
}
