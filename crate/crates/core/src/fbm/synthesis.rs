//! Exact-law path synthesis.
//!
//! Default method: circulant-embedding spectral synthesis of the increment
//! process (Davies–Harte), O(n log n) per path. If the embedding is not
//! nonnegative definite the generator falls back to a Cholesky factorization
//! of the full increment covariance matrix. Both routes are exact in law and
//! deterministic given the seed.
//!
//! Randomness is a counter-based stream cipher keyed by the master seed with
//! one stream per path index, so batches are reproducible under any degree
//! of parallelism.

use super::{FbmPath, Horizon, HurstParameter};
use crate::error::{Error, Result};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use std::sync::Arc;

/// Largest grid the spectral route accepts (memory bound).
const MAX_GRID_SPECTRAL: usize = 1 << 22;
/// Largest grid the dense Cholesky fallback accepts (cubic factorization).
const MAX_GRID_CHOLESKY: usize = 2048;
/// Eigenvalues below `-tol * max` mean the embedding truly failed; larger
/// negative dust is roundoff and is clamped to zero.
const EMBEDDING_TOL: f64 = 1e-9;

enum Method {
    /// sqrt of circulant eigenvalues, length `2 * grid_n`, plus the plan.
    Spectral {
        sqrt_eigs: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    /// Lower-triangular factor of the increment covariance, row-major packed.
    Cholesky { factor: Vec<f64> },
}

/// Reusable generator for paths sharing `(h, t_end, grid_n, seed)`.
///
/// `generate(i)` draws from stream `i`; `generate(0)` is what
/// [`simulate_path`] returns. The precomputed spectrum makes per-path cost
/// one FFT.
pub struct PathGenerator {
    h: HurstParameter,
    t_end: Horizon,
    grid_n: usize,
    seed: u64,
    method: Method,
}

impl PathGenerator {
    pub fn new(h: HurstParameter, t_end: Horizon, grid_n: usize, seed: u64) -> Result<Self> {
        if grid_n < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 grid steps, got {grid_n}"
            )));
        }
        if grid_n > MAX_GRID_SPECTRAL {
            return Err(Error::ResourceLimit(format!(
                "grid_n {grid_n} exceeds synthesis limit {MAX_GRID_SPECTRAL}"
            )));
        }
        let dt = t_end.value() / grid_n as f64;
        let method = match spectral_setup(h, dt, grid_n) {
            Some(m) => m,
            None => cholesky_setup(h, dt, grid_n)?,
        };
        Ok(PathGenerator {
            h,
            t_end,
            grid_n,
            seed,
            method,
        })
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

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generates the path on stream `index`.
    pub fn generate(&self, index: u64) -> FbmPath {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let mut values = Vec::with_capacity(self.grid_n + 1);
        match &self.method {
            Method::Spectral { sqrt_eigs, fft } => {
                spectral_increments(sqrt_eigs, fft.as_ref(), self.grid_n, &mut rng, &mut values)
            }
            Method::Cholesky { factor } => {
                let increments = cholesky_increments(factor, self.grid_n, &mut rng);
                values.push(0.0);
                let mut acc = 0.0;
                for x in increments {
                    acc += x;
                    values.push(acc);
                }
            }
        };
        FbmPath::from_parts(self.h, self.t_end, self.grid_n, values, self.seed)
    }
}

/// One exact-law path for `(h, t_end, grid_n, seed)`; stream 0 of a
/// [`PathGenerator`] with the same key.
pub fn simulate_path(
    h: HurstParameter,
    t_end: Horizon,
    grid_n: usize,
    seed: u64,
) -> Result<FbmPath> {
    Ok(PathGenerator::new(h, t_end, grid_n, seed)?.generate(0))
}

/// Autocovariance of fGn at lag `k` on spacing `dt`.
fn fgn_autocov(k: usize, two_h: f64, dt: f64) -> f64 {
    let k = k as f64;
    0.5 * dt.powf(two_h)
        * ((k + 1.0).powf(two_h) + (k - 1.0).abs().powf(two_h) - 2.0 * k.powf(two_h))
}

fn spectral_setup(h: HurstParameter, dt: f64, n: usize) -> Option<Method> {
    let two_h = h.two_h();
    let m = 2 * n;
    // First row of the circulant embedding: gamma(0..n) then mirrored tail.
    let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
    for k in 0..=n {
        row.push(Complex::new(fgn_autocov(k, two_h, dt), 0.0));
    }
    for k in (1..n).rev() {
        row.push(Complex::new(fgn_autocov(k, two_h, dt), 0.0));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);

    let max_eig = row.iter().map(|c| c.re).fold(0.0f64, f64::max);
    let mut sqrt_eigs = Vec::with_capacity(m);
    for c in &row {
        if c.re < -EMBEDDING_TOL * max_eig {
            return None;
        }
        sqrt_eigs.push(c.re.max(0.0).sqrt());
    }
    Some(Method::Spectral { sqrt_eigs, fft })
}

fn spectral_increments(
    sqrt_eigs: &[f64],
    fft: &dyn Fft<f64>,
    n: usize,
    rng: &mut ChaCha8Rng,
    values: &mut Vec<f64>,
) {
    let m = 2 * n;
    // Per-thread buffers; every entry is overwritten before the transform.
    thread_local! {
        static BUFFERS: std::cell::RefCell<(Vec<Complex<f64>>, Vec<Complex<f64>>)> =
            const { std::cell::RefCell::new((Vec::new(), Vec::new())) };
    }
    BUFFERS.with(|cell| {
        let (w, scratch) = &mut *cell.borrow_mut();
        w.resize(m, Complex::new(0.0, 0.0));
        scratch.resize(fft.get_inplace_scratch_len(), Complex::new(0.0, 0.0));

        let half = (0.5 / m as f64).sqrt();
        let full = (1.0 / m as f64).sqrt();
        let a0: f64 = rng.sample(StandardNormal);
        let b0: f64 = rng.sample(StandardNormal);
        w[0] = Complex::new(sqrt_eigs[0] * full * a0, 0.0);
        w[n] = Complex::new(sqrt_eigs[n] * full * b0, 0.0);
        for k in 1..n {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            let s = sqrt_eigs[k] * half;
            let v = Complex::new(s * a, s * b);
            w[k] = v;
            w[m - k] = v.conj();
        }
        fft.process_with_scratch(w, scratch);

        values.push(0.0);
        let mut acc = 0.0;
        for c in w.iter().take(n) {
            acc += c.re;
            values.push(acc);
        }
    });
}

fn cholesky_setup(h: HurstParameter, dt: f64, n: usize) -> Result<Method> {
    if n > MAX_GRID_CHOLESKY {
        return Err(Error::ResourceLimit(format!(
            "circulant embedding not nonnegative and grid_n {n} exceeds the \
             dense fallback limit {MAX_GRID_CHOLESKY}"
        )));
    }
    let two_h = h.two_h();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            a[i * n + j] = fgn_autocov(i - j, two_h, dt);
        }
    }
    // In-place lower Cholesky.
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 {
            return Err(Error::SingularConditioning(
                "increment covariance not positive definite".into(),
            ));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / d;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            a[i * n + j] = 0.0;
        }
    }
    Ok(Method::Cholesky { factor: a })
}

fn cholesky_increments(factor: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut g = Vec::with_capacity(n);
    for _ in 0..n {
        g.push(rng.sample::<f64, _>(StandardNormal));
    }
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for k in 0..=i {
            acc += factor[i * n + k] * g[k];
        }
        out[i] = acc;
    }
    out
}
