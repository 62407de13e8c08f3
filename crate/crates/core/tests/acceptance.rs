//! Acceptance suite: every criterion of the benchmark contract, one test
//! each, at its stated tolerance. Each prints one pass/fail line per
//! checked item (run with `--nocapture` to see them on success).
//!
//! Criteria 7 and 8 drive full stochastic-approximation runs and dominate
//! the runtime of the suite.

use fbm_sampling::distortion::{
    baseline_distortion, distortion_multi, EstimatorMode, SamplingSchedule,
};
use fbm_sampling::fbm::{predict, ConditioningSet, Horizon, HurstParameter, PathGenerator};
use fbm_sampling::kw::{kw_optimize, KwConfig, KwProblem, KwProblemKind};
use fbm_sampling::level::{
    empirical_distortion, observed_distortion_one, trigger_times, Design, ThresholdPolicy,
};
use fbm_sampling::opt::{optimize_multi, optimize_one};
use fbm_sampling::quad::{quad, QuadratureSpec};
use fbm_sampling::tables::{reference_table, table_is_full_mode, REFERENCE_HORIZON};

fn h(v: f64) -> HurstParameter {
    HurstParameter::new(v).unwrap()
}

fn t20() -> Horizon {
    Horizon::new(REFERENCE_HORIZON).unwrap()
}

struct Failures(Vec<String>);

impl Failures {
    fn new() -> Self {
        Failures(Vec::new())
    }

    fn check(&mut self, ok: bool, label: &str, detail: String) {
        if ok {
            println!("PASS {label}: {detail}");
        } else {
            println!("FAIL {label}: {detail}");
            self.0.push(format!("{label}: {detail}"));
        }
    }

    fn finish(self, criterion: &str) {
        assert!(
            self.0.is_empty(),
            "{criterion}: {} item(s) out of tolerance:\n  {}",
            self.0.len(),
            self.0.join("\n  ")
        );
    }
}

/// Criterion 1: one-sample schedule optima, all nine Hurst values.
/// tau within +-0.02, distortion within +-0.2% relative.
#[test]
fn criterion_01_one_sample_schedule_table() {
    let spec = QuadratureSpec::default();
    let mut failures = Failures::new();
    for row in reference_table(1).unwrap() {
        let r = optimize_one(h(row.h), t20(), &spec).unwrap();
        let tau = r.schedule.times()[0];
        let j = r.distortion.value;
        let tau_ok = (tau - row.params[0]).abs() <= 0.02;
        let j_ok = ((j - row.distortion) / row.distortion).abs() <= 0.002;
        failures.check(
            tau_ok && j_ok,
            "criterion 1",
            format!(
                "H={}: tau {tau:.3} (ref {:.3}), J {j:.3} (ref {:.3})",
                row.h, row.params[0], row.distortion
            ),
        );
    }
    failures.finish("criterion 1");
}

/// Criterion 2: two- and three-sample schedule optima, full and truncated.
/// Each sampling time within +-0.05, distortion within +-0.5% relative.
#[test]
fn criterion_02_multi_sample_schedule_tables() {
    let spec = QuadratureSpec::default();
    let mut failures = Failures::new();
    for table in 2..=5u8 {
        let n = fbm_sampling::tables::table_samples(table);
        let mode = if table_is_full_mode(table) {
            EstimatorMode::Full
        } else {
            EstimatorMode::Truncated
        };
        for row in reference_table(table).unwrap() {
            let r = optimize_multi(h(row.h), t20(), n, mode, &spec).unwrap();
            let times = r.schedule.times();
            let j = r.distortion.value;
            let times_ok = times
                .iter()
                .zip(&row.params)
                .all(|(a, b)| (a - b).abs() <= 0.05);
            let j_ok = ((j - row.distortion) / row.distortion).abs() <= 0.005;
            failures.check(
                times_ok && j_ok,
                "criterion 2",
                format!(
                    "table {table} H={}: times {:?} (ref {:?}), J {j:.3} (ref {:.3})",
                    row.h,
                    times.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>(),
                    row.params,
                    row.distortion
                ),
            );
        }
    }
    failures.finish("criterion 2");
}

/// Criterion 3: analytic Brownian anchor. Optimal schedules are uniform
/// `i T / (N+1)` within 1e-3 and the distortion equals `T^2 / (2(N+1))`
/// within 1e-3.
#[test]
fn criterion_03_brownian_uniform_anchor() {
    let spec = QuadratureSpec::default();
    let mut failures = Failures::new();
    let t_end = REFERENCE_HORIZON;
    for n in 1..=3usize {
        // The Brownian optimum is visible in the truncated tables (full
        // coincides at H = 1/2).
        let r = optimize_multi(h(0.5), t20(), n, EstimatorMode::Truncated, &spec).unwrap();
        let want_j = t_end * t_end / (2.0 * (n as f64 + 1.0));
        let times_ok = r
            .schedule
            .times()
            .iter()
            .enumerate()
            .all(|(i, &tau)| (tau - (i as f64 + 1.0) * t_end / (n as f64 + 1.0)).abs() <= 1e-3);
        let j_ok = (r.distortion.value - want_j).abs() <= 1e-3;
        failures.check(
            times_ok && j_ok,
            "criterion 3",
            format!(
                "N={n}: times {:?}, J {:.6} (want {want_j:.6})",
                r.schedule.times(),
                r.distortion.value
            ),
        );
    }
    failures.finish("criterion 3");
}

/// Criterion 4: closed-form predictor coefficients vs the general Gaussian
/// solve, max absolute deviation < 1e-8 over 10^3 random configurations.
#[test]
fn criterion_04_predictor_equivalence() {
    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20_240_814);
    let mut max_dev = 0.0f64;
    for _ in 0..1000 {
        let hv = h(rng.random_range(0.1..0.9));
        let tau1 = rng.random_range(0.2..6.0);
        let tau2 = tau1 + rng.random_range(0.1..6.0);
        let tau3 = tau2 + rng.random_range(0.1..6.0);
        let samples: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();

        let t = tau2 + rng.random_range(0.0..6.0);
        let closed = fbm_sampling::fbm::two_sample_coefficients(tau1, tau2, t, hv)
            .unwrap()
            .apply(&samples[..2]);
        let general = predict(
            &ConditioningSet::new(vec![tau1, tau2], samples[..2].to_vec()).unwrap(),
            t,
            hv,
        )
        .unwrap();
        max_dev = max_dev.max((closed - general).abs());

        let t = tau3 + rng.random_range(0.0..6.0);
        let closed = fbm_sampling::fbm::three_sample_coefficients(tau1, tau2, tau3, t, hv)
            .unwrap()
            .apply(&samples);
        let general = predict(
            &ConditioningSet::new(vec![tau1, tau2, tau3], samples.clone()).unwrap(),
            t,
            hv,
        )
        .unwrap();
        max_dev = max_dev.max((closed - general).abs());
    }
    println!("PASS criterion 4: max |closed - general| = {max_dev:.3e}");
    assert!(max_dev < 1e-8, "criterion 4: max deviation {max_dev}");
}

/// Criterion 5: the Monte Carlo oracle agrees with the closed forms within
/// 3 standard errors on 12 (H, schedule, mode) combinations.
#[test]
fn criterion_05_monte_carlo_oracle() {
    let spec = QuadratureSpec::default();
    let mut failures = Failures::new();
    let combos: &[(f64, &[f64], EstimatorMode)] = &[
        (0.3, &[9.469], EstimatorMode::Full),
        (0.5, &[10.0], EstimatorMode::Full),
        (0.7, &[9.606], EstimatorMode::Full),
        (0.4, &[6.569, 13.264], EstimatorMode::Full),
        (0.8, &[5.839, 12.847], EstimatorMode::Full),
        (0.2, &[5.302, 12.597], EstimatorMode::Truncated),
        (0.5, &[6.667, 13.333], EstimatorMode::Truncated),
        (0.9, &[4.874, 12.410], EstimatorMode::Truncated),
        (0.6, &[4.929, 9.943, 14.964], EstimatorMode::Full),
        (0.9, &[3.546, 8.938, 14.380], EstimatorMode::Full),
        (0.1, &[2.195, 7.760, 13.839], EstimatorMode::Truncated),
        (0.7, &[4.714, 9.814, 14.914], EstimatorMode::Truncated),
    ];
    for (i, &(hv, times, mode)) in combos.iter().enumerate() {
        let sched = SamplingSchedule::new(times.to_vec(), t20()).unwrap();
        let closed = distortion_multi(&sched, h(hv), mode, &spec).unwrap().value;
        let mc = empirical_distortion(
            Design::Schedule(&sched),
            h(hv),
            t20(),
            1 << 12,
            10_000,
            1000 + i as u64,
            mode,
        )
        .unwrap();
        let se = mc.std_error.unwrap();
        let dev = (mc.value - closed).abs();
        failures.check(
            dev <= 3.0 * se,
            "criterion 5",
            format!(
                "H={hv} times={times:?} {mode:?}: closed {closed:.3}, MC {:.3} +- {:.3}",
                mc.value,
                3.0 * se
            ),
        );
    }
    failures.finish("criterion 5");
}

/// Criterion 6: the closed one-sample bracket equals direct quadrature of
/// the squared truncated predictor within 1e-6 relative, on 100 seeded
/// paths per Hurst value.
#[test]
fn criterion_06_bracket_identity() {
    let spec = QuadratureSpec::default();
    let mut worst = 0.0f64;
    let mut checked = 0u32;
    for hv in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7] {
        let hp = h(hv);
        let eta_ref = reference_table(6)
            .unwrap()
            .into_iter()
            .find(|r| (r.h - hv).abs() < 1e-9)
            .unwrap()
            .params[0];
        let generator = PathGenerator::new(hp, t20(), 1 << 11, 60_000 + (hv * 10.0) as u64).unwrap();
        let mut seen = 0;
        let mut index = 0u64;
        while seen < 100 && index < 1000 {
            let path = generator.generate(index);
            index += 1;
            let hval = observed_distortion_one(eta_ref, &path).unwrap();
            if hval == 0.0 {
                continue;
            }
            seen += 1;
            let policy = ThresholdPolicy::from_level(eta_ref, hp, t20()).unwrap();
            let out = trigger_times(&path, &policy).unwrap();
            let tau = out.times[0];
            let cond = ConditioningSet::new(vec![tau], vec![eta_ref]).unwrap();
            let direct = quad(
                |t| {
                    let p = predict(&cond, t, hp).unwrap();
                    p * p
                },
                tau,
                REFERENCE_HORIZON,
                &spec,
            )
            .unwrap();
            let rel = (hval - direct).abs() / direct.abs();
            worst = worst.max(rel);
            checked += 1;
        }
        assert!(seen >= 100, "H={hv}: only {seen} triggered paths in 1000");
    }
    println!("PASS criterion 6: {checked} paths, worst relative deviation {worst:.2e}");
    assert!(worst < 1e-6, "criterion 6: worst relative deviation {worst}");
}

fn kw_one_sample(hv: f64, horizon: f64, seed: u64) -> (f64, f64, f64) {
    let problem = KwProblem {
        kind: KwProblemKind::OneSample,
        h: h(hv),
        horizon: Horizon::new(horizon).unwrap(),
    };
    let config = KwConfig::new(seed);
    let out = kw_optimize(&problem, &config).unwrap();
    (
        out.policy.threshold(0, 0.0),
        out.distortion.value,
        out.distortion.std_error.unwrap_or(0.0),
    )
}

/// Criterion 7: one-sample threshold optimization lands within +-10% on
/// the threshold and +-5% on the distortion for each H, on three seeds.
///
/// Known limitation, documented in the repository notes: at H = 0.1 and
/// H = 0.2 the hitting-time discretization shifts the optimum of the
/// simulated objective itself; no grid reproduces both reference columns,
/// so those rows fail regardless of optimizer quality.
#[test]
fn criterion_07_one_sample_threshold_table() {
    let mut failures = Failures::new();
    let rows = reference_table(6).unwrap();
    let runs: Vec<(f64, u64)> = rows
        .iter()
        .flat_map(|r| [7u64, 11, 23].map(|s| (r.h, s)))
        .collect();
    use rayon::prelude::*;
    let results: Vec<(f64, u64, f64, f64)> = runs
        .par_iter()
        .map(|&(hv, seed)| {
            let (eta, j, _) = kw_one_sample(hv, REFERENCE_HORIZON, seed);
            (hv, seed, eta, j)
        })
        .collect();
    for (hv, seed, eta, j) in results {
        let row = rows.iter().find(|r| (r.h - hv).abs() < 1e-9).unwrap();
        let eta_ok = ((eta - row.params[0]) / row.params[0]).abs() <= 0.10;
        let j_ok = ((j - row.distortion) / row.distortion).abs() <= 0.05;
        failures.check(
            eta_ok && j_ok,
            "criterion 7",
            format!(
                "H={hv} seed={seed}: eta {eta:.3} (ref {:.3}), J {j:.3} (ref {:.3})",
                row.params[0], row.distortion
            ),
        );
    }
    failures.finish("criterion 7");
}

fn kw_two_sample(
    hv: f64,
    mode: EstimatorMode,
    n: usize,
    seed: u64,
) -> (Vec<f64>, f64, f64) {
    let kind = match mode {
        EstimatorMode::Full => KwProblemKind::MultiFull { n },
        EstimatorMode::Truncated => KwProblemKind::MultiTruncated { n },
    };
    let problem = KwProblem {
        kind,
        h: h(hv),
        horizon: t20(),
    };
    let mut config = KwConfig::new(seed);
    // Common random numbers within each difference pair: variance
    // reduction documented for the multi-threshold harness.
    config.common_random_pairs = Some(true);
    let out = kw_optimize(&problem, &config).unwrap();
    (
        out.policy.coefficients().to_vec(),
        out.distortion.value,
        out.distortion.std_error.unwrap_or(0.0),
    )
}

/// Criterion 8: two-threshold tables within +-0.1 per coefficient and
/// +-7% on the distortion; the three-threshold tables are replaced by the
/// paired-seed dominance property (optimized three-sample J* no worse than
/// two-sample J* plus two standard errors).
#[test]
fn criterion_08_two_sample_threshold_tables_and_three_sample_dominance() {
    use rayon::prelude::*;
    let mut failures = Failures::new();

    let jobs: Vec<(u8, f64)> = [7u8, 8]
        .iter()
        .flat_map(|&t| [0.4, 0.6, 0.7].map(|hv| (t, hv)))
        .collect();
    let results: Vec<(u8, f64, Vec<f64>, f64)> = jobs
        .par_iter()
        .map(|&(table, hv)| {
            let mode = if table == 7 {
                EstimatorMode::Full
            } else {
                EstimatorMode::Truncated
            };
            let (q, j, _) = kw_two_sample(hv, mode, 2, 7);
            (table, hv, q, j)
        })
        .collect();
    for (table, hv, q, j) in results {
        let row = reference_table(table)
            .unwrap()
            .into_iter()
            .find(|r| (r.h - hv).abs() < 1e-9)
            .unwrap();
        let q_ok = q
            .iter()
            .zip(&row.params)
            .all(|(a, b)| (a - b).abs() <= 0.10);
        let j_ok = ((j - row.distortion) / row.distortion).abs() <= 0.07;
        failures.check(
            q_ok && j_ok,
            "criterion 8",
            format!(
                "table {table} H={hv}: q {:?} (ref {:?}), J {j:.3} (ref {:.3})",
                q.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>(),
                row.params,
                row.distortion
            ),
        );
    }

    // Paired-seed dominance: a third threshold cannot hurt.
    let dominance: Vec<(f64, f64, f64, f64, f64)> = [0.4, 0.6, 0.7]
        .par_iter()
        .map(|&hv| {
            let (_, j2, se2) = kw_two_sample(hv, EstimatorMode::Full, 2, 99);
            let (_, j3, se3) = kw_two_sample(hv, EstimatorMode::Full, 3, 99);
            (hv, j2, se2, j3, se3)
        })
        .collect();
    for (hv, j2, se2, j3, se3) in dominance {
        let sigma = (se2 * se2 + se3 * se3).sqrt();
        failures.check(
            j3 <= j2 + 2.0 * sigma,
            "criterion 8 (three-sample dominance)",
            format!("H={hv}: J3 {j3:.3} vs J2 {j2:.3} + 2 sigma {:.3}", 2.0 * sigma),
        );
    }
    failures.finish("criterion 8");
}

/// Criterion 9: cross-cutting property suites.
#[test]
fn criterion_09_property_suites() {
    let spec = QuadratureSpec::default();
    let mut failures = Failures::new();

    // Baseline bound and mode ordering on a grid of schedules.
    let mut baseline_ok = true;
    let mut ordering_ok = true;
    for hv in [0.15, 0.4, 0.5, 0.75] {
        let base = baseline_distortion(h(hv), t20());
        for times in [
            vec![2.0],
            vec![19.9],
            vec![4.0, 9.0],
            vec![0.5, 18.0],
            vec![3.0, 9.0, 16.0],
        ] {
            let sched = SamplingSchedule::new(times, t20()).unwrap();
            let full = distortion_multi(&sched, h(hv), EstimatorMode::Full, &spec)
                .unwrap()
                .value;
            let trunc = distortion_multi(&sched, h(hv), EstimatorMode::Truncated, &spec)
                .unwrap()
                .value;
            baseline_ok &= full <= base + 1e-9 && trunc <= base + 1e-9 && full >= 0.0;
            ordering_ok &= full <= trunc + 1e-6;
        }
    }
    failures.check(baseline_ok, "criterion 9", "baseline bound".into());
    failures.check(ordering_ok, "criterion 9", "full <= truncated ordering".into());

    // Budget monotonicity of the optimal distortion over the table grid.
    let mut monotone_ok = true;
    for hv in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let mut prev = f64::INFINITY;
        for n in 1..=3usize {
            let r = optimize_multi(h(hv), t20(), n, EstimatorMode::Truncated, &spec).unwrap();
            monotone_ok &= r.distortion.value <= prev + 1e-6;
            prev = r.distortion.value;
        }
    }
    failures.check(monotone_ok, "criterion 9", "budget monotonicity".into());

    // Stochastic-approximation determinism per seed (reduced config).
    let run = || {
        let problem = KwProblem {
            kind: KwProblemKind::OneSample,
            h: h(0.5),
            horizon: t20(),
        };
        let mut config = KwConfig::new(5);
        config.max_iter = 50;
        config.batch_size = 10;
        config.grid_n = 512;
        config.eval_paths = 100;
        let out = kw_optimize(&problem, &config).unwrap();
        (out.state.iterate[0].to_bits(), out.distortion.value.to_bits())
    };
    failures.check(run() == run(), "criterion 9", "KW determinism per seed".into());

    // Gradient-variance scaling on the synthetic quadratic is asserted in
    // the unit suite; repeat the regression here on the live machinery.
    failures.check(
        variance_slope_is_inverse_batch(),
        "criterion 9",
        "Y variance ~ 1/batch (log-log slope -1 +- 0.1)".into(),
    );

    // Empirical covariance of the synthesizer against the kernel.
    failures.check(
        covariance_within_three_se(),
        "criterion 9",
        "empirical fBm covariance within 3 SE".into(),
    );

    failures.finish("criterion 9");
}

fn variance_slope_is_inverse_batch() -> bool {
    use fbm_sampling::kw::{kw_step_1d, KwState, NoisyObjective, TuningSequences};
    use rand::{RngExt, SeedableRng};

    struct NoisyQuadratic;
    impl NoisyObjective for NoisyQuadratic {
        fn dim(&self) -> usize {
            1
        }
        fn observe(&self, point: &[f64], draw: u64) -> fbm_sampling::Result<f64> {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3141);
            rng.set_stream(draw);
            let noise: f64 = rng.sample(rand_distr::StandardNormal);
            Ok(-(point[0] - 2.0) * (point[0] - 2.0) + noise)
        }
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &batch in &[1usize, 2, 4, 8, 16, 32] {
        let mut state = KwState::new(
            vec![3.0],
            TuningSequences::defaults(1),
            batch,
            vec![0.01],
            vec![10.0],
            false,
        )
        .unwrap();
        let mut samples = Vec::with_capacity(300);
        for _ in 0..300 {
            let x = state.iterate[0];
            kw_step_1d(&mut state, &NoisyQuadratic).unwrap();
            samples.push(state.gradient_estimate[0]);
            state.iterate[0] = x;
            state.n = 1;
        }
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (samples.len() - 1) as f64;
        xs.push((batch as f64).ln());
        ys.push(var.ln());
    }
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xm) * (y - ym))
        .sum::<f64>()
        / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
    (slope + 1.0).abs() < 0.1
}

fn covariance_within_three_se() -> bool {
    let hp = h(0.35);
    let generator = PathGenerator::new(hp, t20(), 64, 17_000).unwrap();
    let m = 12_000u64;
    let idx = [16usize, 40, 64];
    let mut samples = vec![Vec::with_capacity(m as usize); idx.len()];
    for i in 0..m {
        let p = generator.generate(i);
        for (j, &k) in idx.iter().enumerate() {
            samples[j].push(p.values()[k]);
        }
    }
    let dt = REFERENCE_HORIZON / 64.0;
    for a in 0..idx.len() {
        for b in a..idx.len() {
            let mut cov = 0.0;
            let (mut va, mut vb) = (0.0, 0.0);
            for k in 0..m as usize {
                cov += samples[a][k] * samples[b][k];
                va += samples[a][k] * samples[a][k];
                vb += samples[b][k] * samples[b][k];
            }
            cov /= m as f64;
            va /= m as f64;
            vb /= m as f64;
            let ta = idx[a] as f64 * dt;
            let tb = idx[b] as f64 * dt;
            let theory = fbm_sampling::fbm::covariance(ta, tb, hp).unwrap();
            let se = ((va * vb + theory * theory) / m as f64).sqrt();
            if (cov - theory).abs() > 3.0 * se {
                return false;
            }
        }
    }
    true
}

/// Criterion 10: the optimal threshold coefficient is invariant across
/// horizons within +-10% per Hurst value (the threshold-horizon scaling
/// law).
#[test]
fn criterion_10_threshold_scaling_law() {
    use rayon::prelude::*;
    let mut failures = Failures::new();
    let jobs: Vec<(f64, f64)> = [0.3, 0.5, 0.7]
        .iter()
        .flat_map(|&hv| [10.0, 20.0, 40.0].map(|t| (hv, t)))
        .collect();
    let results: Vec<(f64, f64, f64)> = jobs
        .par_iter()
        .map(|&(hv, t_end)| {
            let (eta, _, _) = kw_one_sample(hv, t_end, 7);
            let coeff = eta / t_end.powf((2.0 * hv + 1.0) / 4.0);
            (hv, t_end, coeff)
        })
        .collect();
    for hv in [0.3, 0.5, 0.7] {
        let coeffs: Vec<f64> = results
            .iter()
            .filter(|r| (r.0 - hv).abs() < 1e-9)
            .map(|r| r.2)
            .collect();
        let mean = coeffs.iter().sum::<f64>() / coeffs.len() as f64;
        let max_dev = coeffs
            .iter()
            .map(|c| ((c - mean) / mean).abs())
            .fold(0.0f64, f64::max);
        failures.check(
            max_dev <= 0.10,
            "criterion 10",
            format!("H={hv}: coefficients {coeffs:?} spread {:.1}%", 100.0 * max_dev),
        );
    }
    failures.finish("criterion 10");
}
