//! `distortion`: closed-form and Monte Carlo evaluation of a design.

use super::optimize_det::Mode;
use super::{parse_h, parse_horizon};
use crate::output::{csv_num, emit, Format};
use crate::{EXIT_INVALID, EXIT_OK};
use fbm_sampling::distortion::{distortion_multi, EstimatorMode, SamplingSchedule};
use fbm_sampling::kw::NoisyObjective;
use fbm_sampling::kw::{MultiSampleLevelObjective, OneSampleLevelObjective};
use fbm_sampling::level::{empirical_distortion, Design, ThresholdPolicy};
use fbm_sampling::quad::QuadratureSpec;
use fbm_sampling::distortion::baseline_distortion;
use rayon::prelude::*;
use serde::Serialize;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    pub h: f64,
    #[arg(long, default_value_t = 20.0)]
    pub t: f64,
    /// Deterministic sampling times, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Threshold coefficients of a level policy, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Mode::Full)]
    pub mode: Mode,
    /// Monte Carlo cross-check with this many paths.
    #[arg(long)]
    pub mc: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4096)]
    pub grid_n: usize,
    /// Write a (tau1, J(tau1)) single-sample sweep to this CSV.
    #[arg(long)]
    pub emit_curve: Option<PathBuf>,
    /// For policy designs: write the trigger outcome of the seed path to
    /// this CSV (sample, time, value, censored).
    #[arg(long)]
    pub emit_triggers: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub curve_points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Serialize)]
struct Report {
    h: f64,
    t_end: f64,
    design: &'static str,
    mode: &'static str,
    parameters: Vec<f64>,
    closed_form: Option<f64>,
    monte_carlo: Option<f64>,
    monte_carlo_std_error: Option<f64>,
}

pub fn run(args: &Args) -> Result<i32, String> {
    let h = match parse_h(args.h) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_INVALID);
        }
    };
    let horizon = match parse_horizon(args.t) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_INVALID);
        }
    };
    let mode: EstimatorMode = args.mode.into();
    let spec = QuadratureSpec::default();

    if let Some(curve_path) = &args.emit_curve {
        let mut content = String::from("tau1,distortion\n");
        let t_end = horizon.value();
        for i in 1..=args.curve_points {
            let tau = t_end * i as f64 / args.curve_points as f64;
            let j = fbm_sampling::distortion::distortion_one(tau, h, horizon, &spec)
                .map_err(|e| e.to_string())?;
            content.push_str(&format!("{},{}\n", csv_num(tau), csv_num(j.value)));
        }
        emit(Some(curve_path), &content).map_err(|e| e.to_string())?;
    }

    let report = match (&args.times, &args.q) {
        (Some(times), None) => {
            let sched = match SamplingSchedule::new(times.clone(), horizon) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(EXIT_INVALID);
                }
            };
            let closed = if sched.is_empty() {
                None
            } else {
                Some(
                    distortion_multi(&sched, h, mode, &spec)
                        .map_err(|e| e.to_string())?
                        .value,
                )
            };
            let mc = match args.mc {
                Some(n_paths) => {
                    let r = empirical_distortion(
                        Design::Schedule(&sched),
                        h,
                        horizon,
                        args.grid_n,
                        n_paths,
                        args.seed,
                        mode,
                    )
                    .map_err(|e| e.to_string())?;
                    Some((r.value, r.std_error.unwrap_or(0.0)))
                }
                None => None,
            };
            Report {
                h: args.h,
                t_end: args.t,
                design: "schedule",
                mode: mode_name(mode),
                parameters: times.clone(),
                closed_form: closed,
                monte_carlo: mc.map(|v| v.0),
                monte_carlo_std_error: mc.map(|v| v.1),
            }
        }
        (None, Some(q)) => {
            let policy = match ThresholdPolicy::new(q.clone(), h, horizon) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(EXIT_INVALID);
                }
            };
            if let Some(trigger_path) = &args.emit_triggers {
                let path = fbm_sampling::fbm::simulate_path(h, horizon, args.grid_n, args.seed)
                    .map_err(|e| e.to_string())?;
                let outcome = fbm_sampling::level::trigger_times(&path, &policy)
                    .map_err(|e| e.to_string())?;
                let f = std::fs::File::create(trigger_path).map_err(|e| e.to_string())?;
                outcome
                    .write_csv(std::io::BufWriter::new(f))
                    .map_err(|e| e.to_string())?;
            }
            // Level designs have no closed form; report the modified
            // distortion estimate over the Monte Carlo paths.
            let n_paths = args.mc.unwrap_or(10_000);
            let modified = estimate_modified(&policy, h, horizon, args, n_paths)?;
            Report {
                h: args.h,
                t_end: args.t,
                design: "policy",
                mode: mode_name(mode),
                parameters: q.clone(),
                closed_form: None,
                monte_carlo: Some(modified.0),
                monte_carlo_std_error: Some(modified.1),
            }
        }
        _ => {
            eprintln!("error: provide exactly one of --times or --q");
            return Ok(EXIT_INVALID);
        }
    };

    let content = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let closed = report.closed_form.map(csv_num).unwrap_or_default();
            let mc = report.monte_carlo.map(csv_num).unwrap_or_default();
            let se = report.monte_carlo_std_error.map(csv_num).unwrap_or_default();
            format!(
                "h,design,mode,closed_form,monte_carlo,std_error\n{},{},{},{},{},{}\n",
                report.h, report.design, report.mode, closed, mc, se
            )
        }
    };
    emit(args.out.as_deref(), &content).map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}

fn mode_name(mode: EstimatorMode) -> &'static str {
    match mode {
        EstimatorMode::Full => "full",
        EstimatorMode::Truncated => "truncated",
    }
}

/// `baseline - mean(h or h*)` over fresh paths for a threshold policy.
fn estimate_modified(
    policy: &ThresholdPolicy,
    h: fbm_sampling::fbm::HurstParameter,
    horizon: fbm_sampling::fbm::Horizon,
    args: &Args,
    n_paths: u64,
) -> Result<(f64, f64), String> {
    let values: Result<Vec<f64>, _> = if policy.len() == 1 {
        let obj = OneSampleLevelObjective::new(h, horizon, args.grid_n, args.seed)
            .map_err(|e| e.to_string())?;
        let eta = policy.threshold(0, 0.0);
        (0..n_paths)
            .into_par_iter()
            .map(|i| obj.observe(&[eta], i))
            .collect()
    } else {
        let obj = MultiSampleLevelObjective::new(
            h,
            horizon,
            policy.len(),
            args.mode.into(),
            args.grid_n,
            args.seed,
        )
        .map_err(|e| e.to_string())?;
        let q = policy.coefficients().to_vec();
        (0..n_paths)
            .into_par_iter()
            .map(|i| obj.observe(&q, i))
            .collect()
    };
    let values = values.map_err(|e| e.to_string())?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((
        baseline_distortion(h, horizon) - mean,
        (var / n).sqrt(),
    ))
}
