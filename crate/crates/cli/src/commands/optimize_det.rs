//! `optimize-det`: deterministic schedule optimization.

use super::{parse_h, parse_horizon};
use crate::output::{csv_num, csv_row, emit, Format};
use crate::{EXIT_INVALID, EXIT_NON_CONVERGENCE, EXIT_OK};
use fbm_sampling::distortion::EstimatorMode;
use fbm_sampling::opt::optimize_multi;
use fbm_sampling::quad::QuadratureSpec;
use serde::Serialize;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Hurst parameter in (0, 1).
    #[arg(long)]
    pub h: f64,
    /// Horizon T.
    #[arg(long, default_value_t = 20.0)]
    pub t: f64,
    /// Sample budget (1 to 8).
    #[arg(long)]
    pub n: usize,
    /// Estimator mode.
    #[arg(long, value_enum, default_value_t = Mode::Full)]
    pub mode: Mode,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Full,
    Truncated,
}

impl From<Mode> for EstimatorMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Full => EstimatorMode::Full,
            Mode::Truncated => EstimatorMode::Truncated,
        }
    }
}

#[derive(Serialize)]
struct Report {
    h: f64,
    t_end: f64,
    n: usize,
    mode: &'static str,
    times: Vec<f64>,
    distortion: f64,
    evaluations: u64,
    converged: bool,
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
    if !(1..=8).contains(&args.n) {
        eprintln!("error: sample budget must be between 1 and 8, got {}", args.n);
        return Ok(EXIT_INVALID);
    }

    let spec = QuadratureSpec::default();
    let result = optimize_multi(h, horizon, args.n, args.mode.into(), &spec)
        .map_err(|e| e.to_string())?;

    let report = Report {
        h: args.h,
        t_end: args.t,
        n: args.n,
        mode: match args.mode {
            Mode::Full => "full",
            Mode::Truncated => "truncated",
        },
        times: result.schedule.times().to_vec(),
        distortion: result.distortion.value,
        evaluations: result.evaluations,
        converged: result.converged,
    };

    let content = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut fields = vec![format!("{}", report.h), report.mode.to_string()];
            fields.extend(report.times.iter().map(|&v| csv_num(v)));
            fields.push(csv_num(report.distortion));
            let mut header = vec!["h".to_string(), "mode".to_string()];
            header.extend((1..=report.times.len()).map(|i| format!("tau{i}")));
            header.push("distortion".to_string());
            format!("{}\n{}\n", csv_row(&header), csv_row(&fields))
        }
    };
    emit(args.out.as_deref(), &content).map_err(|e| e.to_string())?;

    Ok(if result.converged {
        EXIT_OK
    } else {
        EXIT_NON_CONVERGENCE
    })
}
