//! `optimize-level`: threshold-policy optimization by stochastic
//! approximation.

use super::optimize_det::Mode;
use super::{parse_h, parse_horizon};
use crate::output::{csv_num, csv_row, emit, Format};
use crate::{EXIT_INVALID, EXIT_NON_CONVERGENCE, EXIT_OK};
use fbm_sampling::kw::{kw_optimize, KwConfig, KwProblem, KwProblemKind};
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
    /// Number of thresholds (1 to 3 for full mode).
    #[arg(long)]
    pub n: usize,
    /// Estimator mode (ignored for n = 1).
    #[arg(long, value_enum, default_value_t = Mode::Full)]
    pub mode: Mode,
    /// Master seed for path substreams.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Paths averaged per finite-difference side and iteration.
    #[arg(long, default_value_t = 100)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 3000)]
    pub max_iter: u64,
    /// Simulation grid steps per horizon.
    #[arg(long, default_value_t = 4096)]
    pub grid_n: usize,
    /// Paths of the final distortion evaluation.
    #[arg(long, default_value_t = 100_000)]
    pub eval_paths: u64,
    /// Share the path substream within each finite-difference pair
    /// (default: on for n = 1, off otherwise).
    #[arg(long)]
    pub crn: Option<bool>,
    /// Write the iteration trace CSV here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Serialize)]
struct Report {
    h: f64,
    t_end: f64,
    n: usize,
    mode: &'static str,
    seed: u64,
    coefficients: Vec<f64>,
    thresholds_at_start: Vec<f64>,
    distortion: f64,
    std_error: f64,
    iterations: u64,
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
    let kind = match (args.n, args.mode) {
        (0, _) => {
            eprintln!("error: need at least one threshold");
            return Ok(EXIT_INVALID);
        }
        (1, _) => KwProblemKind::OneSample,
        (n, Mode::Full) if n > 3 => {
            eprintln!("error: full mode supports at most 3 thresholds, got {n}");
            return Ok(EXIT_INVALID);
        }
        (n, Mode::Full) => KwProblemKind::MultiFull { n },
        (n, Mode::Truncated) => KwProblemKind::MultiTruncated { n },
    };

    let problem = KwProblem {
        kind,
        h,
        horizon,
    };
    let mut config = KwConfig::new(args.seed);
    config.batch_size = args.batch_size;
    config.max_iter = args.max_iter;
    config.grid_n = args.grid_n;
    config.eval_paths = args.eval_paths;
    config.common_random_pairs = args.crn;

    let outcome = kw_optimize(&problem, &config).map_err(|e| e.to_string())?;

    if let Some(trace_path) = &args.trace {
        let mut content = String::new();
        let dim = outcome.policy.len();
        let mut header = vec!["n".to_string()];
        header.extend((1..=dim).map(|k| format!("x{k}")));
        header.extend((1..=dim).map(|k| format!("y{k}")));
        header.extend((1..=dim).map(|k| format!("a{k}")));
        header.extend((1..=dim).map(|k| format!("c{k}")));
        content.push_str(&csv_row(&header));
        content.push('\n');
        for row in &outcome.trace {
            let mut fields = vec![row.n.to_string()];
            for group in [&row.iterate, &row.y, &row.a, &row.c] {
                fields.extend(group.iter().map(|v| format!("{v}")));
            }
            content.push_str(&csv_row(&fields));
            content.push('\n');
        }
        emit(Some(trace_path), &content).map_err(|e| e.to_string())?;
    }

    let report = Report {
        h: args.h,
        t_end: args.t,
        n: args.n,
        mode: if args.n == 1 {
            "one-sample"
        } else {
            match args.mode {
                Mode::Full => "full",
                Mode::Truncated => "truncated",
            }
        },
        seed: args.seed,
        coefficients: outcome.policy.coefficients().to_vec(),
        thresholds_at_start: (0..outcome.policy.len())
            .map(|i| outcome.policy.threshold(i, 0.0))
            .collect(),
        distortion: outcome.distortion.value,
        std_error: outcome.distortion.std_error.unwrap_or(0.0),
        iterations: outcome.iterations,
        converged: outcome.converged,
    };

    let content = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut header = vec!["h".to_string(), "mode".to_string(), "seed".to_string()];
            header.extend((1..=report.coefficients.len()).map(|i| format!("q{i}")));
            header.extend(["distortion".to_string(), "std_error".to_string()]);
            let mut fields = vec![
                format!("{}", report.h),
                report.mode.to_string(),
                report.seed.to_string(),
            ];
            fields.extend(report.coefficients.iter().map(|&v| csv_num(v)));
            fields.push(csv_num(report.distortion));
            fields.push(csv_num(report.std_error));
            format!("{}\n{}\n", csv_row(&header), csv_row(&fields))
        }
    };
    emit(args.out.as_deref(), &content).map_err(|e| e.to_string())?;

    Ok(if outcome.converged {
        EXIT_OK
    } else {
        EXIT_NON_CONVERGENCE
    })
}
