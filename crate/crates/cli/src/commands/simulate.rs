//! `simulate`: export one trajectory as two-column CSV.

use super::{parse_h, parse_horizon};
use crate::{EXIT_INVALID, EXIT_OK};
use fbm_sampling::fbm::simulate_path;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    pub h: f64,
    #[arg(long, default_value_t = 20.0)]
    pub t: f64,
    #[arg(long, default_value_t = 4096)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
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
    let path = simulate_path(h, horizon, args.grid_n, args.seed).map_err(|e| e.to_string())?;
    match &args.out {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| e.to_string())?;
            path.write_csv(std::io::BufWriter::new(f))
                .map_err(|e| e.to_string())?;
        }
        None => {
            let stdout = std::io::stdout();
            path.write_csv(stdout.lock()).map_err(|e| e.to_string())?;
        }
    }
    Ok(EXIT_OK)
}
