//! Output plumbing: JSON or fixed-precision CSV to stdout or a file.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Writes `content` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, content: &str) -> io::Result<()> {
    match path {
        Some(p) => {
            let mut f = File::create(p)?;
            f.write_all(content.as_bytes())
        }
        None => {
            print!("{content}");
            io::stdout().flush()
        }
    }
}

/// Distortions and times are printed with three decimals in CSV.
pub fn csv_num(v: f64) -> String {
    format!("{v:.3}")
}

pub fn csv_row(fields: &[String]) -> String {
    fields.join(",")
}
