pub mod distortion;
pub mod optimize_det;
pub mod optimize_level;
pub mod reproduce;
pub mod simulate;

use fbm_sampling::fbm::{Horizon, HurstParameter};

/// Shared flag validation; failures map to exit code 2.
pub fn parse_h(h: f64) -> Result<HurstParameter, String> {
    HurstParameter::new(h).map_err(|e| e.to_string())
}

pub fn parse_horizon(t: f64) -> Result<Horizon, String> {
    Horizon::new(t).map_err(|e| e.to_string())
}
