//! Run configuration: command-line flags with an optional JSON file
//! underlay. Explicit flags always win over file entries, which win over
//! the built-in defaults.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use volterra_core::solver::KernelNormalization;

/// Values parsed from `--config`; every field optional.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub xi: Option<f64>,
    pub t_horizon: Option<f64>,
    pub base_steps: Option<usize>,
    pub level: Option<u32>,
    pub seeds: Option<usize>,
    pub seed: Option<u64>,
    pub x_max: Option<f64>,
    pub space_nodes: Option<usize>,
    pub kernel_normalization: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<String>,
    pub sigma_scale: Option<f64>,
    pub drift_a: Option<f64>,
    pub drift_b: Option<f64>,
    pub x0: Option<f64>,
    pub x0_slope: Option<f64>,
}

/// Fully resolved configuration, echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub xi: f64,
    pub t_horizon: f64,
    pub base_steps: usize,
    pub level: u32,
    pub seeds: usize,
    pub seed: u64,
    pub x_max: f64,
    pub space_nodes: usize,
    pub kernel_normalization: String,
    pub out_dir: PathBuf,
    pub format: String,
    pub sigma_scale: f64,
    pub drift_a: f64,
    pub drift_b: f64,
    pub x0: f64,
    pub x0_slope: f64,
    pub force: bool,
}

impl RunConfig {
    pub fn normalization(&self) -> KernelNormalization {
        match self.kernel_normalization.as_str() {
            "c-theta" | "c_theta" => KernelNormalization::CTheta,
            _ => KernelNormalization::Plain,
        }
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.seed + i).collect()
    }

    /// Desk-scale validation; returns a message for exit code 64.
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..0.5).contains(&self.alpha) {
            return Err(format!("alpha must lie in [0, 0.5), got {}", self.alpha));
        }
        if !(0.5..=1.0).contains(&self.xi) {
            return Err(format!("xi must lie in [0.5, 1], got {}", self.xi));
        }
        if self.level > 16 && !self.force {
            return Err(format!(
                "level {} exceeds the desk-scale guard of 16 (use --force to override)",
                self.level
            ));
        }
        if self.seeds == 0 {
            return Err("seeds must be at least 1".into());
        }
        if self.base_steps < 2 {
            return Err("base-steps must be at least 2".into());
        }
        if self.t_horizon <= 0.0 {
            return Err("t-horizon must be positive".into());
        }
        if self.space_nodes < 3 || self.space_nodes % 2 == 0 {
            return Err("space-nodes must be odd and at least 3".into());
        }
        match self.kernel_normalization.as_str() {
            "plain" | "c-theta" | "c_theta" => {}
            other => return Err(format!("unknown kernel normalization '{other}'")),
        }
        match self.format.as_str() {
            "csv" | "json" => {}
            other => return Err(format!("unknown format '{other}'")),
        }
        Ok(())
    }
}

/// Parse "start:end:count" into a uniform grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid '{spec}' is not start:end:count"));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| format!("bad grid start '{}'", parts[0]))?;
    let end: f64 = parts[1]
        .parse()
        .map_err(|_| format!("bad grid end '{}'", parts[1]))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| format!("bad grid count '{}'", parts[2]))?;
    if count < 2 || end <= start {
        return Err(format!("grid '{spec}' must have end > start and count >= 2"));
    }
    let step = (end - start) / (count - 1) as f64;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}
