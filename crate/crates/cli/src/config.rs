//! Run configuration: defaults < config file (TOML) < command-line flags.

use anyhow::{bail, Context, Result};
use combdrive::ModelParams;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CONFIG_ENV: &str = "COMBDRIVE_CONFIG";

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct FileConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub task: TaskSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct ModelSection {
    pub beta: Option<f64>,
    pub v0: Option<f64>,
    pub tv: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct TaskSection {
    pub m: Option<u32>,
    pub p: Option<u32>,
    pub n_max: Option<u32>,
    pub m_max: Option<u32>,
    pub symmetry: Option<String>,
    pub delta_grid: Option<Vec<f64>>,
    pub grid_size: Option<usize>,
    pub points: Option<usize>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Resolved model parameters from flag/file/default precedence.
pub fn resolve_params(
    file: &FileConfig,
    beta: Option<f64>,
    v0: Option<f64>,
    tv: Option<f64>,
) -> Result<ModelParams> {
    let beta = beta.or(file.model.beta).unwrap_or(0.25);
    let v0 = v0.or(file.model.v0).unwrap_or(0.5);
    let tv = tv.or(file.model.tv).unwrap_or(2.0 * std::f64::consts::PI);
    ModelParams::new(beta, v0, tv).map_err(anyhow::Error::from)
}

pub fn parse_delta_grid(s: &str) -> Result<Vec<f64>> {
    let grid: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| anyhow::anyhow!("bad delta '{t}': {e}"))
        })
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        bail!("empty delta grid");
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_identity() {
        let cfg = FileConfig {
            model: ModelSection {
                beta: Some(0.25),
                v0: Some(0.5),
                tv: Some(6.283185307179586),
            },
            task: TaskSection {
                m: Some(2),
                p: Some(1),
                delta_grid: Some(vec![0.0, 1e-4, 2e-4]),
                ..Default::default()
            },
        };
        let text = cfg.to_toml();
        let back: FileConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        // and once more through text
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(
            parse_delta_grid("0,1e-4, 2e-4").unwrap(),
            vec![0.0, 1e-4, 2e-4]
        );
        assert!(parse_delta_grid("0,abc").is_err());
    }
}
