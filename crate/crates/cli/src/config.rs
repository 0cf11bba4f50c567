//! Optional structured run configuration; command-line flags override any
//! value set here.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub tensor: Option<String>,
    pub p: Option<f64>,
    pub p_range: Option<String>,
    pub q: Option<String>,
    pub kappa: Option<f64>,
    pub rank: Option<f64>,
    pub rank_mode: Option<String>,
    pub symmetry: Option<String>,
    pub theta_step: Option<f64>,
    pub theta_res: Option<f64>,
    pub tol: Option<f64>,
    pub format: Option<String>,
    pub out: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config `{}`", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config `{}`", path.display()))
    }
}
