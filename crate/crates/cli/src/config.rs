//! Run configuration and the two untrusted-input parsers: the config file
//! and the `--pose` string.

use std::path::PathBuf;

use parawork::mechanisms::{MechanismKind, Pose};
use parawork::optimize::{rho_of, OptConfig};
use parawork::workspace::GridConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config does not match the schema: {0}")]
    Schema(String),
    #[error("invalid mechanism: {0}")]
    Mechanism(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mechanism: MechanismKind,
    pub grid: GridConfig,
    #[serde(default)]
    pub optimize: OptimizeBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Full,
    Decoupled,
}

/// Optimizer settings. `rho0` defaults to the design in the mechanism block
/// and `bounds` to the mechanism's standard box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeBlock {
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub stage3: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    #[serde(default = "d::mesh0")]
    pub mesh0: f64,
    #[serde(default = "d::mesh_tol")]
    pub mesh_tol: f64,
    #[serde(default = "d::expand")]
    pub expand: f64,
    #[serde(default = "d::contract")]
    pub contract: f64,
    #[serde(default = "d::max_evals")]
    pub max_evals: usize,
    #[serde(default = "d::cache")]
    pub cache: bool,
    /// `[n, m]` used while searching; the optimum is re-evaluated on the
    /// grid block's resolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_grid: Option<[usize; 2]>,
}

mod d {
    pub fn mesh0() -> f64 {
        1.0
    }
    pub fn mesh_tol() -> f64 {
        1e-3
    }
    pub fn expand() -> f64 {
        2.0
    }
    pub fn contract() -> f64 {
        0.5
    }
    pub fn max_evals() -> usize {
        5000
    }
    pub fn cache() -> bool {
        true
    }
}

impl Default for OptimizeBlock {
    fn default() -> Self {
        Self {
            method: Method::Full,
            stage3: false,
            rho0: None,
            bounds: None,
            mesh0: d::mesh0(),
            mesh_tol: d::mesh_tol(),
            expand: d::expand(),
            contract: d::contract(),
            max_evals: d::max_evals(),
            cache: d::cache(),
            search_grid: None,
        }
    }
}

impl OptimizeBlock {
    pub fn opt_config(&self, mech: &MechanismKind) -> OptConfig {
        let rho0 = self.rho0.clone().unwrap_or_else(|| rho_of(mech));
        let standard = match mech {
            MechanismKind::Prs3(_) => OptConfig::prs3([0.4, 0.4, 0.0]),
            MechanismKind::Tmech(_) => OptConfig::tmech([1.0; 7]),
        };
        OptConfig {
            rho0,
            bounds: self.bounds.clone().unwrap_or(standard.bounds),
            mesh0: self.mesh0,
            mesh_tol: self.mesh_tol,
            expand: self.expand,
            contract: self.contract,
            max_evals: self.max_evals,
            cache: self.cache,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: default_dir(),
            formats: default_formats(),
        }
    }
}

impl OutputBlock {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// Parses and validates a config document.
///
/// Schema errors cover malformed JSON, unknown keys, wrong types and invalid
/// grid or optimizer settings; mechanism errors cover geometry that cannot
/// be built.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Schema(e.to_string()))?;
    cfg.grid.validate().map_err(ConfigError::Schema)?;
    if let Some(g) = cfg.optimize.search_grid {
        if g[0] == 0 || g[1] == 0 {
            return Err(ConfigError::Schema("search_grid entries must be at least 1".into()));
        }
    }
    if let MechanismKind::Prs3(p) = &cfg.mechanism {
        // the angle range is part of the schema, lengths are checked below
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&p.gamma) {
            return Err(ConfigError::Schema(format!("gamma = {} outside [0, pi/2]", p.gamma)));
        }
    }
    cfg.mechanism.validate().map_err(|e| ConfigError::Mechanism(e.to_string()))?;
    Ok(cfg)
}

pub fn to_json(cfg: &RunConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

#[derive(Debug, Error, PartialEq)]
pub enum PoseError {
    #[error("expected three comma-separated numbers z,psi,theta")]
    Arity,
    #[error("not a number: {0:?}")]
    Number(String),
    #[error("pose components must be finite")]
    NonFinite,
}

/// Parses `z,psi,theta` (angles in radians). Whitespace around fields is
/// ignored.
pub fn parse_pose(text: &str) -> Result<Pose, PoseError> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    let [z, psi, theta] = fields[..] else {
        return Err(PoseError::Arity);
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| PoseError::Number(s.to_string()));
    let pose = Pose::new(num(z)?, num(psi)?, num(theta)?);
    if !pose.is_finite() {
        return Err(PoseError::NonFinite);
    }
    Ok(pose)
}
