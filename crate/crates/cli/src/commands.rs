use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use parawork::homojac::{build_jdh, JacobianBundle};
use parawork::mechanisms::{rrru_wrenches, GeometryState, MechanismKind, Mechanism, Pose};
use parawork::optimize::{design_from_rho, optimize_decoupled, optimize_full, OptResult, StopReason};
use parawork::screwcore::Mat;
use parawork::workspace::{boundary_search, WorkspaceBoundary};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, Format, Method, PoseError, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("bad --pose: {0}")]
    Pose(#[from] PoseError),
    #[error("{0}")]
    Usage(String),
    #[error("pose is not reachable: {0}")]
    Unreachable(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0} of {1} checks failed")]
    CheckFailed(usize, usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Schema(_)) | CliError::Pose(_) | CliError::Usage(_) => 2,
            CliError::Config(ConfigError::Mechanism(_)) => 3,
            CliError::Unreachable(_) => 4,
            CliError::Io { .. } | CliError::CheckFailed(..) => 1,
        }
    }
}

pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(crate::config::parse_config(&text)?)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// `{}` on f64 is the shortest decimal that round-trips and never depends
/// on locale.
fn push_row(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let mut first = true;
    for f in fields {
        if !first {
            out.push(',');
        }
        out.push_str(&f);
        first = false;
    }
    out.push('\n');
}

pub fn boundary_csv(b: &WorkspaceBoundary) -> String {
    let mut s = String::from("i,j,z,epsilon,psi,theta,cond\n");
    for p in &b.points {
        push_row(
            &mut s,
            [
                p.i.to_string(),
                p.j.to_string(),
                p.z.to_string(),
                p.epsilon.to_string(),
                p.psi.to_string(),
                p.theta.to_string(),
                p.cond.to_string(),
            ],
        );
    }
    s
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

pub fn workspace_summary(cfg: &RunConfig, b: &WorkspaceBoundary) -> Value {
    json!({
        "tool": "parawork",
        "version": VERSION,
        "mechanism": cfg.mechanism,
        "grid": cfg.grid,
        "mode": cfg.grid.boundary_mode,
        "volume": b.volume,
        "slice_areas": b.slice_areas,
        "evaluations": b.evaluations,
    })
}

pub fn cmd_workspace(cfg: &RunConfig, out: &Path) -> Result<WorkspaceBoundary, CliError> {
    let b = boundary_search(&cfg.mechanism, &cfg.grid);
    if cfg.output.wants(Format::Csv) {
        write(out, "boundary.csv", &boundary_csv(&b))?;
    }
    if cfg.output.wants(Format::Json) {
        write(out, "summary.json", &pretty(&workspace_summary(cfg, &b)))?;
    }
    Ok(b)
}

fn rows<const R: usize, const C: usize>(m: &Mat<R, C>) -> Value {
    json!(m.to_vecs())
}

pub fn jacobian_json(cfg: &RunConfig, g: &GeometryState, b: &JacobianBundle) -> Value {
    let mut v = json!({
        "mechanism": cfg.mechanism,
        "pose": g.pose,
        "variant": cfg.grid.variant,
        "actuated": g.actuated(),
        "Gt": rows(&b.gt),
        "J": rows(&b.j),
        "V_p": rows(&b.vp),
        "S": rows(&b.s),
        "J_dh": rows(&b.jdh),
        "cond": finite(b.cond),
        "det": b.det,
    });
    if let Some(p) = g.parasitic {
        v["parasitic"] = json!(p);
    }
    if matches!(cfg.mechanism, MechanismKind::Tmech(_)) {
        v["k"] = match rrru_wrenches(g) {
            Ok((_, _, k)) => json!(k),
            Err(_) => Value::Null,
        };
    }
    v
}

/// Jacobian bundle at one pose. `z` is in the mechanism's length unit.
pub fn cmd_jacobian(cfg: &RunConfig, pose: &Pose, out: Option<&Path>) -> Result<String, CliError> {
    let g = cfg
        .mechanism
        .solve(pose, None)
        .map_err(|e| CliError::Unreachable(e.to_string()))?;
    let b = build_jdh(&cfg.mechanism, &g, cfg.grid.variant).map_err(|e| CliError::Unreachable(e.to_string()))?;
    let text = pretty(&jacobian_json(cfg, &g, &b));
    if let Some(dir) = out {
        write(dir, "jacobian.json", &text)?;
    }
    Ok(text)
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    pub method: Method,
    pub rho_opt: Vec<f64>,
    #[serde(rename = "V_opt")]
    pub v_opt: f64,
    /// volume of `rho_opt` on the full grid when the search used a coarser one
    #[serde(rename = "V_verified", skip_serializing_if = "Option::is_none")]
    pub v_verified: Option<f64>,
    pub evaluations: usize,
    pub iterations: usize,
    pub stop: StopReason,
    pub stages: Vec<StageSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageSummary {
    pub rho_opt: Vec<f64>,
    #[serde(rename = "V_opt")]
    pub v_opt: f64,
    pub evaluations: usize,
    pub iterations: usize,
}

impl From<&OptResult> for StageSummary {
    fn from(r: &OptResult) -> Self {
        Self {
            rho_opt: r.rho_opt.clone(),
            v_opt: r.v_opt,
            evaluations: r.evaluations,
            iterations: r.iterations,
        }
    }
}

/// Trace with iteration and evaluation counters accumulated over stages.
pub fn trace_csv(stages: &[OptResult]) -> String {
    let dim = stages.first().map_or(0, |s| s.rho_opt.len());
    let mut s = String::from("iter,evals,mesh");
    for k in 1..=dim {
        let _ = write!(s, ",rho{k}");
    }
    s.push_str(",V\n");
    let (mut it0, mut ev0) = (0, 0);
    for stage in stages {
        for e in &stage.trace {
            let mut f = vec![(it0 + e.iteration).to_string(), (ev0 + e.evaluations).to_string(), e.mesh.to_string()];
            f.extend(e.rho.iter().map(|r| r.to_string()));
            f.push(e.value.to_string());
            push_row(&mut s, f);
        }
        it0 += stage.iterations;
        ev0 += stage.evaluations;
    }
    s
}

pub fn cmd_optimize(cfg: &RunConfig, out: &Path) -> Result<OptimizeReport, CliError> {
    let opt = cfg.optimize.opt_config(&cfg.mechanism);
    let search = match cfg.optimize.search_grid {
        Some([n, m]) => cfg.grid.with_resolution(n, m),
        None => cfg.grid,
    };
    let usage = |e: parawork::optimize::OptError| CliError::Usage(e.to_string());
    let stages = match cfg.optimize.method {
        Method::Full => vec![optimize_full(&cfg.mechanism, &search, &opt).map_err(usage)?],
        Method::Decoupled => {
            optimize_decoupled(&cfg.mechanism, &search, &opt, cfg.optimize.stage3)
                .map_err(usage)?
                .stages
        }
    };
    let last = stages.last().expect("at least one stage");
    let v_verified = if cfg.optimize.search_grid.is_some() {
        let mech = design_from_rho(&cfg.mechanism, &last.rho_opt).map_err(usage)?;
        Some(boundary_search(&mech, &cfg.grid).volume)
    } else {
        None
    };
    let report = OptimizeReport {
        method: cfg.optimize.method,
        rho_opt: last.rho_opt.clone(),
        v_opt: last.v_opt,
        v_verified,
        evaluations: stages.iter().map(|s| s.evaluations).sum(),
        iterations: stages.iter().map(|s| s.iterations).sum(),
        stop: last.stop,
        stages: stages.iter().map(StageSummary::from).collect(),
    };
    if cfg.output.wants(Format::Csv) {
        write(out, "opt_trace.csv", &trace_csv(&stages))?;
    }
    if cfg.output.wants(Format::Json) {
        write(out, "opt_result.json", &pretty(&report))?;
    }
    Ok(report)
}
