//! Bound-constrained pattern search over design ratios.
//!
//! The objective is the cond-gated workspace volume; the gate lives inside
//! the boundary search, so the optimizer only sees a box.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanisms::{MechanismKind, Prs3Params, TmechParams};
use crate::workspace::{boundary_search, GridConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptError {
    #[error("rho0 has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid optimizer setting: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptConfig {
    pub rho0: Vec<f64>,
    /// `[lo, hi]` per coordinate
    pub bounds: Vec<[f64; 2]>,
    #[serde(default = "default_mesh0")]
    pub mesh0: f64,
    #[serde(default = "default_mesh_tol")]
    pub mesh_tol: f64,
    #[serde(default = "default_expand")]
    pub expand: f64,
    #[serde(default = "default_contract")]
    pub contract: f64,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "default_cache")]
    pub cache: bool,
}

fn default_mesh0() -> f64 {
    1.0
}
fn default_mesh_tol() -> f64 {
    1e-3
}
fn default_expand() -> f64 {
    2.0
}
fn default_contract() -> f64 {
    0.5
}
fn default_max_evals() -> usize {
    5000
}
fn default_cache() -> bool {
    true
}

impl OptConfig {
    pub fn new(rho0: Vec<f64>, bounds: Vec<[f64; 2]>) -> Self {
        Self {
            rho0,
            bounds,
            mesh0: default_mesh0(),
            mesh_tol: default_mesh_tol(),
            expand: default_expand(),
            contract: default_contract(),
            max_evals: default_max_evals(),
            cache: default_cache(),
        }
    }

    /// Box of the 3-PRS design `[r_a, l, γ]` with `r_b = 1`.
    pub fn prs3(rho0: [f64; 3]) -> Self {
        Self::new(rho0.to_vec(), vec![[0.1, 1.0], [0.1, 1.0], [0.0, std::f64::consts::FRAC_PI_2]])
    }

    /// Box of the seven T-mechanism ratios.
    pub fn tmech(rho0: [f64; 7]) -> Self {
        Self::new(rho0.to_vec(), vec![[0.01, 10.0]; 7])
    }

    pub fn validate(&self) -> Result<(), OptError> {
        if self.rho0.len() != self.bounds.len() {
            return Err(OptError::Dimension {
                expected: self.bounds.len(),
                got: self.rho0.len(),
            });
        }
        for (i, (x, [lo, hi])) in self.rho0.iter().zip(&self.bounds).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(OptError::InvalidConfig(format!("bounds[{i}] = [{lo}, {hi}]")));
            }
            if !(lo <= x && x <= hi) {
                return Err(OptError::InvalidConfig(format!("rho0[{i}] = {x} outside [{lo}, {hi}]")));
            }
        }
        if !(self.contract > 0.0 && self.contract < 1.0 && self.expand > 1.0 && self.expand.is_finite()) {
            return Err(OptError::InvalidConfig("need 0 < contract < 1 < expand".into()));
        }
        if !(self.mesh0 > 0.0 && self.mesh0.is_finite() && self.mesh_tol > 0.0) {
            return Err(OptError::InvalidConfig("mesh0 and mesh_tol must be positive".into()));
        }
        if self.max_evals == 0 {
            return Err(OptError::InvalidConfig("max_evals must be at least 1".into()));
        }
        Ok(())
    }

    /// The same search restricted to `coords`, starting from `rho0` in
    /// those coordinates.
    fn restricted(&self, coords: &[usize], rho0: &[f64]) -> OptConfig {
        OptConfig {
            rho0: coords.iter().map(|&i| rho0[i]).collect(),
            bounds: coords.iter().map(|&i| self.bounds[i]).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MeshConverged,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// objective evaluations so far
    pub evaluations: usize,
    pub mesh: f64,
    pub rho: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub rho_opt: Vec<f64>,
    pub v_opt: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub stop: StopReason,
    pub trace: Vec<TraceEntry>,
}

/// Objective wrapper counting unique evaluations.
struct Memo<'a, F> {
    f: &'a mut F,
    cache: Option<HashMap<Vec<u64>, f64>>,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Memo<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(v) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return *v;
        }
        let v = (self.f)(x);
        // NaN would poison every comparison
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        self.evaluations += 1;
        if let Some(c) = self.cache.as_mut() {
            c.insert(key, v);
        }
        v
    }
}

/// Maximizes `objective` over the box in `cfg`.
///
/// Coordinate polling in the order `+e1, -e1, +e2, ...`, moving to the first
/// improving point. Polls are clamped to the box; a poll that clamps back onto
/// the incumbent is skipped. The mesh expands after a success and contracts
/// after a failed poll.
pub fn pattern_search<F>(mut objective: F, cfg: &OptConfig) -> Result<OptResult, OptError>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    let mut memo = Memo {
        f: &mut objective,
        cache: cfg.cache.then(HashMap::new),
        evaluations: 0,
    };
    let max_width = cfg.bounds.iter().map(|[lo, hi]| hi - lo).fold(0.0, f64::max);
    let mut x = cfg.rho0.clone();
    let mut fx = memo.eval(&x);
    let mut mesh = cfg.mesh0;
    let mut iteration = 0;
    let mut trace = vec![TraceEntry {
        iteration,
        evaluations: memo.evaluations,
        mesh,
        rho: x.clone(),
        value: fx,
    }];
    let stop = loop {
        if mesh < cfg.mesh_tol {
            break StopReason::MeshConverged;
        }
        if memo.evaluations >= cfg.max_evals {
            break StopReason::BudgetExhausted;
        }
        iteration += 1;
        let mut improved = false;
        'poll: for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                let [lo, hi] = cfg.bounds[d];
                y[d] = (x[d] + sign * mesh).clamp(lo, hi);
                if y[d] == x[d] {
                    continue;
                }
                if memo.evaluations >= cfg.max_evals {
                    break 'poll;
                }
                let fy = memo.eval(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break 'poll;
                }
            }
        }
        mesh = if improved {
            (mesh * cfg.expand).min(max_width.max(cfg.mesh0))
        } else {
            mesh * cfg.contract
        };
        trace.push(TraceEntry {
            iteration,
            evaluations: memo.evaluations,
            mesh,
            rho: x.clone(),
            value: fx,
        });
    };
    Ok(OptResult {
        rho_opt: x,
        v_opt: fx,
        evaluations: memo.evaluations,
        iterations: iteration,
        stop,
        trace,
    })
}

/// Mechanism built from a design vector, keeping the reference length of
/// `base`. 3-PRS: `ρ = [r_a, l, γ]` in units of `r_b`; T-mechanism: the seven
/// ratios.
pub fn design_from_rho(base: &MechanismKind, rho: &[f64]) -> Result<MechanismKind, OptError> {
    match base {
        MechanismKind::Prs3(p) => {
            let [r_a, l, gamma] = <[f64; 3]>::try_from(rho).map_err(|_| OptError::Dimension {
                expected: 3,
                got: rho.len(),
            })?;
            Ok(MechanismKind::Prs3(Prs3Params {
                r_a: r_a * p.r_b,
                l: l * p.r_b,
                gamma,
                ..*p
            }))
        }
        MechanismKind::Tmech(p) => {
            let rho = <[f64; 7]>::try_from(rho).map_err(|_| OptError::Dimension {
                expected: 7,
                got: rho.len(),
            })?;
            Ok(MechanismKind::Tmech(TmechParams::new(p.r_b, rho)))
        }
    }
}

/// Design vector of a mechanism; inverse of [`design_from_rho`].
pub fn rho_of(kind: &MechanismKind) -> Vec<f64> {
    match kind {
        MechanismKind::Prs3(p) => vec![p.r_a / p.r_b, p.l / p.r_b, p.gamma],
        MechanismKind::Tmech(p) => p.rho.to_vec(),
    }
}

/// Workspace volume as a function of the design vector; 0 for designs that
/// fail validation.
pub fn volume_objective<'a>(base: &'a MechanismKind, grid: &'a GridConfig) -> impl Fn(&[f64]) -> f64 + 'a {
    move |rho| {
        let Ok(kind) = design_from_rho(base, rho) else {
            return 0.0;
        };
        if kind.validate().is_err() {
            return 0.0;
        }
        boundary_search(&kind, grid).volume
    }
}

pub fn optimize_full(base: &MechanismKind, grid: &GridConfig, cfg: &OptConfig) -> Result<OptResult, OptError> {
    pattern_search(volume_objective(base, grid), cfg)
}

/// Coordinates of the RRS-limb ratios `(ρ1, ρ2, ρ7)`.
pub const STAGE1: [usize; 3] = [0, 1, 6];
/// Coordinates of the RRRU-limb ratios `(ρ3..ρ6)`.
pub const STAGE2: [usize; 4] = [2, 3, 4, 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoupledResult {
    /// Stage results with `rho_opt` and trace entries as full seven-vectors.
    pub stages: Vec<OptResult>,
    pub rho_opt: Vec<f64>,
    pub v_opt: f64,
    pub evaluations: usize,
}

/// Two-stage search over the RRS and RRRU ratio groups, optionally followed
/// by a full search from the combined optimum.
///
/// Every stage has its own evaluation count; points revisited by a later
/// stage are recomputed.
pub fn optimize_decoupled(
    base: &MechanismKind,
    grid: &GridConfig,
    cfg: &OptConfig,
    stage3: bool,
) -> Result<DecoupledResult, OptError> {
    if !matches!(base, MechanismKind::Tmech(_)) {
        return Err(OptError::InvalidConfig("decoupled search needs the T-mechanism".into()));
    }
    cfg.validate()?;
    if cfg.rho0.len() != 7 {
        return Err(OptError::Dimension {
            expected: 7,
            got: cfg.rho0.len(),
        });
    }
    let objective = volume_objective(base, grid);
    let mut rho = cfg.rho0.clone();
    let mut stages = Vec::new();
    for coords in [&STAGE1[..], &STAGE2[..]] {
        let fixed = rho.clone();
        let embed = |sub: &[f64]| {
            let mut full = fixed.clone();
            for (k, &i) in coords.iter().enumerate() {
                full[i] = sub[k];
            }
            full
        };
        let sub = pattern_search(|s: &[f64]| objective(&embed(s)), &cfg.restricted(coords, &rho))?;
        rho = embed(&sub.rho_opt);
        stages.push(OptResult {
            rho_opt: rho.clone(),
            trace: sub
                .trace
                .iter()
                .map(|e| TraceEntry {
                    rho: embed(&e.rho),
                    ..e.clone()
                })
                .collect(),
            ..sub
        });
    }
    if stage3 {
        let cfg3 = OptConfig {
            rho0: rho.clone(),
            ..cfg.clone()
        };
        let full = pattern_search(&objective, &cfg3)?;
        rho = full.rho_opt.clone();
        stages.push(full);
    }
    let last = stages.last().expect("at least two stages");
    Ok(DecoupledResult {
        rho_opt: rho,
        v_opt: last.v_opt,
        evaluations: stages.iter().map(|s| s.evaluations).sum(),
        stages,
    })
}
