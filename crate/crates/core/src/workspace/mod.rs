//! Condition-gated workspace boundary search over height slices and the
//! polar volume sum.
//!
//! Each slice `z_i` is probed along `m + 1` meridians `ε_j`. Along a meridian
//! the tilt `(ψ, θ) = α (cos ε, sin ε)` grows by `Δα` while the pose stays
//! inside; on the first exceedance the step is halved and the march resumes
//! from the last inside pose, until `Δα <= th_boundary`.

use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::homojac::{evaluate_pose, Variant};
use crate::mechanisms::{GeometryState, Mechanism, Pose};

/// Inside test used by the radial march.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// `cond(J_dh) < k_max`
    #[default]
    Cond,
    /// `|det(J_dh)|` above `det_tol` times its value at the slice origin, with
    /// the origin's sign; approximates `k_max = inf`
    Det,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub z0: f64,
    pub zf: f64,
    pub n: usize,
    pub m: usize,
    /// a number, or the string `"inf"`
    #[serde(
        default = "defaults::k_max",
        serialize_with = "ser_extended",
        deserialize_with = "de_extended"
    )]
    pub k_max: f64,
    #[serde(default = "defaults::th_boundary")]
    pub th_boundary: f64,
    #[serde(default)]
    pub boundary_mode: BoundaryMode,
    #[serde(default = "defaults::det_tol")]
    pub det_tol: f64,
    /// Interpret `z0..zf` as fractions of the mechanism's height scale.
    #[serde(default)]
    pub normalize_z: bool,
    /// Largest tilt radius `sqrt(ψ² + θ²)` probed (radians).
    #[serde(default = "defaults::max_tilt")]
    pub max_tilt: f64,
    #[serde(default = "defaults::variant")]
    pub variant: Variant,
}

mod defaults {
    use crate::homojac::Variant;

    pub fn k_max() -> f64 {
        f64::INFINITY
    }
    pub fn th_boundary() -> f64 {
        1e-4
    }
    pub fn det_tol() -> f64 {
        1e-9
    }
    pub fn max_tilt() -> f64 {
        std::f64::consts::FRAC_PI_2
    }
    pub fn variant() -> Variant {
        Variant::TzRxRy
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Extended {
    Num(f64),
    Word(String),
}

fn ser_extended<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn de_extended<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    match Extended::deserialize(d)? {
        Extended::Num(v) => Ok(v),
        Extended::Word(w) if w == "inf" => Ok(f64::INFINITY),
        Extended::Word(w) => Err(serde::de::Error::custom(format!(
            "expected a number or \"inf\", found {w:?}"
        ))),
    }
}

impl GridConfig {
    /// Grid with the default search settings.
    pub fn new(z0: f64, zf: f64, n: usize, m: usize, k_max: f64) -> Self {
        Self {
            z0,
            zf,
            n,
            m,
            k_max,
            th_boundary: defaults::th_boundary(),
            boundary_mode: BoundaryMode::Cond,
            det_tol: defaults::det_tol(),
            normalize_z: false,
            max_tilt: FRAC_PI_2,
            variant: Variant::TzRxRy,
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize_z = true;
        self
    }

    pub fn with_mode(mut self, mode: BoundaryMode) -> Self {
        self.boundary_mode = mode;
        self
    }

    pub fn with_resolution(mut self, n: usize, m: usize) -> Self {
        self.n = n;
        self.m = m;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.z0.is_finite() && self.zf.is_finite() && self.zf > self.z0) {
            return Err("grid requires finite z0 < zf".into());
        }
        if self.n < 1 || self.m < 1 {
            return Err("grid requires n, m >= 1".into());
        }
        if !(self.th_boundary > 0.0) {
            return Err("th_boundary must be positive".into());
        }
        if self.k_max.is_nan() || self.k_max < 1.0 {
            return Err("k_max must be at least 1".into());
        }
        if !(self.det_tol >= 0.0 && self.det_tol.is_finite()) {
            return Err("det_tol must be a non-negative number".into());
        }
        if !(self.max_tilt > 0.0) {
            return Err("max_tilt must be positive".into());
        }
        Ok(())
    }

    pub fn dz(&self) -> f64 {
        (self.zf - self.z0) / self.n as f64
    }

    pub fn d_eps(&self) -> f64 {
        TAU / self.m as f64
    }
}

/// Boundary pose found on meridian `j` of slice `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub i: usize,
    pub j: usize,
    /// grid height (normalized when `normalize_z` is set)
    pub z: f64,
    pub epsilon: f64,
    pub psi: f64,
    pub theta: f64,
    /// condition number at the recorded pose
    pub cond: f64,
}

impl BoundaryPoint {
    pub fn radius(&self) -> f64 {
        (self.psi * self.psi + self.theta * self.theta).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceBoundary {
    pub grid: GridConfig,
    /// `(n + 1) (m + 1)` points in `(i, j)` lexicographic order
    pub points: Vec<BoundaryPoint>,
    /// `Σ_j (Δε / 2) r_ij` per slice
    pub slice_areas: Vec<f64>,
    pub volume: f64,
    /// Pose evaluations spent by the search.
    pub evaluations: u64,
}

impl WorkspaceBoundary {
    pub fn point(&self, i: usize, j: usize) -> &BoundaryPoint {
        &self.points[i * (self.grid.m + 1) + j]
    }
}

struct Probe {
    cond: f64,
    det: f64,
    geometry: Option<GeometryState>,
}

fn probe<M: Mechanism + ?Sized>(
    mech: &M,
    cfg: &GridConfig,
    z: f64,
    psi: f64,
    theta: f64,
    warm: Option<&GeometryState>,
) -> Probe {
    if (psi * psi + theta * theta).sqrt() > cfg.max_tilt {
        return Probe {
            cond: f64::INFINITY,
            det: 0.0,
            geometry: None,
        };
    }
    let (cond, det, geometry) = evaluate_pose(mech, &Pose::new(z, psi, theta), warm, cfg.variant);
    Probe {
        cond,
        det,
        geometry,
    }
}

/// Marches one meridian. Returns `(ψ, θ, cond, evaluations)`.
fn march<M: Mechanism + ?Sized>(
    mech: &M,
    cfg: &GridConfig,
    z: f64,
    eps: f64,
) -> (f64, f64, f64, u64) {
    let origin = probe(mech, cfg, z, 0.0, 0.0, None);
    let mut evals = 1;
    let det_ref = origin.det;
    let inside = |p: &Probe| -> bool {
        match cfg.boundary_mode {
            BoundaryMode::Cond => p.cond < cfg.k_max,
            BoundaryMode::Det => {
                p.cond.is_finite()
                    && p.det.abs() >= cfg.det_tol * det_ref.abs()
                    && p.det.signum() == det_ref.signum()
            }
        }
    };
    if !inside(&origin) || (cfg.boundary_mode == BoundaryMode::Det && det_ref == 0.0) {
        return (0.0, 0.0, origin.cond, evals);
    }

    let (s, c) = eps.sin_cos();
    let (mut psi, mut theta) = (0.0_f64, 0.0_f64);
    let mut cond = origin.cond;
    let mut warm = origin.geometry;
    let mut d_alpha = cfg.d_eps();
    while d_alpha > cfg.th_boundary {
        let d_theta = d_alpha * s;
        let d_psi = d_alpha * c;
        loop {
            let p = probe(mech, cfg, z, psi + d_psi, theta + d_theta, warm.as_ref());
            evals += 1;
            if !inside(&p) {
                break;
            }
            psi += d_psi;
            theta += d_theta;
            cond = p.cond;
            warm = p.geometry;
        }
        d_alpha /= 2.0;
    }
    (psi, theta, cond, evals)
}

/// Runs the boundary search on every `(i, j)` of the grid.
///
/// Meridians are independent and run in parallel; results land in fixed
/// slots so the output does not depend on the thread count.
pub fn boundary_search<M: Mechanism + ?Sized>(mech: &M, cfg: &GridConfig) -> WorkspaceBoundary {
    let n1 = cfg.n + 1;
    let m1 = cfg.m + 1;
    let dz = cfg.dz();
    let d_eps = cfg.d_eps();
    let height = if cfg.normalize_z {
        mech.height_scale()
    } else {
        1.0
    };
    let results: Vec<(BoundaryPoint, u64)> = (0..n1 * m1)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / m1, k % m1);
            let z = cfg.z0 + i as f64 * dz;
            let eps = j as f64 * d_eps;
            let (psi, theta, cond, evals) = march(mech, cfg, z * height, eps);
            let point = BoundaryPoint {
                i,
                j,
                z,
                epsilon: eps,
                psi,
                theta,
                cond,
            };
            (point, evals)
        })
        .collect();
    let evaluations = results.iter().map(|r| r.1).sum();
    let points: Vec<BoundaryPoint> = results.into_iter().map(|r| r.0).collect();
    let slice_areas = (0..n1)
        .map(|i| {
            points[i * m1..(i + 1) * m1]
                .iter()
                .fold(0.0, |acc, p| acc + d_eps / 2.0 * p.radius())
        })
        .collect();
    let mut b = WorkspaceBoundary {
        grid: *cfg,
        points,
        slice_areas,
        volume: 0.0,
        evaluations,
    };
    b.volume = volume(&b);
    b
}

/// `V = Σ_i Σ_j (Δε / 2) sqrt(ψ_ij² + θ_ij²) Δz`, accumulated in `(i, j)`
/// order.
pub fn volume(b: &WorkspaceBoundary) -> f64 {
    let d_eps = b.grid.d_eps();
    let dz = b.grid.dz();
    b.points
        .iter()
        .fold(0.0, |acc, p| acc + d_eps / 2.0 * p.radius() * dz)
}
