//! Position-level solvers and constraint-embedded inverse Jacobians for the
//! two shipped 1T2R manipulators.
//!
//! Both mechanisms express the plate twist as `ẋ = [v; ω]` of the plate
//! center `O'` in the fixed frame. Offsets named `a_i` always point from `O'`
//! to the point in question.

mod prs3;
mod reciprocal;
mod tmech;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::screwcore::{Mat3, Mat6, Vec3};

pub use prs3::{prs3_gt, prs3_solve, Prs3Params};
pub use reciprocal::{
    reciprocal_4s0_1sinf, reciprocal_5s0, rrru_passive_screws, rrru_wrenches, rrs_joint_screws,
    rrs_wrenches, LineScrew,
};
pub use tmech::{planar_2r, tmech_gt, tmech_solve, ujoint_link_angle, TmechParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechError {
    #[error("pose is outside the reachable set: {0}")]
    Unreachable(&'static str),
    #[error("limb {limb} is in an actuation singularity")]
    SingularLimb { limb: usize },
    #[error("universal joint axes make the limb-2 wrench undefined")]
    SingularUJoint,
    #[error("screw system is degenerate")]
    DegenerateSystem,
    #[error("inverse Jacobian is singular")]
    SingularMatrix,
    #[error("inverse kinematics branch changed between samples")]
    BranchFlip,
    #[error("invalid mechanism parameters: {0}")]
    InvalidParams(String),
}

/// Independent coordinates of a 1T2R plate: heave and two tilts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub z: f64,
    /// rotation about x
    pub psi: f64,
    /// rotation about y
    pub theta: f64,
}

impl Pose {
    pub const fn new(z: f64, psi: f64, theta: f64) -> Self {
        Self { z, psi, theta }
    }

    pub fn is_finite(&self) -> bool {
        self.z.is_finite() && self.psi.is_finite() && self.theta.is_finite()
    }
}

/// Solved state of one limb, ordered from the base outward.
#[derive(Debug, Clone, PartialEq)]
pub struct LimbState {
    /// Joint centers: base joint first, distal (plate-side) joint last.
    pub joints: Vec<Vec3>,
    /// Link vectors `joints[i+1] - joints[i]`.
    pub links: Vec<Vec3>,
    /// Unit axes of the revolute joints in the limb plane.
    pub axes: Vec<Vec3>,
    /// Actuated joint value (slider travel or crank angle).
    pub q: f64,
    /// Offset from `O'` to the plate attachment (spherical center).
    pub attach: Vec3,
    /// Prismatic rail direction, for slider-actuated limbs.
    pub rail: Option<Vec3>,
    /// Discrete IK branch, for branch-flip detection.
    pub branch: i8,
}

/// Universal joint of the RRRU limb.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UJoint {
    /// axis fixed to the last link
    pub s4: Vec3,
    /// axis fixed to the plate
    pub s5: Vec3,
    /// rotation of the last link about the limb axis
    pub link_angle: f64,
}

/// Everything the Jacobian assembly needs about one pose.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryState {
    pub pose: Pose,
    /// Plate center `O'` in the fixed frame.
    pub position: Vec3,
    pub rotation: Mat3,
    /// Solved dependent coordinates `(x, y, yaw)`; 3-PRS only.
    pub parasitic: Option<[f64; 3]>,
    pub limbs: [LimbState; 3],
    pub ujoint: Option<UJoint>,
    /// Offsets from `O'` of the three representative points.
    pub points: [Vec3; 3],
    /// Length unit of the mechanism, for residual tolerances.
    pub scale: f64,
}

impl GeometryState {
    /// Largest closure residual over all limbs: distance between the end of
    /// each link chain and the plate attachment it should meet.
    pub fn closure_residual(&self) -> f64 {
        self.limbs
            .iter()
            .map(|l| {
                let end = l.joints[0] + l.links.iter().fold(Vec3::ZERO, |acc, v| acc + *v);
                let target = *l.joints.last().expect("limb has joints");
                let plate = self.position + l.attach;
                (end - target).norm().max((target - plate).norm())
            })
            .fold(0.0, f64::max)
    }

    pub fn actuated(&self) -> [f64; 3] {
        [self.limbs[0].q, self.limbs[1].q, self.limbs[2].q]
    }

    pub fn branches(&self) -> [i8; 3] {
        [self.limbs[0].branch, self.limbs[1].branch, self.limbs[2].branch]
    }
}

/// A mechanism model: pose solver plus constraint-embedded inverse Jacobian.
pub trait Mechanism: Sync {
    /// Solves the position-level problem. `warm` seeds any iterative solve.
    fn solve(&self, pose: &Pose, warm: Option<&GeometryState>) -> Result<GeometryState, MechError>;

    /// The 6x6 matrix `Gᵀ` stacking actuation rows over constraint rows,
    /// acting on `ẋ = [v; ω]`.
    fn inverse_jacobian(&self, g: &GeometryState) -> Result<Mat6, MechError>;

    /// Length that maps normalized heights to physical heights.
    fn height_scale(&self) -> f64;

    /// Copy with every length multiplied by `lambda`.
    fn scaled(&self, lambda: f64) -> Self
    where
        Self: Sized;
}

/// Either shipped mechanism, selected at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MechanismKind {
    Prs3(Prs3Params),
    Tmech(TmechParams),
}

impl MechanismKind {
    pub fn validate(&self) -> Result<(), MechError> {
        match self {
            MechanismKind::Prs3(p) => p.validate(),
            MechanismKind::Tmech(p) => p.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MechanismKind::Prs3(_) => "prs3",
            MechanismKind::Tmech(_) => "tmech",
        }
    }
}

impl Mechanism for MechanismKind {
    fn solve(&self, pose: &Pose, warm: Option<&GeometryState>) -> Result<GeometryState, MechError> {
        match self {
            MechanismKind::Prs3(p) => p.solve(pose, warm),
            MechanismKind::Tmech(p) => p.solve(pose, warm),
        }
    }

    fn inverse_jacobian(&self, g: &GeometryState) -> Result<Mat6, MechError> {
        match self {
            MechanismKind::Prs3(p) => p.inverse_jacobian(g),
            MechanismKind::Tmech(p) => p.inverse_jacobian(g),
        }
    }

    fn height_scale(&self) -> f64 {
        match self {
            MechanismKind::Prs3(p) => p.height_scale(),
            MechanismKind::Tmech(p) => p.height_scale(),
        }
    }

    fn scaled(&self, lambda: f64) -> Self {
        match self {
            MechanismKind::Prs3(p) => MechanismKind::Prs3(p.scaled(lambda)),
            MechanismKind::Tmech(p) => MechanismKind::Tmech(p.scaled(lambda)),
        }
    }
}

/// Row `[fᵀ, (a × f)ᵀ] / den` of an inverse Jacobian for a force `f` whose
/// line passes through the point at offset `a` from `O'`.
pub(crate) fn wrench_row(f: Vec3, a: Vec3, den: f64) -> [f64; 6] {
    let m = a.cross(f);
    [f.x / den, f.y / den, f.z / den, m.x / den, m.y / den, m.z / den]
}
