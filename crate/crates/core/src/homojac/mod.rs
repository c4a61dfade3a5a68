//! Point-based dimensionally homogeneous Jacobian.
//!
//! Three non-collinear plate points carry the plate twist to point velocities
//! through the shifting map `V_p`; a selection matrix keeps three components
//! that share the unit of length per time. The result `J_dh = S V_p J_a` maps
//! actuator rates to those components.

mod selection;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanisms::{GeometryState, MechError, Mechanism, Pose};
use crate::screwcore::{cond2, det3, invert6, skew, Mat, Mat3, Mat6, Vec3};

pub use selection::{selection_extended, selection_for, selection_standard, SelectionMatrix, Variant};

pub type Mat9x6 = Mat<9, 6>;
pub type Mat3x9 = Mat<3, 9>;
pub type Mat6x3 = Mat<6, 3>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomojacError {
    #[error("variant {0} needs an extended selection matrix")]
    UnsupportedVariant(Variant),
    #[error("representative points are degenerate for variant {0}")]
    DegeneratePoints(Variant),
    #[error(transparent)]
    Mechanism(#[from] MechError),
}

/// Offsets of the three representative points from `O'`, fixed frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSet {
    pub offsets: [Vec3; 3],
}

impl PointSet {
    pub fn new(offsets: [Vec3; 3]) -> Self {
        Self { offsets }
    }

    /// Twice the triangle area spanned by the points.
    pub fn area2(&self) -> f64 {
        let [a, b, c] = self.offsets;
        (b - a).cross(c - a).norm()
    }

    pub fn is_collinear(&self, scale: f64) -> bool {
        0.5 * self.area2() <= 1e-12 * scale * scale
    }
}

/// Shifting map: stacked `[I, -[a_i]x]` blocks for `ẋ = [v; ω]`.
pub fn velocity_transition(points: &PointSet) -> Mat9x6 {
    let mut vp = Mat9x6::zeros();
    for (i, a) in points.offsets.iter().enumerate() {
        vp.set_block(3 * i, 0, &Mat3::identity());
        vp.set_block(3 * i, 3, &skew(*a).scale(-1.0));
    }
    vp
}

/// Every matrix of the pipeline at one pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianBundle {
    pub gt: Mat6,
    pub j: Mat6,
    pub ja: Mat6x3,
    pub vp: Mat9x6,
    pub s: Mat3x9,
    pub jdh: Mat3,
    /// `+inf` when `Gᵀ` is singular
    pub cond: f64,
    pub det: f64,
}

impl JacobianBundle {
    /// `V_p J_a`, the map from actuator rates to the nine point-velocity
    /// components.
    pub fn point_jacobian(&self) -> Mat<9, 3> {
        &self.vp * &self.ja
    }
}

/// Builds `J_dh` and its condition number from a solved pose.
///
/// `J_a` is the first three columns of `J = (Gᵀ)⁻¹`, the columns that
/// multiply the actuator rates. A singular `Gᵀ` yields a bundle with zero
/// `J` and `cond = +inf`.
pub fn build_jdh<M: Mechanism + ?Sized>(
    mech: &M,
    g: &GeometryState,
    variant: Variant,
) -> Result<JacobianBundle, HomojacError> {
    let gt = mech.inverse_jacobian(g)?;
    let points = PointSet::new(g.points);
    let s = selection_for(variant, &points)?;
    let vp = velocity_transition(&points);
    let Ok(j) = invert6(&gt) else {
        return Ok(JacobianBundle {
            gt,
            j: Mat6::zeros(),
            ja: Mat6x3::zeros(),
            vp,
            s: s.entries,
            jdh: Mat3::zeros(),
            cond: f64::INFINITY,
            det: 0.0,
        });
    };
    let ja: Mat6x3 = j.block(0, 0);
    let jdh = &(&s.entries * &vp) * &ja;
    Ok(JacobianBundle {
        gt,
        j,
        ja,
        vp,
        s: s.entries,
        jdh,
        cond: cond2(&jdh),
        det: det3(&jdh),
    })
}

/// Condition number and determinant of `J_dh` at a pose, with the solved
/// geometry for warm starts. Unreachable and singular poses give
/// `cond = +inf`, `det = 0`.
pub fn evaluate_pose<M: Mechanism + ?Sized>(
    mech: &M,
    pose: &Pose,
    warm: Option<&GeometryState>,
    variant: Variant,
) -> (f64, f64, Option<GeometryState>) {
    let Ok(g) = mech.solve(pose, warm) else {
        return (f64::INFINITY, 0.0, None);
    };
    match build_jdh(mech, &g, variant) {
        Ok(b) => (b.cond, b.det, Some(g)),
        Err(_) => (f64::INFINITY, 0.0, Some(g)),
    }
}
