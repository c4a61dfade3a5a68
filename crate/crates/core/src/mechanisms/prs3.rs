use serde::{Deserialize, Serialize};

use super::{wrench_row, GeometryState, LimbState, MechError, Mechanism, Pose};
use crate::screwcore::{Mat3, Mat6, Vec3};

/// Angular positions of the three limbs about the z-axis.
pub const PRS3_LIMB_ANGLES: [f64; 3] = [
    0.0,
    2.0 * std::f64::consts::FRAC_PI_3,
    4.0 * std::f64::consts::FRAC_PI_3,
];

const NEWTON_MAX_ITERS: usize = 50;

/// Geometry of a symmetric 3-PRS manipulator.
///
/// Rails start at the base joints `b_i = r_b (cos ξ_i, sin ξ_i, 0)` and run
/// along `d_i = -cos γ r̂_i + sin γ ẑ`; the revolute joint on each slider has
/// its axis normal to the limb plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prs3Params {
    /// moving-plate radius
    pub r_a: f64,
    /// base radius, the reference length
    #[serde(default = "unit")]
    pub r_b: f64,
    /// link length
    pub l: f64,
    /// rail inclination from the base plane (radians)
    pub gamma: f64,
}

fn unit() -> f64 {
    1.0
}

impl Prs3Params {
    pub fn new(r_a: f64, l: f64, gamma: f64) -> Self {
        Self {
            r_a,
            r_b: 1.0,
            l,
            gamma,
        }
    }

    pub fn validate(&self) -> Result<(), MechError> {
        let lengths = [self.r_a, self.r_b, self.l];
        if lengths.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(MechError::InvalidParams("3-PRS lengths must be positive".into()));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.gamma) {
            return Err(MechError::InvalidParams("3-PRS gamma must lie in [0, pi/2]".into()));
        }
        Ok(())
    }

    fn radial(i: usize) -> Vec3 {
        let (s, c) = PRS3_LIMB_ANGLES[i].sin_cos();
        Vec3::new(c, s, 0.0)
    }

    /// Unit normal of limb plane `i`, which is also the revolute axis.
    fn plane_normal(i: usize) -> Vec3 {
        let (s, c) = PRS3_LIMB_ANGLES[i].sin_cos();
        Vec3::new(-s, c, 0.0)
    }

    pub fn rail(&self, i: usize) -> Vec3 {
        let (sg, cg) = self.gamma.sin_cos();
        Self::radial(i) * (-cg) + Vec3::Z * sg
    }

    pub fn base_joint(&self, i: usize) -> Vec3 {
        Self::radial(i) * self.r_b
    }
}

impl Mechanism for Prs3Params {
    fn solve(&self, pose: &Pose, warm: Option<&GeometryState>) -> Result<GeometryState, MechError> {
        prs3_solve(pose, self, warm)
    }

    fn inverse_jacobian(&self, g: &GeometryState) -> Result<Mat6, MechError> {
        prs3_gt(g)
    }

    fn height_scale(&self) -> f64 {
        self.r_b
    }

    fn scaled(&self, lambda: f64) -> Self {
        Self {
            r_a: self.r_a * lambda,
            r_b: self.r_b * lambda,
            l: self.l * lambda,
            gamma: self.gamma,
        }
    }
}

/// Solves the parasitic coordinates `(x, y, yaw)` by Newton's method so that
/// every spherical-joint center lies in its limb plane, then places the
/// sliders. Plate orientation is `R_z(yaw) R_y(θ) R_x(ψ)`.
pub fn prs3_solve(
    pose: &Pose,
    p: &Prs3Params,
    warm: Option<&GeometryState>,
) -> Result<GeometryState, MechError> {
    if !pose.is_finite() {
        return Err(MechError::Unreachable("non-finite pose"));
    }
    let tilt = &Mat3::rot_y(pose.theta) * &Mat3::rot_x(pose.psi);
    let local: [Vec3; 3] = std::array::from_fn(|i| Prs3Params::radial(i) * p.r_a);
    let normals: [Vec3; 3] = std::array::from_fn(Prs3Params::plane_normal);

    let mut u = warm.and_then(|g| g.parasitic).unwrap_or([0.0; 3]);
    let residual = |u: &[f64; 3]| -> ([f64; 3], [Vec3; 3]) {
        let rot = &Mat3::rot_z(u[2]) * &tilt;
        let pos = Vec3::new(u[0], u[1], pose.z);
        let attach: [Vec3; 3] = std::array::from_fn(|i| rot.mul_v(local[i]));
        (std::array::from_fn(|i| normals[i].dot(pos + attach[i])), attach)
    };

    let tol = 4.0 * f64::EPSILON * p.r_b.max(p.r_a);
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITERS {
        let (f, attach) = residual(&u);
        let fmax = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !fmax.is_finite() {
            break;
        }
        if fmax <= tol {
            converged = true;
            break;
        }
        let jac = Mat3::from_rows(std::array::from_fn(|i| {
            let n = normals[i];
            [n.x, n.y, n.dot(Vec3::Z.cross(attach[i]))]
        }));
        let Ok(inv) = jac.try_inverse() else {
            break;
        };
        let step = inv.mul_vec(&f);
        for k in 0..3 {
            u[k] -= step[k];
        }
        let smax = step.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if smax <= f64::EPSILON * p.r_b {
            let (f, _) = residual(&u);
            converged = f.iter().all(|v| v.abs() <= 1e-10 * p.r_b);
            break;
        }
    }
    if !converged {
        return Err(MechError::Unreachable("parasitic-motion solve did not converge"));
    }

    let rotation = &Mat3::rot_z(u[2]) * &tilt;
    let position = Vec3::new(u[0], u[1], pose.z);
    let mut limbs = Vec::with_capacity(3);
    for i in 0..3 {
        let attach = rotation.mul_v(local[i]);
        let sphere = position + attach;
        let base = p.base_joint(i);
        let rail = p.rail(i);
        let c = sphere - base;
        let dc = rail.dot(c);
        let disc = dc * dc - c.dot(c) + p.l * p.l;
        if disc < 0.0 {
            return Err(MechError::Unreachable("slider quadratic has no real root"));
        }
        let root = disc.sqrt();
        // spherical joint above the slider; prefer the smaller travel
        let candidates = [(dc + root, 1_i8), (dc - root, -1_i8)];
        let best = candidates
            .iter()
            .filter(|(q, _)| sphere.z - (base + rail * *q).z > 0.0)
            .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
        let Some(&(q, branch)) = best else {
            return Err(MechError::Unreachable("no slider root below the plate"));
        };
        let slider = base + rail * q;
        limbs.push(LimbState {
            joints: vec![base, slider, sphere],
            links: vec![slider - base, sphere - slider],
            axes: vec![normals[i]],
            q,
            attach,
            rail: Some(rail),
            branch,
        });
    }
    let limbs: [LimbState; 3] = limbs.try_into().expect("three limbs");
    let points = [limbs[0].attach, limbs[1].attach, limbs[2].attach];
    Ok(GeometryState {
        pose: *pose,
        position,
        rotation,
        parasitic: Some(u),
        limbs,
        ujoint: None,
        points,
        scale: p.r_b,
    })
}

/// Inverse Jacobian of the 3-PRS.
///
/// Actuation row `i` is the unit force along link `i` through the spherical
/// center, divided by its work on the slider, `l̂_i · d_i`. Constraint row `i`
/// is the unit force along the revolute axis through the same center.
pub fn prs3_gt(g: &GeometryState) -> Result<Mat6, MechError> {
    let mut gt = Mat6::zeros();
    for (i, limb) in g.limbs.iter().enumerate() {
        let rail = limb.rail.ok_or(MechError::InvalidParams("limb has no rail".into()))?;
        let dir = limb.links[1].normalized();
        let den = dir.dot(rail);
        if den.abs() < 1e-12 {
            return Err(MechError::SingularLimb { limb: i + 1 });
        }
        gt.data[i] = wrench_row(dir, limb.attach, den);
        gt.data[i + 3] = wrench_row(limb.axes[0], limb.attach, 1.0);
    }
    Ok(gt)
}
