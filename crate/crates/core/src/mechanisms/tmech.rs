use serde::{Deserialize, Serialize};

use super::{wrench_row, GeometryState, LimbState, MechError, Mechanism, Pose, UJoint};
use crate::screwcore::{Mat3, Mat6, Vec3};

/// Denominator magnitude (relative to the product of the lengths involved)
/// below which a limb is treated as singular.
const SINGULAR_REL: f64 = 1e-12;

/// Design parameters of the 2-RRS/RRRU T-mechanism as ratios of the base
/// radius `r_b`:
///
/// | ratio | length |
/// |---|---|
/// | `rho[0]` | `l11 = l13` |
/// | `rho[1]` | `l21 = l23` |
/// | `rho[2]` | `l12` |
/// | `rho[3]` | `l22` |
/// | `rho[4]` | `l32` |
/// | `rho[5]` | `r_b2` |
/// | `rho[6]` | `r_a` |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmechParams {
    pub r_b: f64,
    pub rho: [f64; 7],
}

impl TmechParams {
    pub fn new(r_b: f64, rho: [f64; 7]) -> Self {
        Self { r_b, rho }
    }

    /// Builds the ratio vector from physical lengths
    /// `[l11, l21, l12, l22, l32, r_b2, r_a]`.
    pub fn from_lengths(r_b: f64, lengths: [f64; 7]) -> Self {
        Self {
            r_b,
            rho: lengths.map(|l| l / r_b),
        }
    }

    pub fn validate(&self) -> Result<(), MechError> {
        if !self.r_b.is_finite() || self.r_b <= 0.0 {
            return Err(MechError::InvalidParams("T-mechanism r_b must be positive".into()));
        }
        if self.rho.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(MechError::InvalidParams("T-mechanism ratios must be positive".into()));
        }
        Ok(())
    }

    pub fn l11(&self) -> f64 {
        self.rho[0] * self.r_b
    }
    pub fn l21(&self) -> f64 {
        self.rho[1] * self.r_b
    }
    pub fn l12(&self) -> f64 {
        self.rho[2] * self.r_b
    }
    pub fn l22(&self) -> f64 {
        self.rho[3] * self.r_b
    }
    pub fn l32(&self) -> f64 {
        self.rho[4] * self.r_b
    }
    pub fn r_b2(&self) -> f64 {
        self.rho[5] * self.r_b
    }
    pub fn r_a(&self) -> f64 {
        self.rho[6] * self.r_b
    }

    /// Plate height at full extension of limbs 1 and 3.
    pub fn z_max(&self) -> f64 {
        self.l11() + self.l21()
    }
}

impl Mechanism for TmechParams {
    fn solve(&self, pose: &Pose, _warm: Option<&GeometryState>) -> Result<GeometryState, MechError> {
        tmech_solve(pose, self)
    }

    fn inverse_jacobian(&self, g: &GeometryState) -> Result<Mat6, MechError> {
        tmech_gt(g)
    }

    fn height_scale(&self) -> f64 {
        self.z_max()
    }

    fn scaled(&self, lambda: f64) -> Self {
        Self {
            r_b: self.r_b * lambda,
            rho: self.rho,
        }
    }
}

/// Planar two-link inverse kinematics.
///
/// Places the knee of a chain `base → knee → target` with link lengths
/// `la`, `lb`, in the plane normal to `axis`. `knee_sign = +1` puts the knee
/// on the `axis × (target - base)` side. Returns `(knee, l1, l2)`.
pub fn planar_2r(
    base: Vec3,
    target: Vec3,
    axis: Vec3,
    la: f64,
    lb: f64,
    knee_sign: f64,
) -> Result<(Vec3, Vec3, Vec3), MechError> {
    let d = target - base;
    let dist = d.norm();
    if !dist.is_finite() || dist > la + lb || dist < (la - lb).abs() || dist == 0.0 {
        return Err(MechError::Unreachable("planar two-link target outside its annulus"));
    }
    let e = d / dist;
    let n = axis.cross(e);
    let cb = ((la * la + dist * dist - lb * lb) / (2.0 * la * dist)).clamp(-1.0, 1.0);
    let sb = (1.0 - cb * cb).max(0.0).sqrt();
    let knee = base + (e * cb + n * (knee_sign * sb)) * la;
    Ok((knee, knee - base, target - knee))
}

/// Angle of `u` about `axis`, measured from `reference`.
fn angle_about(axis: Vec3, reference: Vec3, u: Vec3) -> f64 {
    reference.cross(u).dot(axis).atan2(reference.dot(u))
}

/// Rotation of the last RRRU link about x that is compatible with a
/// universal joint whose first axis is fixed to that link (along its local y)
/// and whose second axis is fixed to the plate (along its local z), for a
/// plate orientation `R_y(θ) R_x(ψ)`.
pub fn ujoint_link_angle(psi: f64, theta: f64) -> f64 {
    psi.sin().atan2(psi.cos() * theta.cos())
}

fn rrs_limb(
    base: Vec3,
    attach: Vec3,
    plate: Vec3,
    axis: Vec3,
    la: f64,
    lb: f64,
    knee_sign: f64,
) -> Result<LimbState, MechError> {
    let sphere = plate + attach;
    let (knee, l1, l2) = planar_2r(base, sphere, axis, la, lb, knee_sign)?;
    let outward = axis.cross(Vec3::Z) * knee_sign;
    Ok(LimbState {
        joints: vec![base, knee, sphere],
        links: vec![l1, l2],
        axes: vec![axis, axis],
        q: angle_about(axis, outward, l1),
        attach,
        rail: None,
        branch: knee_sign as i8,
    })
}

/// Solves the T-mechanism for a pose.
///
/// The plate center stays on the z-axis with orientation `R_y(θ) R_x(ψ)`.
/// Limbs 1 and 3 are RRS chains in the x–z plane with y-axis revolutes;
/// limb 2 is an RRR chain in the y–z plane ending in a universal joint at the
/// plate center. All knees point away from the mechanism center.
pub fn tmech_solve(pose: &Pose, p: &TmechParams) -> Result<GeometryState, MechError> {
    if !pose.is_finite() {
        return Err(MechError::Unreachable("non-finite pose"));
    }
    let rotation = &Mat3::rot_y(pose.theta) * &Mat3::rot_x(pose.psi);
    let position = Vec3::new(0.0, 0.0, pose.z);
    let r_a = p.r_a();

    let a1 = rotation.mul_v(Vec3::new(r_a, 0.0, 0.0));
    let a3 = rotation.mul_v(Vec3::new(-r_a, 0.0, 0.0));
    let limb1 = rrs_limb(Vec3::new(p.r_b, 0.0, 0.0), a1, position, Vec3::Y, p.l11(), p.l21(), 1.0)?;
    let limb3 = rrs_limb(Vec3::new(-p.r_b, 0.0, 0.0), a3, position, Vec3::Y, p.l11(), p.l21(), -1.0)?;

    let phi = ujoint_link_angle(pose.psi, pose.theta);
    let link_rot = Mat3::rot_x(phi);
    let offset2 = link_rot.mul_v(Vec3::new(0.0, -p.l32(), 0.0));
    let joint3 = position + offset2;
    let base2 = Vec3::new(0.0, -p.r_b2(), 0.0);
    let (knee2, l12, l22) = planar_2r(base2, joint3, Vec3::X, p.l12(), p.l22(), 1.0)?;
    let l32 = position - joint3;
    let limb2 = LimbState {
        joints: vec![base2, knee2, joint3, position],
        links: vec![l12, l22, l32],
        axes: vec![Vec3::X, Vec3::X, Vec3::X],
        q: angle_about(Vec3::X, -Vec3::Y, l12),
        attach: Vec3::ZERO,
        rail: None,
        branch: 1,
    };
    let ujoint = UJoint {
        s4: link_rot.mul_v(Vec3::Y),
        s5: rotation.mul_v(Vec3::Z),
        link_angle: phi,
    };
    Ok(GeometryState {
        pose: *pose,
        position,
        rotation,
        parasitic: None,
        limbs: [limb1, limb2, limb3],
        ujoint: Some(ujoint),
        points: [a1, offset2, a3],
        scale: p.r_b,
    })
}

/// Scalar `k` of the limb-2 actuation wrench moment `k (s4 × s5)`, or the
/// error when the universal joint axes leave it undefined.
pub(crate) fn ujoint_k(g: &GeometryState) -> Result<f64, MechError> {
    let u = g.ujoint.ok_or(MechError::SingularUJoint)?;
    let limb = &g.limbs[1];
    let s3 = limb.axes[2];
    let num = s3.triple(limb.links[1], limb.links[2]);
    let den = s3.triple(u.s4, u.s5);
    if den.abs() < SINGULAR_REL {
        return Err(MechError::SingularUJoint);
    }
    Ok(num / den)
}

/// Assembles the 6x6 inverse Jacobian of the T-mechanism in `[v; ω]` order:
/// three actuation rows over three constraint rows.
pub fn tmech_gt(g: &GeometryState) -> Result<Mat6, MechError> {
    let u = g.ujoint.ok_or(MechError::SingularUJoint)?;
    let k = ujoint_k(g)?;
    let mut gt = Mat6::zeros();
    for (row, idx) in [(0, 0), (2, 2)] {
        let limb = &g.limbs[idx];
        let (l1, l2, s1) = (limb.links[0], limb.links[1], limb.axes[0]);
        let den = l2.dot(s1.cross(l1));
        if den.abs() < SINGULAR_REL * l1.norm() * l2.norm() {
            return Err(MechError::SingularLimb { limb: idx + 1 });
        }
        gt.data[row] = wrench_row(l2, limb.attach, den);
        gt.data[row + 3] = wrench_row(s1, limb.attach, 1.0);
    }

    let limb = &g.limbs[1];
    let (l12, l22, s12) = (limb.links[0], limb.links[1], limb.axes[0]);
    let den = s12.triple(l12, l22);
    if den.abs() < SINGULAR_REL * l12.norm() * l22.norm() {
        return Err(MechError::SingularLimb { limb: 2 });
    }
    let m = u.s4.cross(u.s5) * k;
    gt.data[1] = [
        l22.x / den,
        l22.y / den,
        l22.z / den,
        m.x / den,
        m.y / den,
        m.z / den,
    ];
    gt.data[4] = [s12.x, s12.y, s12.z, 0.0, 0.0, 0.0];
    Ok(gt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screwcore::invert6;

    fn unit_design() -> TmechParams {
        TmechParams::new(45.0, [1.0; 7])
    }

    pub(crate) fn optimum_design() -> TmechParams {
        TmechParams::from_lengths(45.0, [90.4, 77.4, 101.0, 87.1, 67.5, 37.8, 135.0])
    }

    #[test]
    fn home_pose_is_axis_aligned() {
        let p = unit_design();
        let g = tmech_solve(&Pose::new(50.0, 0.0, 0.0), &p).unwrap();
        assert_eq!(g.points[0], Vec3::new(45.0, 0.0, 0.0));
        assert_eq!(g.limbs[1].joints[2], Vec3::new(0.0, -45.0, 50.0));
        assert!(g.closure_residual() < 1e-10 * p.r_b);
        // knees outward
        assert!(g.limbs[0].joints[1].x > 45.0);
        assert!(g.limbs[2].joints[1].x < -45.0);
        assert!(g.limbs[1].joints[1].y < -45.0);
        let u = g.ujoint.unwrap();
        assert_eq!(u.s4.cross(u.s5), Vec3::X);
        assert_eq!(Vec3::X.triple(u.s4, u.s5), 1.0);
    }

    #[test]
    fn full_extension_reachability_follows_the_annulus() {
        let p = unit_design();
        let zmax = p.z_max();
        // limbs 1 and 3 straight up, limb 2 needs |p2 - b2| = zmax <= l12 + l22
        assert!(tmech_solve(&Pose::new(zmax, 0.0, 0.0), &p).is_ok());
        let mut short = p;
        short.rho[2] = 0.9;
        assert!(matches!(
            tmech_solve(&Pose::new(zmax, 0.0, 0.0), &short),
            Err(MechError::Unreachable(_))
        ));
    }

    #[test]
    fn tilted_pose_closes_and_stays_planar() {
        let p = optimum_design();
        let g = tmech_solve(&Pose::new(0.6 * p.z_max(), 0.3, 0.2), &p).unwrap();
        assert!(g.closure_residual() < 1e-10 * p.r_b);
        assert_eq!(g.points[0].y, 0.0);
        assert_eq!(g.points[2].y, 0.0);
        for j in &g.limbs[1].joints {
            assert_eq!(j.x, 0.0);
        }
        for limb in &g.limbs {
            for a in &limb.axes {
                assert!((a.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn home_constraint_rows_have_axis_aligned_structure() {
        let p = unit_design();
        let g = tmech_solve(&Pose::new(60.0, 0.0, 0.0), &p).unwrap();
        let gt = tmech_gt(&g).unwrap();
        let a1 = g.points[0];
        let a3 = g.points[2];
        let y1 = a1.cross(Vec3::Y);
        let y3 = a3.cross(Vec3::Y);
        assert_eq!(gt.row(3), [0.0, 1.0, 0.0, y1.x, y1.y, y1.z]);
        assert_eq!(gt.row(4), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(gt.row(5), [0.0, 1.0, 0.0, y3.x, y3.y, y3.z]);
        // row 5 forbids v_x
        let out = gt.mul_vec(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(out[4], 1.0);
    }

    #[test]
    fn inverse_jacobian_round_trips() {
        let p = optimum_design();
        let g = tmech_solve(&Pose::new(0.5 * p.z_max(), -0.2, 0.15), &p).unwrap();
        let gt = tmech_gt(&g).unwrap();
        let j = invert6(&gt).unwrap();
        let r = (&gt * &j).sub(&Mat6::identity()).norm_inf();
        assert!(r < 1e-9, "residual {r}");
    }

    #[test]
    fn ujoint_angle_reduces_to_psi_without_pitch() {
        assert!((ujoint_link_angle(0.3, 0.0) - 0.3).abs() < 1e-15);
        assert!(ujoint_link_angle(0.3, 0.4) > 0.3);
    }
}
