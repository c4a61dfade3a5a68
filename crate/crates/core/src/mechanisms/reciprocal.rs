//! Closed-form reciprocal screws of the T-mechanism limbs.
//!
//! Wrenches returned here use [`Ordering::AngularFirst`] with the moment
//! about `O'` in the angular slot and the force in the linear slot, so that
//! [`Screw6::pairing`] with a joint twist gives its power.

use super::tmech::ujoint_k;
use super::{GeometryState, MechError};
use crate::screwcore::{Ordering, Screw6, Vec3};

/// A line in space: a zero-pitch screw axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineScrew {
    pub dir: Vec3,
    pub point: Vec3,
}

impl LineScrew {
    pub fn new(dir: Vec3, point: Vec3) -> Self {
        Self { dir, point }
    }

    pub fn twist(&self) -> Screw6 {
        Screw6::revolute(self.dir, self.point)
    }
}

/// Force direction of the wrench reciprocal to five zero-pitch screws.
///
/// `screws[4]` is the reference screw; the moment arms are taken relative to
/// its point. Each term pairs the moment vectors `(p_5a × s_a) × (p_5b × s_b)`
/// with the triple product of the reference axis and the two remaining axes.
pub fn reciprocal_5s0(screws: &[LineScrew; 5]) -> Result<Vec3, MechError> {
    let s: [Vec3; 5] = std::array::from_fn(|i| screws[i].dir);
    let p5 = screws[4].point;
    let mu: [Vec3; 4] = std::array::from_fn(|i| (p5 - screws[i].point).cross(s[i]));
    let t = |c: usize, d: usize| s[4].triple(s[c], s[d]);
    let m = |a: usize, b: usize| mu[a].cross(mu[b]);
    // indices are zero-based: joint j is s[j - 1]
    let dir = m(1, 0) * -t(3, 2) + m(3, 1) * t(2, 0) - m(2, 1) * t(3, 0) - m(3, 0) * t(2, 1)
        - m(3, 2) * t(1, 0)
        + m(2, 0) * t(3, 1);
    let scale: f64 = mu.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    if !dir.is_finite() || dir.norm() <= 1e-14 * scale * scale {
        return Err(MechError::DegenerateSystem);
    }
    Ok(dir)
}

/// Wrench reciprocal to four zero-pitch screws and one pure translation.
///
/// `zero_pitch` holds joints 2..5 of the limb with the reference screw last;
/// `translation` is the infinite-pitch direction. Returns the force
/// direction `s_a∥` and the matching moment `s_a⊥` about the reference point.
pub fn reciprocal_4s0_1sinf(
    zero_pitch: &[LineScrew; 4],
    translation: Vec3,
) -> Result<(Vec3, Vec3), MechError> {
    let [j2, j3, j4, j5] = *zero_pitch;
    let p5 = j5.point;
    let arm = |j: &LineScrew| (p5 - j.point).cross(j.dir);
    let s1 = translation;
    let parallel = arm(&j4).cross(s1) * -j5.dir.triple(j3.dir, j2.dir)
        + arm(&j3).cross(s1) * j5.dir.triple(j4.dir, j2.dir)
        - arm(&j2).cross(s1) * j5.dir.triple(j4.dir, j3.dir);
    let normal = j4.dir.cross(j5.dir);
    let den = j3.dir.dot(normal);
    let scale = arm(&j2).norm().max(arm(&j3).norm()).max(1.0);
    if !parallel.is_finite() || parallel.norm() <= 1e-14 * scale || den.abs() < 1e-12 {
        return Err(MechError::DegenerateSystem);
    }
    // joint 3 row: s3 · m + (moment of joint 3 about the reference) · f = 0
    let v3 = j3.twist_about(p5);
    let kappa = -v3.dot(parallel) / den;
    Ok((parallel, normal * kappa))
}

impl LineScrew {
    /// Linear part of the unit twist about this line, seen at `reference`.
    fn twist_about(&self, reference: Vec3) -> Vec3 {
        self.dir.cross(reference - self.point)
    }
}

/// Actuation and constraint wrenches of RRS limb 1 or 3 (zero-based index 0
/// or 2), with moments about `O'`.
pub fn rrs_wrenches(g: &GeometryState, limb: usize) -> Result<(Screw6, Screw6), MechError> {
    if limb != 0 && limb != 2 {
        return Err(MechError::InvalidParams(format!("limb {limb} is not an RRS limb")));
    }
    let l = &g.limbs[limb];
    let to_origin = -l.attach;
    let l2 = l.links[1];
    let s1 = l.axes[0];
    let active = Screw6::new(l2.cross(to_origin), l2, Ordering::AngularFirst);
    let constraint = Screw6::new(s1.cross(to_origin), s1, Ordering::AngularFirst);
    Ok((active, constraint))
}

/// Actuation and constraint wrenches of the RRRU limb together with `k`.
pub fn rrru_wrenches(g: &GeometryState) -> Result<(Screw6, Screw6, f64), MechError> {
    let u = g.ujoint.ok_or(MechError::SingularUJoint)?;
    let k = ujoint_k(g)?;
    let l = &g.limbs[1];
    let active = Screw6::new(u.s4.cross(u.s5) * k, l.links[1], Ordering::AngularFirst);
    let constraint = Screw6::new(Vec3::ZERO, l.axes[0], Ordering::AngularFirst);
    Ok((active, constraint, k))
}

/// Joint screws of an RRS limb ordered base first: two revolutes and the
/// three axes of the spherical joint.
pub fn rrs_joint_screws(g: &GeometryState, limb: usize) -> [LineScrew; 5] {
    let l = &g.limbs[limb];
    let center = l.joints[2];
    [
        LineScrew::new(l.axes[0], l.joints[0]),
        LineScrew::new(l.axes[1], l.joints[1]),
        LineScrew::new(Vec3::X, center),
        LineScrew::new(Vec3::Y, center),
        LineScrew::new(Vec3::Z, center),
    ]
}

/// Passive joint screws of the RRRU limb (joints 2..5), reference last.
pub fn rrru_passive_screws(g: &GeometryState) -> Option<[LineScrew; 4]> {
    let u = g.ujoint?;
    let l = &g.limbs[1];
    let center = l.joints[3];
    Some([
        LineScrew::new(l.axes[1], l.joints[1]),
        LineScrew::new(l.axes[2], l.joints[2]),
        LineScrew::new(u.s4, center),
        LineScrew::new(u.s5, center),
    ])
}
