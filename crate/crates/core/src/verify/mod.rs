//! Finite-difference and nullspace oracles.
//!
//! Nothing here shares code with the analytic Jacobians: rates come from
//! re-solving the position problem at `t ± h`, reciprocal screws from an
//! elimination-based nullspace.

use serde::{Deserialize, Serialize};

use crate::mechanisms::{GeometryState, MechError, Mechanism, Pose};
use crate::screwcore::{nullspace_small, Mat3, Ordering, Screw6, Vec3};

pub const DEFAULT_STEP: f64 = 1e-6;

/// Cubic path `t ↦ (z, ψ, θ)` on `[0, 1]`; `coeffs[c][k]` multiplies `t^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseTrajectory {
    pub coeffs: [[f64; 4]; 3],
}

impl PoseTrajectory {
    pub fn new(coeffs: [[f64; 4]; 3]) -> Self {
        Self { coeffs }
    }

    pub fn constant(p: Pose) -> Self {
        Self::new([[p.z, 0.0, 0.0, 0.0], [p.psi, 0.0, 0.0, 0.0], [p.theta, 0.0, 0.0, 0.0]])
    }

    /// Straight line between two poses.
    pub fn line(a: Pose, b: Pose) -> Self {
        Self::new([
            [a.z, b.z - a.z, 0.0, 0.0],
            [a.psi, b.psi - a.psi, 0.0, 0.0],
            [a.theta, b.theta - a.theta, 0.0, 0.0],
        ])
    }

    /// Hermite cubic from `a` to `b` with end rates `da`, `db` per unit `t`.
    pub fn hermite(a: Pose, da: Pose, b: Pose, db: Pose) -> Self {
        let h = |p0: f64, m0: f64, p1: f64, m1: f64| {
            [p0, m0, 3.0 * (p1 - p0) - 2.0 * m0 - m1, 2.0 * (p0 - p1) + m0 + m1]
        };
        Self::new([
            h(a.z, da.z, b.z, db.z),
            h(a.psi, da.psi, b.psi, db.psi),
            h(a.theta, da.theta, b.theta, db.theta),
        ])
    }

    pub fn pose(&self, t: f64) -> Pose {
        let ev = |c: &[f64; 4]| ((c[3] * t + c[2]) * t + c[1]) * t + c[0];
        Pose::new(ev(&self.coeffs[0]), ev(&self.coeffs[1]), ev(&self.coeffs[2]))
    }

    /// Exact derivative of the independent coordinates.
    pub fn rate(&self, t: f64) -> Pose {
        let ev = |c: &[f64; 4]| (3.0 * c[3] * t + 2.0 * c[2]) * t + c[1];
        Pose::new(ev(&self.coeffs[0]), ev(&self.coeffs[1]), ev(&self.coeffs[2]))
    }

    /// True when the pose solves at `samples + 1` evenly spaced parameters
    /// without a branch change.
    pub fn is_feasible<M: Mechanism + ?Sized>(&self, mech: &M, samples: usize) -> bool {
        let mut prev: Option<GeometryState> = None;
        for s in 0..=samples.max(1) {
            let t = s as f64 / samples.max(1) as f64;
            match mech.solve(&self.pose(t), prev.as_ref()) {
                Ok(g) => {
                    if prev.as_ref().is_some_and(|p| p.branches() != g.branches()) {
                        return false;
                    }
                    prev = Some(g);
                }
                Err(_) => return false,
            }
        }
        true
    }
}

/// Step size and scheme for the central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDiff {
    pub h: f64,
    /// Combine steps `h` and `h/2` to cancel the `h²` error term.
    pub richardson: bool,
}

impl Default for FiniteDiff {
    fn default() -> Self {
        Self {
            h: DEFAULT_STEP,
            richardson: false,
        }
    }
}

struct Samples {
    minus: GeometryState,
    plus: GeometryState,
}

fn solve_pair<M: Mechanism + ?Sized>(
    mech: &M,
    traj: &PoseTrajectory,
    t: f64,
    h: f64,
) -> Result<(GeometryState, Samples), MechError> {
    let center = mech.solve(&traj.pose(t), None)?;
    let minus = mech.solve(&traj.pose(t - h), Some(&center))?;
    let plus = mech.solve(&traj.pose(t + h), Some(&center))?;
    if minus.branches() != center.branches() || plus.branches() != center.branches() {
        return Err(MechError::BranchFlip);
    }
    Ok((center, Samples { minus, plus }))
}

/// Rotation vector of `m`, the inverse of the exponential map.
fn rotation_vector(m: &Mat3) -> Vec3 {
    let d = &m.data;
    let v = Vec3::new(d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1]) * 0.5;
    let s = v.norm();
    let c = 0.5 * (d[0][0] + d[1][1] + d[2][2] - 1.0);
    let angle = s.atan2(c);
    if s < 1e-300 {
        return v;
    }
    v * (angle / s)
}

fn wrap_angle(d: f64) -> f64 {
    use std::f64::consts::TAU;
    if d.abs() > std::f64::consts::PI {
        d - TAU * (d / TAU).round()
    } else {
        d
    }
}

impl FiniteDiff {
    fn combine<T, F>(&self, f: F) -> Result<T, MechError>
    where
        F: Fn(f64) -> Result<T, MechError>,
        T: Lerp,
    {
        let d = f(self.h)?;
        if !self.richardson {
            return Ok(d);
        }
        let d2 = f(0.5 * self.h)?;
        Ok(T::extrapolate(&d, &d2))
    }

    /// Plate twist `[v; ω]` of `O'` at `t`, parasitic motion included.
    pub fn twist<M: Mechanism + ?Sized>(
        &self,
        mech: &M,
        traj: &PoseTrajectory,
        t: f64,
    ) -> Result<Screw6, MechError> {
        self.combine(|h| {
            let (_, s) = solve_pair(mech, traj, t, h)?;
            let v = (s.plus.position - s.minus.position) / (2.0 * h);
            let rel = &s.plus.rotation * &s.minus.rotation.transpose();
            let w = rotation_vector(&rel) / (2.0 * h);
            Ok(Screw6::new(w, v, Ordering::LinearFirst))
        })
    }

    /// Actuated joint rates at `t`.
    pub fn joint_rates<M: Mechanism + ?Sized>(
        &self,
        mech: &M,
        traj: &PoseTrajectory,
        t: f64,
    ) -> Result<[f64; 3], MechError> {
        self.combine(|h| {
            let (_, s) = solve_pair(mech, traj, t, h)?;
            let (a, b) = (s.minus.actuated(), s.plus.actuated());
            // crank angles may cross ±π between samples
            Ok(std::array::from_fn(|i| wrap_angle(b[i] - a[i]) / (2.0 * h)))
        })
    }

    /// Fixed-frame velocity of the plate point that coincides with
    /// representative point `index` at `t`.
    pub fn point_velocity<M: Mechanism + ?Sized>(
        &self,
        mech: &M,
        traj: &PoseTrajectory,
        t: f64,
        index: usize,
    ) -> Result<Vec3, MechError> {
        self.combine(|h| {
            let (c, s) = solve_pair(mech, traj, t, h)?;
            let body = c.rotation.transpose().mul_v(c.points[index]);
            let at = |g: &GeometryState| g.position + g.rotation.mul_v(body);
            Ok((at(&s.plus) - at(&s.minus)) / (2.0 * h))
        })
    }
}

trait Lerp: Sized {
    fn extrapolate(coarse: &Self, fine: &Self) -> Self;
}

impl Lerp for Vec3 {
    fn extrapolate(coarse: &Self, fine: &Self) -> Self {
        (*fine * 4.0 - *coarse) / 3.0
    }
}

impl Lerp for [f64; 3] {
    fn extrapolate(coarse: &Self, fine: &Self) -> Self {
        std::array::from_fn(|i| (4.0 * fine[i] - coarse[i]) / 3.0)
    }
}

impl Lerp for Screw6 {
    fn extrapolate(coarse: &Self, fine: &Self) -> Self {
        Screw6::new(
            Vec3::extrapolate(&coarse.angular, &fine.angular),
            Vec3::extrapolate(&coarse.linear, &fine.linear),
            coarse.ordering,
        )
    }
}

pub fn fd_twist<M: Mechanism + ?Sized>(
    mech: &M,
    traj: &PoseTrajectory,
    t: f64,
    h: f64,
) -> Result<Screw6, MechError> {
    FiniteDiff { h, richardson: false }.twist(mech, traj, t)
}

pub fn fd_joint_rates<M: Mechanism + ?Sized>(
    mech: &M,
    traj: &PoseTrajectory,
    t: f64,
    h: f64,
) -> Result<[f64; 3], MechError> {
    FiniteDiff { h, richardson: false }.joint_rates(mech, traj, t)
}

pub fn fd_point_velocity<M: Mechanism + ?Sized>(
    mech: &M,
    traj: &PoseTrajectory,
    t: f64,
    h: f64,
    index: usize,
) -> Result<Vec3, MechError> {
    FiniteDiff { h, richardson: false }.point_velocity(mech, traj, t, index)
}

/// Twist `[v; ω]` as the plain array the inverse Jacobians act on.
pub fn twist_array(t: &Screw6) -> [f64; 6] {
    t.reorder(Ordering::LinearFirst).to_array()
}

/// Basis of the wrenches reciprocal to `twists`, in the angular-first
/// layout of [`Screw6::pairing`] (moment slot first, force second).
pub fn reciprocal_basis(twists: &[Screw6]) -> Vec<Screw6> {
    // a wrench (m, f) pairs with a twist (ω, v) as m·ω + f·v
    let rows: Vec<[f64; 6]> = twists.iter().map(|t| t.reorder(Ordering::AngularFirst).to_array()).collect();
    nullspace_small(&rows)
        .into_iter()
        .map(|w| Screw6::from_array(w, Ordering::AngularFirst))
        .collect()
}

/// Sine of the angle between two directions; zero when parallel.
pub fn parallel_residual(a: Vec3, b: Vec3) -> f64 {
    a.normalized().cross(b.normalized()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{Prs3Params, TmechParams};

    fn tmech() -> TmechParams {
        TmechParams::from_lengths(45.0, [90.4, 77.4, 101.0, 87.1, 67.5, 37.8, 135.0])
    }

    #[test]
    fn constant_pose_has_zero_twist() {
        let p = tmech();
        let traj = PoseTrajectory::constant(Pose::new(100.0, 0.1, -0.2));
        let t = fd_twist(&p, &traj, 0.5, DEFAULT_STEP).unwrap();
        assert!(t.linear.norm() < 1e-12 && t.angular.norm() < 1e-12);
        let v = fd_point_velocity(&p, &traj, 0.5, DEFAULT_STEP, 1).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn pure_heave_twist_and_point_velocities() {
        let p = tmech();
        let traj = PoseTrajectory::line(Pose::new(90.0, 0.0, 0.0), Pose::new(91.0, 0.0, 0.0));
        let t = twist_array(&fd_twist(&p, &traj, 0.5, DEFAULT_STEP).unwrap());
        let expect = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        for (a, b) in t.iter().zip(expect) {
            assert!((a - b).abs() < 1e-7, "{t:?}");
        }
        for i in 0..3 {
            let v = fd_point_velocity(&p, &traj, 0.5, DEFAULT_STEP, i).unwrap();
            assert!((v - Vec3::Z).norm() < 1e-7);
        }
    }

    #[test]
    fn symmetric_prs3_heave_gives_equal_rates() {
        let p = Prs3Params::new(0.62, 1.0, 0.0);
        let traj = PoseTrajectory::line(Pose::new(0.5, 0.0, 0.0), Pose::new(0.6, 0.0, 0.0));
        let q = fd_joint_rates(&p, &traj, 0.5, DEFAULT_STEP).unwrap();
        assert!((q[0] - q[1]).abs() < 1e-7 * q[0].abs() && (q[1] - q[2]).abs() < 1e-7 * q[0].abs());
        assert!(q[0].abs() > 1e-3);
    }

    #[test]
    fn tmech_roll_is_driven_by_limb_two_only() {
        let p = tmech();
        let z = 0.6 * p.z_max();
        let traj = PoseTrajectory::line(Pose::new(z, -0.2, 0.0), Pose::new(z, 0.2, 0.0));
        let q = fd_joint_rates(&p, &traj, 0.5, DEFAULT_STEP).unwrap();
        assert!(q[0].abs() < 1e-6 && q[2].abs() < 1e-6, "{q:?}");
        assert!(q[1].abs() > 1e-2);
    }

    #[test]
    fn heave_from_rotated_start_recovers_rotation_rate() {
        let p = tmech();
        let z = 0.6 * p.z_max();
        let traj = PoseTrajectory::line(Pose::new(z, 0.0, -0.1), Pose::new(z, 0.0, 0.1));
        let t = fd_twist(&p, &traj, 0.5, DEFAULT_STEP).unwrap();
        // θ̇ = 0.2 about y at θ = 0
        assert!((t.angular - Vec3::new(0.0, 0.2, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn central_difference_error_is_second_order() {
        let p = tmech();
        let z = 0.55 * p.z_max();
        let traj = PoseTrajectory::hermite(
            Pose::new(z, 0.1, -0.05),
            Pose::new(2.0, 0.3, 0.1),
            Pose::new(z + 5.0, -0.1, 0.2),
            Pose::new(-1.0, 0.0, 0.2),
        );
        let reference = FiniteDiff { h: 1e-3, richardson: true }.joint_rates(&p, &traj, 0.4).unwrap();
        let err = |h: f64| {
            let q = fd_joint_rates(&p, &traj, 0.4, h).unwrap();
            (0..3).map(|i| (q[i] - reference[i]).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.08), err(0.04));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn hermite_hits_end_conditions() {
        let a = Pose::new(1.0, 0.1, 0.2);
        let b = Pose::new(2.0, -0.3, 0.0);
        let da = Pose::new(0.5, 0.0, 1.0);
        let db = Pose::new(-1.0, 2.0, 0.0);
        let tr = PoseTrajectory::hermite(a, da, b, db);
        assert_eq!(tr.pose(0.0), a);
        let e = tr.pose(1.0);
        assert!((e.z - b.z).abs() < 1e-15 && (e.psi - b.psi).abs() < 1e-15);
        let r = tr.rate(1.0);
        assert!((r.psi - db.psi).abs() < 1e-14 && (tr.rate(0.0).theta - da.theta).abs() < 1e-15);
    }

    #[test]
    fn unreachable_sample_is_an_error() {
        let p = Prs3Params::new(0.4, 0.4, 0.0);
        let traj = PoseTrajectory::constant(Pose::new(0.9, 0.0, 0.0));
        assert!(fd_joint_rates(&p, &traj, 0.5, DEFAULT_STEP).is_err());
        assert!(!traj.is_feasible(&p, 4));
    }

    fn rates_match<M: Mechanism>(mech: &M, traj: &PoseTrajectory, t: f64) {
        let x = twist_array(&fd_twist(mech, traj, t, DEFAULT_STEP).unwrap());
        let g = mech.solve(&traj.pose(t), None).unwrap();
        let gt = mech.inverse_jacobian(&g).unwrap();
        let q = fd_joint_rates(mech, traj, t, DEFAULT_STEP).unwrap();
        let qa = gt.mul_vec(&x);
        let scale = q.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..3 {
            assert!((qa[i] - q[i]).abs() < 1e-6 * scale, "row {i}: {qa:?} vs {q:?}");
        }
        for v in &qa[3..] {
            assert!(v.abs() < 1e-6 * x.iter().map(|v| v.abs()).fold(0.0, f64::max), "{qa:?}");
        }
    }

    #[test]
    fn analytic_rows_match_differences_on_generic_paths() {
        let p = tmech();
        let z = 0.55 * p.z_max();
        let traj = PoseTrajectory::hermite(
            Pose::new(z, 0.1, -0.05),
            Pose::new(2.0, 0.3, 0.1),
            Pose::new(z + 5.0, -0.1, 0.2),
            Pose::new(-1.0, 0.0, 0.2),
        );
        for t in [0.2, 0.5, 0.8] {
            rates_match(&p, &traj, t);
        }
        let p = Prs3Params::new(0.62, 1.0, 0.1);
        let traj = PoseTrajectory::hermite(
            Pose::new(0.7, 0.1, -0.05),
            Pose::new(0.1, 0.3, 0.1),
            Pose::new(0.8, -0.1, 0.2),
            Pose::new(0.0, 0.2, 0.2),
        );
        for t in [0.2, 0.5, 0.8] {
            rates_match(&p, &traj, t);
        }
    }

    #[test]
    fn reciprocal_basis_of_five_revolutes_is_one_wrench() {
        let twists = [
            Screw6::revolute(Vec3::X, Vec3::new(0.0, 1.0, 0.0)),
            Screw6::revolute(Vec3::Y, Vec3::new(1.0, 0.0, 0.3)),
            Screw6::revolute(Vec3::Z, Vec3::new(0.2, 0.0, 0.0)),
            Screw6::revolute(Vec3::new(1.0, 1.0, 0.0).normalized(), Vec3::ZERO),
            Screw6::revolute(Vec3::new(0.0, 1.0, 1.0).normalized(), Vec3::new(0.5, 0.5, 0.5)),
        ];
        let w = reciprocal_basis(&twists);
        assert_eq!(w.len(), 1);
        for t in &twists {
            assert!(w[0].pairing(t).abs() < 1e-12);
        }
    }
}
