//! Invariant and oracle suite behind `parawork check`.
//!
//! Poses are drawn from a fixed-seed generator, so two runs print the same
//! report.

use parawork::homojac::build_jdh;
use parawork::mechanisms::{
    reciprocal_4s0_1sinf, reciprocal_5s0, rrru_passive_screws, rrru_wrenches, rrs_joint_screws, GeometryState,
    Mechanism, MechanismKind, Pose,
};
use parawork::screwcore::{invert6, Mat6, Screw6, Vec3};
use parawork::verify::{
    fd_joint_rates, fd_point_velocity, fd_twist, parallel_residual, reciprocal_basis, twist_array, PoseTrajectory,
    DEFAULT_STEP,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;

const SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    fn push(&mut self, name: &'static str, pass: bool, detail: String) {
        self.lines.push(CheckLine { name, pass, detail });
    }

    pub fn failures(&self) -> usize {
        self.lines.iter().filter(|l| !l.pass).count()
    }

    pub fn render(&self) -> String {
        self.lines
            .iter()
            .map(|l| format!("{} {}: {}\n", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail))
            .collect()
    }
}

/// Sizes of the sampled sets.
#[derive(Debug, Clone, Copy)]
pub struct CheckSizes {
    pub poses: usize,
    pub trajectories: usize,
}

impl Default for CheckSizes {
    fn default() -> Self {
        Self {
            poses: 200,
            trajectories: 20,
        }
    }
}

fn z_range(cfg: &RunConfig) -> (f64, f64) {
    let s = if cfg.grid.normalize_z { cfg.mechanism.height_scale() } else { 1.0 };
    let (lo, hi) = (cfg.grid.z0 * s, cfg.grid.zf * s);
    // stay off the ends, where limbs stretch out or fold flat
    (lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo))
}

/// A pose that solves with an invertible `Gᵀ`, or `None` after many misses.
pub fn sample_pose(mech: &MechanismKind, z: (f64, f64), tilt: f64, rng: &mut ChaCha8Rng) -> Option<(Pose, GeometryState)> {
    for _ in 0..1000 {
        let p = Pose::new(rng.gen_range(z.0..z.1), rng.gen_range(-tilt..tilt), rng.gen_range(-tilt..tilt));
        let Ok(g) = mech.solve(&p, None) else { continue };
        let Ok(gt) = mech.inverse_jacobian(&g) else { continue };
        if invert6(&gt).is_ok() {
            return Some((p, g));
        }
    }
    None
}

fn inf_norm_vec(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn identity_residual(gt: &Mat6) -> Option<f64> {
    let j = invert6(gt).ok()?;
    Some((gt * &j).sub(&Mat6::identity()).norm_inf())
}

fn random_trajectory(
    mech: &MechanismKind,
    z: (f64, f64),
    tilt: f64,
    rng: &mut ChaCha8Rng,
) -> Option<PoseTrajectory> {
    for _ in 0..200 {
        let (a, _) = sample_pose(mech, z, tilt, rng)?;
        let (b, _) = sample_pose(mech, z, tilt, rng)?;
        let dz = 0.2 * (z.1 - z.0);
        let mut rate = || Pose::new(rng.gen_range(-dz..dz), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
        let tr = PoseTrajectory::hermite(a, rate(), b, rate());
        if tr.is_feasible(mech, 32) {
            return Some(tr);
        }
    }
    None
}

pub fn run_check(cfg: &RunConfig, pose: Option<Pose>, sizes: CheckSizes) -> CheckReport {
    let mech = &cfg.mechanism;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let z = z_range(cfg);
    let tilt = 0.3;
    let mut report = CheckReport::default();

    let poses: Vec<(Pose, GeometryState)> =
        (0..sizes.poses).filter_map(|_| sample_pose(mech, z, tilt, &mut rng)).collect();
    report.push(
        "sampling",
        poses.len() == sizes.poses,
        format!("{} of {} feasible poses drawn", poses.len(), sizes.poses),
    );

    let mut worst_id = 0.0_f64;
    let mut worst_c = 0.0_f64;
    for (_, g) in &poses {
        let gt = mech.inverse_jacobian(g).expect("sampled pose has a Jacobian");
        worst_id = worst_id.max(identity_residual(&gt).unwrap_or(f64::INFINITY));
        let b = build_jdh(mech, g, cfg.grid.variant);
        let Ok(b) = b else {
            worst_c = f64::INFINITY;
            continue;
        };
        let qd = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let x = b.ja.mul_vec(&qd);
        let gc: parawork::screwcore::Mat<3, 6> = gt.block(3, 0);
        let r = gc.mul_vec(&x);
        let scale = gc.norm_inf() * inf_norm_vec(&x);
        worst_c = worst_c.max(inf_norm_vec(&r) / scale.max(f64::MIN_POSITIVE));
    }
    report.push("inverse identity", worst_id < 1e-9, format!("max |Gt J - I|inf = {worst_id:.3e}"));
    report.push("constraint rows", worst_c < 1e-9, format!("max relative |Gc Ja qd| = {worst_c:.3e}"));

    let mut worst_q = 0.0_f64;
    let mut worst_v = 0.0_f64;
    let mut made = 0;
    for _ in 0..sizes.trajectories {
        let Some(tr) = random_trajectory(mech, z, tilt, &mut rng) else { continue };
        made += 1;
        let t = 0.5;
        let (Ok(tw), Ok(q), Ok(g)) = (
            fd_twist(mech, &tr, t, DEFAULT_STEP),
            fd_joint_rates(mech, &tr, t, DEFAULT_STEP),
            mech.solve(&tr.pose(t), None),
        ) else {
            worst_q = f64::INFINITY;
            continue;
        };
        let gt = mech.inverse_jacobian(&g).expect("feasible");
        let qa = gt.mul_vec(&twist_array(&tw));
        let qs = inf_norm_vec(&q).max(f64::MIN_POSITIVE);
        for i in 0..3 {
            worst_q = worst_q.max((qa[i] - q[i]).abs() / qs);
        }
        let Ok(b) = build_jdh(mech, &g, cfg.grid.variant) else {
            worst_v = f64::INFINITY;
            continue;
        };
        let mut stacked = [0.0; 9];
        for k in 0..3 {
            match fd_point_velocity(mech, &tr, t, DEFAULT_STEP, k) {
                Ok(v) => stacked[3 * k..3 * k + 3].copy_from_slice(&v.to_array()),
                Err(_) => worst_v = f64::INFINITY,
            }
        }
        let sel = b.s.mul_vec(&stacked);
        let pred = b.jdh.mul_vec(&q);
        let vs = inf_norm_vec(&sel).max(f64::MIN_POSITIVE);
        for i in 0..3 {
            worst_v = worst_v.max((pred[i] - sel[i]).abs() / vs);
        }
    }
    let enough = made == sizes.trajectories;
    report.push(
        "joint rates vs differences",
        enough && worst_q < 1e-6,
        format!("{made} paths, max relative error {worst_q:.3e}"),
    );
    report.push(
        "point velocities vs differences",
        enough && worst_v < 1e-6,
        format!("{made} paths, max relative error {worst_v:.3e}"),
    );

    let mut worst_s = 0.0_f64;
    for lambda in [1e-3, 1e3] {
        let scaled = mech.scaled(lambda);
        for (p, g) in poses.iter().take(100) {
            let p2 = Pose::new(p.z * lambda, p.psi, p.theta);
            let c0 = build_jdh(mech, g, cfg.grid.variant).map(|b| b.cond);
            let c1 = scaled
                .solve(&p2, None)
                .ok()
                .and_then(|g2| build_jdh(&scaled, &g2, cfg.grid.variant).ok())
                .map(|b| b.cond);
            worst_s = match (c0, c1) {
                (Ok(a), Some(b)) if a.is_finite() => worst_s.max((b / a - 1.0).abs()),
                _ => f64::INFINITY,
            };
        }
    }
    report.push("scale invariance", worst_s < 1e-8, format!("max relative cond change {worst_s:.3e}"));

    if matches!(mech, MechanismKind::Tmech(_)) {
        let (par, k) = reciprocal_residuals(&poses);
        report.push("reciprocal screw directions", par < 1e-9, format!("max sin angle {par:.3e}"));
        report.push("universal joint k", k < 1e-9, format!("max relative error {k:.3e}"));
    }

    if let Some(p) = pose {
        let verdict = match mech.solve(&p, None) {
            Err(e) => (false, format!("unreachable: {e}")),
            Ok(g) => match build_jdh(mech, &g, cfg.grid.variant) {
                Err(e) => (false, e.to_string()),
                Ok(b) if !b.cond.is_finite() || b.cond > 1e8 => (false, format!("singular, cond = {}", b.cond)),
                Ok(b) => (true, format!("cond = {}", b.cond)),
            },
        };
        report.push("requested pose", verdict.0, verdict.1);
    }
    report
}

/// Worst parallelism residual of the closed-form reciprocal screws against
/// the nullspace oracle, and worst relative error of `k`.
pub fn reciprocal_residuals(poses: &[(Pose, GeometryState)]) -> (f64, f64) {
    let at_plate = |g: &GeometryState, dir: Vec3, point: Vec3| Screw6::revolute(dir, point - g.position);
    let mut worst_par = 0.0_f64;
    let mut worst_k = 0.0_f64;
    for (_, g) in poses {
        for limb in [0, 2] {
            let screws = rrs_joint_screws(g, limb);
            let twists: Vec<Screw6> = screws.iter().map(|s| at_plate(g, s.dir, s.point)).collect();
            let ns = reciprocal_basis(&twists);
            let r = match (reciprocal_5s0(&screws), ns.as_slice()) {
                (Ok(d), [w]) => parallel_residual(d, w.linear),
                _ => f64::INFINITY,
            };
            worst_par = worst_par.max(r);
        }
        let Some(passive) = rrru_passive_screws(g) else {
            worst_par = f64::INFINITY;
            continue;
        };
        let s1 = g.limbs[1].axes[0];
        let mut twists: Vec<Screw6> = passive.iter().map(|s| at_plate(g, s.dir, s.point)).collect();
        twists.push(Screw6::prismatic(s1));
        let ns = reciprocal_basis(&twists);
        let ([w], Ok((par, _)), Ok((_, _, k))) = (ns.as_slice(), reciprocal_4s0_1sinf(&passive, s1), rrru_wrenches(g))
        else {
            worst_par = f64::INFINITY;
            continue;
        };
        worst_par = worst_par.max(parallel_residual(par, w.linear));
        // scale the oracle wrench to force l22; its moment is then k (s4 × s5)
        let u = g.ujoint.expect("T-mechanism has a universal joint");
        let l22 = g.limbs[1].links[1];
        let f = w.linear;
        let s = l22.dot(f) / f.dot(f);
        let n = u.s4.cross(u.s5);
        let k_oracle = (w.angular * s).dot(n) / n.dot(n);
        worst_k = worst_k.max((k - k_oracle).abs() / k_oracle.abs().max(f64::MIN_POSITIVE));
    }
    (worst_par, worst_k)
}
