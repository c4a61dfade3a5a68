use std::fmt;

use serde::{Deserialize, Serialize};

use super::{velocity_transition, HomojacError, Mat3x9, PointSet};

/// The nine 1T2R motion types: one translation and two rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    TxRxRy,
    TxRxRz,
    TxRyRz,
    TyRxRy,
    TyRxRz,
    TyRyRz,
    TzRxRy,
    TzRxRz,
    TzRyRz,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::TxRxRy,
        Variant::TxRxRz,
        Variant::TxRyRz,
        Variant::TyRxRy,
        Variant::TyRxRz,
        Variant::TyRyRz,
        Variant::TzRxRy,
        Variant::TzRxRz,
        Variant::TzRyRz,
    ];

    /// Axis index (0 = x) of the free translation.
    pub fn translation(self) -> usize {
        use Variant::*;
        match self {
            TxRxRy | TxRxRz | TxRyRz => 0,
            TyRxRy | TyRxRz | TyRyRz => 1,
            TzRxRy | TzRxRz | TzRyRz => 2,
        }
    }

    /// Axis indices of the two free rotations.
    pub fn rotations(self) -> [usize; 2] {
        use Variant::*;
        match self {
            TxRxRy | TyRxRy | TzRxRy => [0, 1],
            TxRxRz | TyRxRz | TzRxRz => [0, 2],
            TxRyRz | TyRyRz | TzRyRz => [1, 2],
        }
    }

    /// Axis of the constrained rotation.
    pub fn missing_rotation(self) -> usize {
        let [a, b] = self.rotations();
        3 - a - b
    }

    /// True when one point-velocity component per point describes the motion.
    pub fn is_standard(self) -> bool {
        self.translation() == self.missing_rotation()
    }

    /// Twist indices (`[v; ω]` order) of the free motions.
    pub fn desired(self) -> [usize; 3] {
        let [a, b] = self.rotations();
        [self.translation(), 3 + a, 3 + b]
    }

    /// Twist indices of the constrained motions.
    pub fn undesired(self) -> [usize; 3] {
        let d = self.desired();
        let mut out = [0; 3];
        let mut k = 0;
        for i in 0..6 {
            if !d.contains(&i) {
                out[k] = i;
                k += 1;
            }
        }
        out
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A dimensionless 3x9 selection matrix acting on stacked point velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionMatrix {
    pub entries: Mat3x9,
    pub variant: Variant,
}

/// Picks the translation-axis component of each point velocity.
pub fn selection_standard(variant: Variant) -> Result<SelectionMatrix, HomojacError> {
    if !variant.is_standard() {
        return Err(HomojacError::UnsupportedVariant(variant));
    }
    let c = variant.translation();
    let mut s = Mat3x9::zeros();
    for i in 0..3 {
        s.data[i][3 * i + c] = 1.0;
    }
    Ok(SelectionMatrix { entries: s, variant })
}

/// Extended selection matrix built from nominal velocities.
///
/// Row `r` combines the point pair `(p, q)` = (1,2), (2,3), (3,1):
/// `v_pc - v_qc + α v_pt + β v_qt`, where `c` is the axis of the constrained
/// rotation and `t` the translation axis. Differencing the `c` components
/// removes `v_c`; `α + β = 1` keeps `v_t`, and `α, β` are chosen so the
/// rotation about `c` cancels. The leading coefficient of each row is 1.
/// Standard variants fall through to [`selection_standard`].
pub fn selection_extended(
    variant: Variant,
    points: &PointSet,
) -> Result<SelectionMatrix, HomojacError> {
    if variant.is_standard() {
        return selection_standard(variant);
    }
    let t = variant.translation();
    let c = variant.missing_rotation();
    let vp = velocity_transition(points);
    let scale = points.offsets.iter().map(|a| a.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut s = Mat3x9::zeros();
    for (r, (p, q)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
        // coefficient of ω_c in the t component of each point velocity
        let ep = vp.data[3 * p + t][3 + c];
        let eq = vp.data[3 * q + t][3 + c];
        let den = eq - ep;
        if !den.is_finite() || den.abs() <= 1e-12 * scale {
            return Err(HomojacError::DegeneratePoints(variant));
        }
        s.data[r][3 * p + c] = 1.0;
        s.data[r][3 * q + c] = -1.0;
        s.data[r][3 * p + t] = eq / den;
        s.data[r][3 * q + t] = -ep / den;
    }
    Ok(SelectionMatrix { entries: s, variant })
}

/// The selection matrix appropriate to `variant`.
pub fn selection_for(variant: Variant, points: &PointSet) -> Result<SelectionMatrix, HomojacError> {
    if variant.is_standard() {
        selection_standard(variant)
    } else {
        selection_extended(variant, points)
    }
}
