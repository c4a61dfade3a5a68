use serde::{Deserialize, Serialize};

use super::vec3::Vec3;

/// Block layout of a 6-vector screw when flattened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ordering {
    /// `[ω; v]`, the screw representation used for limb derivations.
    AngularFirst,
    /// `[v; ω]`, the Cartesian velocity layout used by the inverse Jacobians.
    LinearFirst,
}

impl Ordering {
    pub fn other(self) -> Self {
        match self {
            Ordering::AngularFirst => Ordering::LinearFirst,
            Ordering::LinearFirst => Ordering::AngularFirst,
        }
    }
}

/// A twist or a wrench in coordinates that pair by plain dot product.
///
/// For a twist, `angular` is ω and `linear` is the velocity of the reference
/// point. For a wrench, `angular` holds the moment about the reference point
/// and `linear` the force, so that [`Screw6::pairing`] is mechanical power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Screw6 {
    pub angular: Vec3,
    pub linear: Vec3,
    pub ordering: Ordering,
}

impl Screw6 {
    pub fn new(angular: Vec3, linear: Vec3, ordering: Ordering) -> Self {
        Self {
            angular,
            linear,
            ordering,
        }
    }

    /// Twist of a zero-pitch joint with axis `dir` through `point`, expressed
    /// at the origin of the frame `point` is measured in.
    pub fn revolute(dir: Vec3, point: Vec3) -> Self {
        Self::new(dir, point.cross(dir), Ordering::AngularFirst)
    }

    /// Twist of an infinite-pitch (pure translation) joint.
    pub fn prismatic(dir: Vec3) -> Self {
        Self::new(Vec3::ZERO, dir, Ordering::AngularFirst)
    }

    pub fn from_array(a: [f64; 6], ordering: Ordering) -> Self {
        let first = Vec3::new(a[0], a[1], a[2]);
        let second = Vec3::new(a[3], a[4], a[5]);
        match ordering {
            Ordering::AngularFirst => Self::new(first, second, ordering),
            Ordering::LinearFirst => Self::new(second, first, ordering),
        }
    }

    /// Flattens according to the ordering tag.
    pub fn to_array(&self) -> [f64; 6] {
        let (a, b) = match self.ordering {
            Ordering::AngularFirst => (self.angular, self.linear),
            Ordering::LinearFirst => (self.linear, self.angular),
        };
        [a.x, a.y, a.z, b.x, b.y, b.z]
    }

    pub fn reorder(self, target: Ordering) -> Self {
        Self {
            ordering: target,
            ..self
        }
    }

    /// Reciprocal product; zero when a wrench does no work on a twist.
    pub fn pairing(&self, other: &Screw6) -> f64 {
        let a = self.to_array();
        let b = if other.ordering == self.ordering {
            other.to_array()
        } else {
            other.reorder(self.ordering).to_array()
        };
        a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
    }

    pub fn scale(self, s: f64) -> Self {
        Self {
            angular: self.angular * s,
            linear: self.linear * s,
            ordering: self.ordering,
        }
    }
}

/// Free function form of [`Screw6::reorder`].
pub fn reorder(t: Screw6, target: Ordering) -> Screw6 {
    t.reorder(target)
}
