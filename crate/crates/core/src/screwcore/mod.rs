//! Fixed-size screw algebra and small dense linear algebra.
//!
//! Everything here is a pure function on value types. Matrices never exceed
//! 9x9 in this crate, so dimensions are compile-time constants.

mod mat;
mod screw;
mod vec3;

pub use mat::{
    block_invert, cond2, det3, invert6, nullspace_small, skew, BlockInverse, Cond2, LinalgError,
    Mat, Mat3, Mat6, PIVOT_TOL,
};
pub use screw::{reorder, Ordering, Screw6};
pub use vec3::Vec3;
