//! Workspace analysis and design optimization for 1T2R parallel manipulators.

pub mod homojac;
pub mod mechanisms;
pub mod optimize;
pub mod screwcore;
pub mod verify;
pub mod workspace;
