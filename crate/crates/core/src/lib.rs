//! Overtaking planners for autonomous racing in the Frenet frame.

pub mod collision;
pub mod gp;
pub mod lines;
pub mod planner;
pub mod qp;
pub mod sim;
pub mod spline;
pub mod track;
pub mod tracks;

pub use lines::{LineKind, RacingLine, VehicleLimits};
pub use track::{CartesianPose, FrenetState, TrackError, TrackModel};
