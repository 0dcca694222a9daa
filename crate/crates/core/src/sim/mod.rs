//! Closed-loop two-car race simulation.

pub mod config;
pub mod control;
pub mod crash;
pub mod ftg;
pub mod observe;
pub mod race;
pub mod vehicle;

pub use config::{Behavior, PlannerKind, RaceConfig};
pub use race::{measure_smax, run_race, RaceOutcome, RaceRun, RaceSetup};
