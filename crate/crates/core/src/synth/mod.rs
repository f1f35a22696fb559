//! Synthetic robot- and human-style runs for the four tasks.

mod generator;
mod profile;
mod template;

pub use generator::{generate_dataset, generate_run, DatasetSpec, RunCount, DEFAULT_DURATION_S, GRAVITY};
pub use profile::{trapezoid_velocity, MotionProfile};
pub use template::{StochasticityConfig, SubjectVariation, TaskTemplate, MAX_RPM, MIN_RPM};
