//! Demonstrator to executor mapping, stiffness profiles, executor tracking and
//! the trajectory deviation metric.

mod mapping;
mod metrics;
mod profile;
mod tracking;

pub use mapping::{map_tendons, ScaleMapping};
pub use metrics::{deviation_metrics, AxisDeviation, DeviationReport, MetricsError, TimedPosition};
pub use profile::{apply_stiffness_profile, stiffness_moment, LevelMap, ProfileParseError, StiffnessLevel, StiffnessProfile};
pub use tracking::{executor_track, TrackingParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("scale factor must be finite and positive, got {0}")]
    InvalidScale(f64),
    #[error("time step must be finite and positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("invalid tracking parameters: {0}")]
    InvalidTracking(&'static str),
    #[error("invalid stiffness levels: {0}")]
    InvalidProfile(&'static str),
}
