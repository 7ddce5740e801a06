//! Headless experiment driver: load scripts, the trajectory, stiffness and gap
//! scenarios, and their CSV / JSON outputs.

mod config;
mod experiment;
mod load_path;
mod output;

pub use config::{
    ArmSection, BackdriveSection, ExecutorSection, GapSection, LoadSection, SessionSection, StiffnessSection, TwinConfig,
};
pub use experiment::{
    run_gap_scenario, run_stiffness_experiment, run_trajectory_experiment, GapLog, GapPhase, GapSample, PhaseRecord,
    StiffnessRow, TrajectoryRun, GAP_SCHEDULE,
};
pub use load_path::{generate_load_path, LoadScript, Plane, Shape};
pub use output::{
    write_deviation_table, write_gap_log, write_manifest, write_stiffness_table, write_trajectories, RunManifest,
};

use crate::arm_model::ModelError;
use crate::statics::StaticsError;
use crate::teleop::{SessionError, TraceError};
use crate::twin_control::{ControlError, MetricsError};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Statics(#[from] StaticsError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("stiffness schedule violated: {0}")]
    Schedule(String),
}

impl HarnessError {
    /// Bad input: configuration, arguments or trace contents.
    pub fn is_validation(&self) -> bool {
        match self {
            HarnessError::Validation(_)
            | HarnessError::Model(_)
            | HarnessError::Statics(_)
            | HarnessError::Control(_)
            | HarnessError::Metrics(_) => true,
            HarnessError::Session(e) => matches!(e, SessionError::InvalidConfig(_)),
            HarnessError::Trace(e) => matches!(e, TraceError::Malformed { .. }),
            _ => false,
        }
    }

    /// Socket or file failure.
    pub fn is_transport(&self) -> bool {
        match self {
            HarnessError::Io(_) => true,
            HarnessError::Session(e) => matches!(e, SessionError::Transport { .. }),
            HarnessError::Trace(e) => matches!(e, TraceError::Io(_)),
            _ => false,
        }
    }
}
