//! JSON messages exchanged with the operator console.

use crate::arm_model::{ArmConfig, SECTIONS};
use crate::twin_control::{ScaleMapping, StiffnessProfile};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmSnapshot {
    pub theta: [f64; SECTIONS],
    pub phi: [f64; SECTIONS],
    /// Tip position in the arm's base frame, m.
    pub tip: [f64; 3],
}

impl ArmSnapshot {
    pub fn new(config: &ArmConfig, tip: [f64; 3]) -> Self {
        ArmSnapshot {
            theta: config.thetas(),
            phi: config.phis(),
            tip,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AxisTriple {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for AxisTriple {
    fn from(v: [f64; 3]) -> Self {
        AxisTriple { x: v[0], y: v[1], z: v[2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    pub t_us: u64,
    pub seq: u32,
    pub demo: ArmSnapshot,
    pub exec: ArmSnapshot,
    /// Running per-axis deviation, percent.
    pub deviation: AxisTriple,
    pub profile: String,
    pub scale: f64,
    /// Whether friction alone holds the demonstrator's current shape.
    pub held: bool,
}

/// Server to console.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConsoleOutbound {
    State(StateMessage),
    Error { message: String },
}

/// Console to server, as sent on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConsoleInbound {
    /// Virtual load at arc length `s` (m) with force components in N.
    Load { s: f64, fx: f64, fy: f64, fz: f64 },
    Profile { name: String },
    Scale { x: f64 },
}

/// A validated console request.
#[derive(Debug, Clone, PartialEq)]
pub enum ConsoleCommand {
    /// `None` releases the load.
    Load(Option<(f64, [f64; 3])>),
    Profile(StiffnessProfile),
    Scale(ScaleMapping),
}

#[derive(Debug, thiserror::Error)]
pub enum ConsoleError {
    #[error("malformed console message: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

/// Parses and validates one inbound message.
pub fn parse_inbound(text: &str) -> Result<ConsoleCommand, ConsoleError> {
    match serde_json::from_str::<ConsoleInbound>(text)? {
        ConsoleInbound::Load { s, fx, fy, fz } => {
            if ![s, fx, fy, fz].iter().all(|v| v.is_finite()) || s < 0.0 {
                return Err(ConsoleError::Invalid("load fields must be finite and s non-negative".into()));
            }
            let f = [fx, fy, fz];
            Ok(ConsoleCommand::Load((f != [0.0; 3]).then_some((s, f))))
        }
        ConsoleInbound::Profile { name } => name
            .parse()
            .map(ConsoleCommand::Profile)
            .map_err(|e: crate::twin_control::ProfileParseError| ConsoleError::Invalid(e.to_string())),
        ConsoleInbound::Scale { x } => ScaleMapping::uniform(x)
            .map(ConsoleCommand::Scale)
            .map_err(|e| ConsoleError::Invalid(e.to_string())),
    }
}

impl ConsoleOutbound {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("console messages always serialize")
    }

    pub fn error(message: impl Into<String>) -> Self {
        ConsoleOutbound::Error { message: message.into() }
    }
}
