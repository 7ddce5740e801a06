use super::ControlError;
use crate::arm_model::{TendonVector, SECTIONS, TENDONS_PER_SECTION};
use serde::{Deserialize, Serialize};

/// Ratio of executor size to demonstrator size. Uniform in the usual case; one
/// factor per section is accepted for executors that are not scaled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleMapping {
    factors: [f64; SECTIONS],
}

impl ScaleMapping {
    pub const IDENTITY: ScaleMapping = ScaleMapping { factors: [1.0; SECTIONS] };

    pub fn uniform(x: f64) -> Result<Self, ControlError> {
        Self::per_section([x; SECTIONS])
    }

    pub fn per_section(factors: [f64; SECTIONS]) -> Result<Self, ControlError> {
        for x in factors {
            if !(x.is_finite() && x > 0.0) {
                return Err(ControlError::InvalidScale(x));
            }
        }
        Ok(ScaleMapping { factors })
    }

    /// From executor and demonstrator total lengths.
    pub fn from_lengths(executor: f64, demonstrator: f64) -> Result<Self, ControlError> {
        Self::uniform(executor / demonstrator)
    }

    pub fn factors(&self) -> [f64; SECTIONS] {
        self.factors
    }

    /// The uniform factor, or `None` when sections scale differently.
    pub fn uniform_factor(&self) -> Option<f64> {
        let x = self.factors[0];
        self.factors.iter().all(|f| *f == x).then_some(x)
    }

    pub fn is_identity(&self) -> bool {
        self.factors == [1.0; SECTIONS]
    }
}

impl Default for ScaleMapping {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Scales every tendon displacement of section `i` by the section's factor. With
/// executor lengths and tendon radii scaled by the same factors, the executor
/// bends through exactly the demonstrator's angles.
pub fn map_tendons(demo: &TendonVector, mapping: &ScaleMapping) -> TendonVector {
    TendonVector(std::array::from_fn(|k| demo.0[k] * mapping.factors[k / TENDONS_PER_SECTION]))
}
