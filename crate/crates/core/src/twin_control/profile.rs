use super::ControlError;
use crate::arm_model::{ArmConfig, SECTIONS, TENDONS, TENDONS_PER_SECTION};
use crate::statics::{SectionMoments, StiffnessHook};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StiffnessLevel {
    Low,
    High,
}

impl StiffnessLevel {
    fn letter(self) -> char {
        match self {
            StiffnessLevel::Low => 'L',
            StiffnessLevel::High => 'H',
        }
    }
}

/// A value for each stiffness level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelMap {
    pub low: f64,
    pub high: f64,
}

impl LevelMap {
    pub fn get(&self, level: StiffnessLevel) -> f64 {
        match level {
            StiffnessLevel::Low => self.low,
            StiffnessLevel::High => self.high,
        }
    }
}

/// Per-section Low/High assignment, named base to tip (`LLL` ... `HHH`).
///
/// A level sets both the motor current of the section's tendons (raising the
/// friction limits) and a virtual restoring stiffness fed to the equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessProfile {
    pub levels: [StiffnessLevel; SECTIONS],
    /// Motor current per level, A.
    pub currents: LevelMap,
    /// Virtual bending stiffness per level, N m / rad.
    pub stiffness: LevelMap,
}

pub const DEFAULT_CURRENTS: LevelMap = LevelMap { low: 0.1, high: 0.6 };
pub const DEFAULT_STIFFNESS: LevelMap = LevelMap { low: 0.0, high: 0.8 };

impl StiffnessProfile {
    pub fn new(levels: [StiffnessLevel; SECTIONS]) -> Self {
        StiffnessProfile {
            levels,
            currents: DEFAULT_CURRENTS,
            stiffness: DEFAULT_STIFFNESS,
        }
    }

    pub fn with_maps(levels: [StiffnessLevel; SECTIONS], currents: LevelMap, stiffness: LevelMap) -> Result<Self, ControlError> {
        if !(currents.low.is_finite() && currents.high.is_finite() && currents.high > currents.low && currents.low >= 0.0) {
            return Err(ControlError::InvalidProfile("need I_high > I_low >= 0"));
        }
        if !(stiffness.low.is_finite() && stiffness.high.is_finite() && stiffness.high > stiffness.low && stiffness.low >= 0.0)
        {
            return Err(ControlError::InvalidProfile("need k_high > k_low >= 0"));
        }
        Ok(StiffnessProfile { levels, currents, stiffness })
    }

    /// Same level maps, different levels.
    pub fn with_levels(&self, levels: [StiffnessLevel; SECTIONS]) -> Self {
        StiffnessProfile { levels, ..*self }
    }

    /// All eight profiles in binary order, `LLL` first.
    pub fn all() -> [StiffnessProfile; 8] {
        std::array::from_fn(|n| {
            let bit = |b: usize| if n >> (2 - b) & 1 == 1 { StiffnessLevel::High } else { StiffnessLevel::Low };
            StiffnessProfile::new([bit(0), bit(1), bit(2)])
        })
    }

    pub fn name(&self) -> String {
        self.levels.iter().map(|l| l.letter()).collect()
    }

    /// Whether every section of `self` is at least as stiff as in `other`.
    pub fn dominates(&self, other: &StiffnessProfile) -> bool {
        self.levels
            .iter()
            .zip(&other.levels)
            .all(|(a, b)| !(*a == StiffnessLevel::Low && *b == StiffnessLevel::High))
    }
}

impl Default for StiffnessProfile {
    fn default() -> Self {
        StiffnessProfile::new([StiffnessLevel::Low; SECTIONS])
    }
}

impl fmt::Display for StiffnessProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("stiffness profile must be three letters from {{L, H}}, got {0:?}")]
pub struct ProfileParseError(pub String);

impl FromStr for StiffnessProfile {
    type Err = ProfileParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let letters: Vec<char> = s.trim().chars().collect();
        if letters.len() != SECTIONS {
            return Err(ProfileParseError(s.to_string()));
        }
        let mut levels = [StiffnessLevel::Low; SECTIONS];
        for (level, c) in levels.iter_mut().zip(letters) {
            *level = match c.to_ascii_uppercase() {
                'L' => StiffnessLevel::Low,
                'H' => StiffnessLevel::High,
                _ => return Err(ProfileParseError(s.to_string())),
            };
        }
        Ok(StiffnessProfile::new(levels))
    }
}

impl StiffnessHook for StiffnessProfile {
    fn extra_stiffness(&self) -> [f64; SECTIONS] {
        self.levels.map(|l| self.stiffness.get(l))
    }
}

/// Motor currents realizing a profile: all three tendons of section `i` get the
/// current of that section's level.
pub fn apply_stiffness_profile(profile: &StiffnessProfile) -> [f64; TENDONS] {
    std::array::from_fn(|k| profile.currents.get(profile.levels[k / TENDONS_PER_SECTION]))
}

/// Profile-induced restoring moment `-k_stiff(level_i) theta_i` per section.
pub fn stiffness_moment(config: &ArmConfig, profile: &StiffnessProfile) -> SectionMoments {
    StiffnessHook::moment(profile, config)
}
