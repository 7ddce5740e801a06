//! The declarative run configuration, read from TOML. Angles are in degrees.

use super::load_path::{LoadScript, Plane, Shape};
use super::HarnessError;
use crate::arm_model::{ArmGeometry, TendonLayout, DEMONSTRATOR_RADII, SECTIONS, TENDONS_PER_SECTION};
use crate::statics::{BackdriveParams, ExternalLoad, FrictionParams};
use crate::teleop::{Endpoint, SessionConfig, SessionMode};
use crate::twin_control::{LevelMap, ScaleMapping, StiffnessProfile, TrackingParams};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmSection {
    pub lengths: [f64; SECTIONS],
    pub masses: [f64; SECTIONS],
    pub tip_mass: f64,
    pub bend_stiffness: [f64; SECTIONS],
    pub tendon_radii: [f64; SECTIONS],
    pub tendon_azimuths_deg: [[f64; TENDONS_PER_SECTION]; SECTIONS],
    pub gravity: [f64; 3],
    pub theta_max_deg: f64,
}

impl Default for ArmSection {
    fn default() -> Self {
        let g = ArmGeometry::demonstrator();
        ArmSection {
            lengths: g.lengths,
            masses: g.masses,
            tip_mass: g.tip_mass,
            bend_stiffness: g.bend_stiffness,
            tendon_radii: DEMONSTRATOR_RADII,
            tendon_azimuths_deg: g.layout.azimuths().map(|row| row.map(f64::to_degrees)),
            gravity: g.gravity.into(),
            theta_max_deg: g.theta_max.to_degrees(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutorSection {
    /// Executor to demonstrator size ratio.
    pub scale: f64,
    /// Overrides `scale` with one factor per section.
    pub per_section: Option<[f64; SECTIONS]>,
}

impl Default for ExecutorSection {
    fn default() -> Self {
        ExecutorSection {
            scale: 0.98 / 0.60,
            per_section: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackdriveSection {
    pub mobility: f64,
    pub max_substep: f64,
}

impl Default for BackdriveSection {
    fn default() -> Self {
        let p = BackdriveParams::default();
        BackdriveSection {
            mobility: p.mobility,
            max_substep: p.max_substep,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StiffnessSection {
    /// Profile name, base to tip, e.g. "LHH".
    pub profile: String,
    pub current_low: f64,
    pub current_high: f64,
    pub stiffness_low: f64,
    pub stiffness_high: f64,
}

impl Default for StiffnessSection {
    fn default() -> Self {
        let p = StiffnessProfile::default();
        StiffnessSection {
            profile: p.name(),
            current_low: p.currents.low,
            current_high: p.currents.high,
            stiffness_low: p.stiffness.low,
            stiffness_high: p.stiffness.high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionSection {
    pub rate_hz: f64,
    /// Standard deviation of the tendon length encoder noise, m.
    pub encoder_noise: f64,
    /// `None` for an in-process link, otherwise a TCP listen address.
    pub tcp: Option<String>,
}

impl Default for SessionSection {
    fn default() -> Self {
        SessionSection {
            rate_hz: 100.0,
            encoder_noise: 1e-5,
            tcp: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadSection {
    pub plane: Plane,
    /// Hand path radius, m.
    pub amplitude: f64,
    pub period: f64,
    /// Application point as arc length, m. Defaults to the tip.
    pub s: Option<f64>,
    /// N/m.
    pub drag_stiffness: f64,
    /// Static tip force for the stiffness experiment, N.
    pub tip_force: [f64; 3],
}

impl Default for LoadSection {
    fn default() -> Self {
        LoadSection {
            plane: Plane::Xy,
            amplitude: 0.075,
            period: 8.0,
            s: None,
            drag_stiffness: 12.0,
            tip_force: [0.5, 0.0, 0.0],
        }
    }
}

/// Phase durations of the gap scenario, s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapSection {
    pub entry: f64,
    pub lateral_search: f64,
    pub rotational_search: f64,
    pub retraction: f64,
}

impl Default for GapSection {
    fn default() -> Self {
        GapSection {
            entry: 15.0,
            lateral_search: 2.0,
            rotational_search: 10.0,
            retraction: 5.0,
        }
    }
}

impl GapSection {
    pub fn durations(&self) -> [f64; 4] {
        [self.entry, self.lateral_search, self.rotational_search, self.retraction]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwinConfig {
    /// Seeds the encoder noise.
    pub seed: u64,
    pub arm: ArmSection,
    pub executor: ExecutorSection,
    pub friction: FrictionParams,
    pub backdrive: BackdriveSection,
    pub stiffness: StiffnessSection,
    pub tracking: TrackingParams,
    pub session: SessionSection,
    pub load: LoadSection,
    pub gap: GapSection,
}

impl Default for TwinConfig {
    fn default() -> Self {
        TwinConfig {
            seed: 7,
            arm: ArmSection::default(),
            executor: ExecutorSection::default(),
            friction: FrictionParams::default(),
            backdrive: BackdriveSection::default(),
            stiffness: StiffnessSection::default(),
            tracking: TrackingParams::default(),
            session: SessionSection::default(),
            load: LoadSection::default(),
            gap: GapSection::default(),
        }
    }
}

fn invalid(message: impl Into<String>) -> HarnessError {
    HarnessError::Validation(message.into())
}

impl TwinConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: TwinConfig = toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    /// Checks every derived object, so that a loaded config cannot fail later.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let demo = self.demo_geometry()?;
        self.exec_geometry()?.validate()?;
        self.mapping()?;
        self.profile()?;
        self.friction.validate()?;
        self.tracking.validate()?;
        self.session_config()?.validate()?;
        self.load_script(Shape::Circle)?.validate()?;
        self.tip_load()?.validate(&demo)?;
        let bd = &self.backdrive;
        if !(bd.mobility.is_finite() && bd.mobility >= 0.0) || !(bd.max_substep > 0.0 && bd.max_substep <= 0.1) {
            return Err(invalid("backdrive: mobility must be >= 0 and max_substep in (0, 0.1]"));
        }
        if !(self.session.encoder_noise.is_finite() && self.session.encoder_noise >= 0.0) {
            return Err(invalid("session: encoder_noise must be non-negative"));
        }
        if self.gap.durations().iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(invalid("gap: phase durations must be positive"));
        }
        Ok(())
    }

    pub fn demo_geometry(&self) -> Result<ArmGeometry, HarnessError> {
        let a = &self.arm;
        let geom = ArmGeometry {
            lengths: a.lengths,
            masses: a.masses,
            tip_mass: a.tip_mass,
            bend_stiffness: a.bend_stiffness,
            layout: TendonLayout::new(a.tendon_azimuths_deg.map(|row| row.map(f64::to_radians)), a.tendon_radii)?,
            gravity: Vector3::from(a.gravity),
            theta_max: a.theta_max_deg.to_radians(),
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn mapping(&self) -> Result<ScaleMapping, HarnessError> {
        Ok(match self.executor.per_section {
            Some(f) => ScaleMapping::per_section(f)?,
            None => ScaleMapping::uniform(self.executor.scale)?,
        })
    }

    /// The demonstrator scaled by the mapping.
    pub fn exec_geometry(&self) -> Result<ArmGeometry, HarnessError> {
        Ok(self.demo_geometry()?.scaled_per_section(self.mapping()?.factors()))
    }

    pub fn profile(&self) -> Result<StiffnessProfile, HarnessError> {
        let s = &self.stiffness;
        let levels = s
            .profile
            .parse::<StiffnessProfile>()
            .map_err(|e| invalid(e.to_string()))?
            .levels;
        Ok(StiffnessProfile::with_maps(
            levels,
            LevelMap {
                low: s.current_low,
                high: s.current_high,
            },
            LevelMap {
                low: s.stiffness_low,
                high: s.stiffness_high,
            },
        )?)
    }

    /// Backdrive parameters with the profile's controller stiffness.
    pub fn backdrive_params(&self, profile: &StiffnessProfile) -> BackdriveParams {
        BackdriveParams {
            friction: self.friction,
            mobility: self.backdrive.mobility,
            max_substep: self.backdrive.max_substep,
            extra_stiffness: crate::statics::StiffnessHook::extra_stiffness(profile),
        }
    }

    pub fn session_config(&self) -> Result<SessionConfig, HarnessError> {
        let cfg = SessionConfig {
            rate_hz: self.session.rate_hz,
            mapping: self.mapping()?,
            profile: self.profile()?,
            tracking: self.tracking,
            endpoint: match &self.session.tcp {
                Some(addr) => Endpoint::Tcp(addr.clone()),
                None => Endpoint::Loopback,
            },
            mode: SessionMode::Lockstep,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_script(&self, shape: Shape) -> Result<LoadScript, HarnessError> {
        let l = &self.load;
        let script = LoadScript {
            shape,
            plane: l.plane,
            amplitude: l.amplitude,
            period: l.period,
            s: l.s.unwrap_or(self.arm.lengths.iter().sum()),
            drag_stiffness: l.drag_stiffness,
        };
        script.validate()?;
        Ok(script)
    }

    pub fn tip_load(&self) -> Result<ExternalLoad, HarnessError> {
        Ok(ExternalLoad::at_tip(&self.demo_geometry()?, Vector3::from(self.load.tip_force)))
    }
}
