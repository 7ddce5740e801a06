//! Quasi-static balance of a tendon-driven arm.
//!
//! Tendon tensions, gravity, elastic restoring moments, external point loads and
//! the optional profile-dependent restoring moment are all conservative, so the
//! section moments are generalized forces of one potential energy expressed in
//! the bending coordinates `(theta cos phi, theta sin phi)`. Friction acts on the
//! individual tendon channels and decides whether a channel sticks or slips.

mod backdrive;
mod friction;
mod moments;
pub(crate) mod potential;
mod solver;

pub use backdrive::{backdrive_step, hold_check, hold_check_with_stiffness, ArmState, BackdriveParams, HoldReport};
pub use friction::{actuation_force, kinetic_friction, kinetic_friction_from_current, static_friction_limit};
pub use moments::{elastic_moment, gravity_moment, load_moment, residual_moments, tendon_moment};
pub use solver::{solve_equilibrium, solve_equilibrium_with, IterationRecord, SolverOptions};

use crate::arm_model::{ArmConfig, ArmGeometry, ModelError, SECTIONS, TENDONS};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StaticsError {
    #[error("motor current must be finite and non-negative, got {0} A")]
    NegativeCurrent(f64),
    #[error("tendon force must be finite and non-negative, got {0} N")]
    NegativeForce(f64),
    #[error("kinetic friction needs a moving tendon (velocity was zero)")]
    ZeroVelocity,
    #[error("time step must lie in (0, 0.1] s, got {0}")]
    InvalidTimeStep(f64),
    #[error("invalid friction parameters: {0}")]
    InvalidFriction(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Coefficients of the current-dependent friction model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrictionParams {
    /// Static friction coefficient.
    pub mu_s: f64,
    /// Kinetic friction coefficient.
    pub mu_k: f64,
    /// Weight of the tendon tension in the static limit.
    pub alpha: f64,
    /// Weight of the actuation force in the static limit.
    pub beta: f64,
    /// Actuation gain, N/A.
    pub k_act: f64,
    /// Actuation offset, N.
    pub c_act: f64,
    /// Kinetic friction gain on current, N/A.
    pub k_kf: f64,
    /// Kinetic friction offset, N.
    pub c_kf: f64,
}

impl Default for FrictionParams {
    fn default() -> Self {
        FrictionParams {
            mu_s: 0.3,
            mu_k: 0.2,
            alpha: 0.5,
            beta: 0.5,
            k_act: 20.0,
            c_act: 0.5,
            // mu_k * k_act and mu_k * c_act: the current-only form with the tension
            // contribution folded into the offset at zero tension
            k_kf: 4.0,
            c_kf: 0.1,
        }
    }
}

impl FrictionParams {
    /// The same parameters with both friction coefficients zeroed.
    pub fn frictionless(&self) -> Self {
        FrictionParams {
            mu_s: 0.0,
            mu_k: 0.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), StaticsError> {
        let finite = [self.mu_s, self.mu_k, self.alpha, self.beta, self.k_act, self.c_act, self.k_kf, self.c_kf]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(StaticsError::InvalidFriction("all coefficients must be finite"));
        }
        if !(self.mu_s >= self.mu_k && self.mu_k >= 0.0) {
            return Err(StaticsError::InvalidFriction("need mu_s >= mu_k >= 0"));
        }
        if !((0.0..=1.0).contains(&self.alpha) && (0.0..=1.0).contains(&self.beta)) {
            return Err(StaticsError::InvalidFriction("alpha and beta must lie in [0, 1]"));
        }
        if !(self.k_act > 0.0 && self.c_act >= 0.0 && self.k_kf >= 0.0 && self.c_kf >= 0.0) {
            return Err(StaticsError::InvalidFriction("need k_act > 0 and non-negative offsets"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    #[default]
    Stuck,
    Slipping,
}

/// Bookkeeping for one tendon channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TendonChannelState {
    /// Tendon tension, N. Never negative.
    pub tension: f64,
    /// Motor current, A.
    pub current: f64,
    /// Tendon velocity, m/s. Zero exactly when stuck.
    pub velocity: f64,
    pub regime: Regime,
    /// Accumulated length displacement, m.
    pub displacement: f64,
    /// The demanded tension was negative and has been clamped to zero.
    pub slack: bool,
}

impl TendonChannelState {
    pub fn with_tension(tension: f64) -> Self {
        TendonChannelState {
            tension,
            ..Default::default()
        }
    }
}

/// A constant force applied at arc length `s` along the centerline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExternalLoad {
    /// Arc-length coordinate from the base, m.
    pub s: f64,
    /// Force in the base frame, N.
    pub force: Vector3<f64>,
}

impl ExternalLoad {
    pub fn new(s: f64, force: Vector3<f64>) -> Self {
        ExternalLoad { s, force }
    }

    pub fn at_tip(geom: &ArmGeometry, force: Vector3<f64>) -> Self {
        ExternalLoad {
            s: geom.total_length(),
            force,
        }
    }

    pub fn validate(&self, geom: &ArmGeometry) -> Result<(), ModelError> {
        let length = geom.total_length();
        if !(self.s.is_finite() && (0.0..=length + 1e-12).contains(&self.s)) {
            return Err(ModelError::LoadOutsideArm { s: self.s, length });
        }
        for f in self.force.iter() {
            crate::arm_model::check("load component", "finite", *f, true)?;
        }
        Ok(())
    }
}

/// A section bending moment in the tendon-moment basis.
///
/// Component `0` is conjugate to `theta sin(phi)` and component `1` to
/// `theta cos(phi)`; a tendon at azimuth `a` and radius `R` pulling with force
/// `F` contributes `F R (sin a, cos a)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BendingMoment(pub [f64; 2]);

impl BendingMoment {
    pub const ZERO: BendingMoment = BendingMoment([0.0; 2]);

    /// From generalized forces conjugate to `(theta cos phi, theta sin phi)`.
    pub fn from_generalized(gx: f64, gy: f64) -> Self {
        BendingMoment([gy, gx])
    }

    /// Generalized forces conjugate to `(theta cos phi, theta sin phi)`.
    pub fn generalized(&self) -> [f64; 2] {
        [self.0[1], self.0[0]]
    }

    pub fn norm(&self) -> f64 {
        self.0[0].hypot(self.0[1])
    }
}

impl std::ops::Add for BendingMoment {
    type Output = BendingMoment;

    fn add(self, rhs: BendingMoment) -> BendingMoment {
        BendingMoment([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1]])
    }
}

pub type SectionMoments = [BendingMoment; SECTIONS];

/// Additional per-section linear restoring stiffness supplied by the controller.
pub trait StiffnessHook {
    /// Extra bending stiffness per section, N m / rad.
    fn extra_stiffness(&self) -> [f64; SECTIONS];

    /// Restoring moment `-k theta` opposing each section's bend.
    fn moment(&self, config: &ArmConfig) -> SectionMoments {
        let k = self.extra_stiffness();
        std::array::from_fn(|i| {
            let [bx, by] = config.sections[i].bending_coords();
            BendingMoment::from_generalized(-k[i] * bx, -k[i] * by)
        })
    }
}

/// No controller stiffness.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoStiffness;

impl StiffnessHook for NoStiffness {
    fn extra_stiffness(&self) -> [f64; SECTIONS] {
        [0.0; SECTIONS]
    }
}

impl StiffnessHook for [f64; SECTIONS] {
    fn extra_stiffness(&self) -> [f64; SECTIONS] {
        *self
    }
}

/// Outcome of [`solve_equilibrium`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub config: ArmConfig,
    /// Norm of the net section moment at `config`, N m.
    pub residuals: [f64; SECTIONS],
    /// Tendon tensions used in the balance, N.
    pub tensions: [f64; TENDONS],
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

impl EquilibriumResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}
