//! Geometry and kinematics of a three-section tendon-driven continuum arm.
//!
//! Every section is modeled as an inextensible circular arc (piecewise constant
//! curvature). A section's shape is the pair `(theta, phi)`: the total bend angle
//! and the azimuth of the bending plane in the section's base frame. Each section
//! is actuated by three tendons spaced 120 degrees apart at radius `R_T`.

mod geometry;
mod kinematics;
pub(crate) mod pcc;
mod tendon;
mod workspace;

pub use geometry::{DEMONSTRATOR_RADII, ArmGeometry, TendonLayout};
pub use kinematics::{forward_kinematics, point_at, ArmPose};
pub use tendon::{config_from_tendons, tendon_jacobian, tendon_lengths, Perception, TendonJacobian};
pub use workspace::{workspace_extents, WorkspaceExtents};

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::ops::{Index, IndexMut};

/// Number of arm sections.
pub const SECTIONS: usize = 3;
/// Tendons routed to each section.
pub const TENDONS_PER_SECTION: usize = 3;
/// Total tendon count.
pub const TENDONS: usize = SECTIONS * TENDONS_PER_SECTION;
/// Bend angle below which a section is treated as straight and its azimuth is pinned to 0.
pub const THETA_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("{what} must be finite and {requirement}, got {value}")]
    OutOfRange {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("section {section}: tendon azimuths must be 120 degrees apart")]
    TendonSpacing { section: usize },
    #[error("load at arc length {s} m lies outside the arm (length {length} m)")]
    LoadOutsideArm { s: f64, length: f64 },
    #[error("workspace sampling needs at least 1000 samples, got {0}")]
    TooFewSamples(usize),
}

pub(crate) fn check(what: &'static str, requirement: &'static str, value: f64, ok: bool) -> Result<(), ModelError> {
    if value.is_finite() && ok {
        Ok(())
    } else {
        Err(ModelError::OutOfRange { what, requirement, value })
    }
}

/// Wrap an angle into `[0, 2pi)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Signed shortest angular difference `a - b` in `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// Shape of one constant-curvature section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionState {
    theta: f64,
    phi: f64,
}

impl SectionState {
    pub const STRAIGHT: SectionState = SectionState { theta: 0.0, phi: 0.0 };

    /// Builds a canonical section state. A negative bend is folded into the
    /// azimuth, the azimuth is wrapped into `[0, 2pi)` and pinned to 0 when the
    /// section is straight.
    pub fn new(theta: f64, phi: f64) -> Self {
        let (theta, phi) = if theta < 0.0 {
            (-theta, phi + std::f64::consts::PI)
        } else {
            (theta, phi)
        };
        if theta < THETA_EPS {
            SectionState { theta, phi: 0.0 }
        } else {
            SectionState {
                theta,
                phi: wrap_angle(phi),
            }
        }
    }

    /// Inverse of [`SectionState::bending_coords`].
    pub fn from_bending_coords(bx: f64, by: f64) -> Self {
        let theta = bx.hypot(by);
        if theta < THETA_EPS {
            SectionState { theta, phi: 0.0 }
        } else {
            SectionState::new(theta, by.atan2(bx))
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Cartesian bending coordinates `(theta cos phi, theta sin phi)`, free of the
    /// azimuth singularity at the straight configuration.
    pub fn bending_coords(&self) -> [f64; 2] {
        let (s, c) = self.phi.sin_cos();
        [self.theta * c, self.theta * s]
    }

    /// Clamps the bend angle to `theta_max`, keeping the azimuth.
    pub fn saturated(self, theta_max: f64) -> Self {
        if self.theta > theta_max {
            SectionState { theta: theta_max, phi: self.phi }
        } else {
            self
        }
    }
}

impl Default for SectionState {
    fn default() -> Self {
        Self::STRAIGHT
    }
}

/// Configuration of the whole arm, sections ordered base to tip.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ArmConfig {
    pub sections: [SectionState; SECTIONS],
}

impl ArmConfig {
    pub const STRAIGHT: ArmConfig = ArmConfig {
        sections: [SectionState::STRAIGHT; SECTIONS],
    };

    pub fn new(sections: [SectionState; SECTIONS]) -> Self {
        ArmConfig { sections }
    }

    /// Builds a configuration from `(theta, phi)` pairs.
    pub fn from_angles(angles: [(f64, f64); SECTIONS]) -> Self {
        ArmConfig {
            sections: angles.map(|(t, p)| SectionState::new(t, p)),
        }
    }

    /// Stacked bending coordinates `(bx1, by1, bx2, by2, bx3, by3)`.
    pub fn bending_coords(&self) -> [f64; 2 * SECTIONS] {
        let mut q = [0.0; 2 * SECTIONS];
        for (i, s) in self.sections.iter().enumerate() {
            let [bx, by] = s.bending_coords();
            q[2 * i] = bx;
            q[2 * i + 1] = by;
        }
        q
    }

    pub fn from_bending_coords(q: &[f64; 2 * SECTIONS]) -> Self {
        ArmConfig {
            sections: std::array::from_fn(|i| SectionState::from_bending_coords(q[2 * i], q[2 * i + 1])),
        }
    }

    pub fn thetas(&self) -> [f64; SECTIONS] {
        self.sections.map(|s| s.theta)
    }

    pub fn phis(&self) -> [f64; SECTIONS] {
        self.sections.map(|s| s.phi)
    }

    pub fn validate(&self, geom: &ArmGeometry) -> Result<(), ModelError> {
        for s in &self.sections {
            check("bend angle", "within [0, theta_max]", s.theta, s.theta <= geom.theta_max() + 1e-12)?;
            check("azimuth", "within [0, 2pi)", s.phi, (0.0..TAU).contains(&s.phi))?;
        }
        Ok(())
    }
}

/// Nine tendon length displacements in meters, ordered (section, tendon).
/// Negative values mean the tendon is shortened (pulled in).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TendonVector(pub [f64; TENDONS]);

impl TendonVector {
    pub const ZERO: TendonVector = TendonVector([0.0; TENDONS]);

    pub fn section(&self, section: usize) -> [f64; TENDONS_PER_SECTION] {
        let base = section * TENDONS_PER_SECTION;
        [self.0[base], self.0[base + 1], self.0[base + 2]]
    }

    pub fn section_sum(&self, section: usize) -> f64 {
        self.section(section).iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> TendonVector {
        TendonVector(self.0.map(|d| d * factor))
    }

    pub fn as_array(&self) -> &[f64; TENDONS] {
        &self.0
    }
}

impl Index<(usize, usize)> for TendonVector {
    type Output = f64;

    fn index(&self, (section, tendon): (usize, usize)) -> &f64 {
        &self.0[section * TENDONS_PER_SECTION + tendon]
    }
}

impl IndexMut<(usize, usize)> for TendonVector {
    fn index_mut(&mut self, (section, tendon): (usize, usize)) -> &mut f64 {
        &mut self.0[section * TENDONS_PER_SECTION + tendon]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn negative_bend_folds_into_azimuth() {
        let s = SectionState::new(-0.4, 0.25);
        assert_eq!(s.theta(), 0.4);
        assert!((s.phi() - (0.25 + PI)).abs() < 1e-15);
    }

    #[test]
    fn straight_section_pins_azimuth() {
        assert_eq!(SectionState::new(1e-10, 2.0).phi(), 0.0);
        assert_eq!(SectionState::from_bending_coords(0.0, 0.0), SectionState::STRAIGHT);
    }

    #[test]
    fn bending_coords_round_trip() {
        let s = SectionState::new(0.7, 5.5);
        let [bx, by] = s.bending_coords();
        let back = SectionState::from_bending_coords(bx, by);
        assert!((back.theta() - 0.7).abs() < 1e-15);
        assert!(angle_diff(back.phi(), 5.5).abs() < 1e-14);
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(TAU), 0.0);
        assert!(wrap_angle(-1e-18) < TAU);
        assert!((angle_diff(0.1, TAU - 0.1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn tendon_vector_indexing() {
        let mut t = TendonVector::ZERO;
        t[(1, 2)] = 3.0;
        assert_eq!(t.0[5], 3.0);
        assert_eq!(t.section(1), [0.0, 0.0, 3.0]);
    }
}
