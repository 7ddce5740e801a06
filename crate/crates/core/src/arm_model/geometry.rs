use super::{check, wrap_angle, ModelError, SECTIONS, TENDONS_PER_SECTION};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Tendon routing of the three sections: azimuths in each section's base frame
/// and the pitch radius at which the tendons run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TendonLayout {
    azimuths: [[f64; TENDONS_PER_SECTION]; SECTIONS],
    radii: [f64; SECTIONS],
}

impl TendonLayout {
    pub fn new(azimuths: [[f64; TENDONS_PER_SECTION]; SECTIONS], radii: [f64; SECTIONS]) -> Result<Self, ModelError> {
        for (i, row) in azimuths.iter().enumerate() {
            let mut sorted = row.map(wrap_angle);
            sorted.sort_by(f64::total_cmp);
            let gaps = [sorted[1] - sorted[0], sorted[2] - sorted[1], sorted[0] + TAU - sorted[2]];
            if gaps.iter().any(|g| (g - TAU / 3.0).abs() > 1e-12) {
                return Err(ModelError::TendonSpacing { section: i });
            }
        }
        for r in radii {
            check("tendon radius", "positive", r, r > 0.0)?;
        }
        Ok(TendonLayout {
            azimuths: azimuths.map(|row| row.map(wrap_angle)),
            radii,
        })
    }

    /// Sections I and III at 60/180/300 degrees, section II at 0/120/240 degrees.
    pub fn with_radii(radii: [f64; SECTIONS]) -> Result<Self, ModelError> {
        let odd = [60f64, 180.0, 300.0].map(f64::to_radians);
        let even = [0f64, 120.0, 240.0].map(f64::to_radians);
        Self::new([odd, even, odd], radii)
    }

    pub fn azimuths(&self) -> &[[f64; TENDONS_PER_SECTION]; SECTIONS] {
        &self.azimuths
    }

    pub fn azimuth(&self, section: usize, tendon: usize) -> f64 {
        self.azimuths[section][tendon]
    }

    pub fn radii(&self) -> &[f64; SECTIONS] {
        &self.radii
    }

    pub fn radius(&self, section: usize) -> f64 {
        self.radii[section]
    }

    pub fn scaled(&self, factors: [f64; SECTIONS]) -> TendonLayout {
        TendonLayout {
            azimuths: self.azimuths,
            radii: std::array::from_fn(|i| self.radii[i] * factors[i]),
        }
    }
}

/// Demonstrator pitch radii, base to tip: a 14 degree cone narrowing to a 1 cm
/// tip radius, sampled at section midpoints and rounded.
pub const DEMONSTRATOR_RADII: [f64; SECTIONS] = [0.07, 0.045, 0.02];

impl Default for TendonLayout {
    fn default() -> Self {
        Self::with_radii(DEMONSTRATOR_RADII).expect("default layout is valid")
    }
}

/// Physical description of one arm.
///
/// The per-section radii in [`TendonLayout`] also carry any conical taper of the
/// body; the taper is not otherwise modeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmGeometry {
    /// Arc length of each section, meters.
    pub lengths: [f64; SECTIONS],
    /// Lumped mass at each section's arc midpoint, kg.
    pub masses: [f64; SECTIONS],
    /// Extra payload mass at the tip, kg.
    pub tip_mass: f64,
    /// Linear bending stiffness of each section, N m / rad.
    pub bend_stiffness: [f64; SECTIONS],
    pub layout: TendonLayout,
    /// Gravity in the base frame, m/s^2. The default arm hangs from its base,
    /// so gravity points along the base +z axis.
    pub gravity: Vector3<f64>,
    /// Upper bound on each section's bend angle, rad.
    pub theta_max: f64,
}

impl ArmGeometry {
    /// The 0.60 m hand-held demonstrator: three 0.20 m sections.
    pub fn demonstrator() -> Self {
        ArmGeometry {
            lengths: [0.2; SECTIONS],
            masses: [0.12, 0.10, 0.08],
            tip_mass: 0.0,
            bend_stiffness: [0.6, 0.4, 0.25],
            layout: TendonLayout::default(),
            gravity: Vector3::new(0.0, 0.0, 9.81),
            theta_max: PI,
        }
    }

    /// The 0.98 m executor, a uniformly scaled copy of the demonstrator.
    pub fn executor_large() -> Self {
        Self::demonstrator().scaled(0.98 / 0.60)
    }

    /// Uniform geometric scaling: section lengths and tendon radii are multiplied
    /// by `factor`. Masses and stiffnesses are left alone; the executor is driven
    /// kinematically through its tendons, so only lengths matter for it.
    pub fn scaled(&self, factor: f64) -> Self {
        self.scaled_per_section([factor; SECTIONS])
    }

    pub fn scaled_per_section(&self, factors: [f64; SECTIONS]) -> Self {
        ArmGeometry {
            lengths: std::array::from_fn(|i| self.lengths[i] * factors[i]),
            layout: self.layout.scaled(factors),
            ..self.clone()
        }
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    /// Arc length at which section `i` starts.
    pub fn section_start(&self, section: usize) -> f64 {
        self.lengths[..section].iter().sum()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for i in 0..SECTIONS {
            check("section length", "positive", self.lengths[i], self.lengths[i] > 0.0)?;
            check("section mass", "non-negative", self.masses[i], self.masses[i] >= 0.0)?;
            check(
                "bending stiffness",
                "positive",
                self.bend_stiffness[i],
                self.bend_stiffness[i] > 0.0,
            )?;
        }
        check("tip mass", "non-negative", self.tip_mass, self.tip_mass >= 0.0)?;
        check("theta_max", "within (0, 2pi]", self.theta_max, self.theta_max > 0.0 && self.theta_max <= TAU)?;
        for g in self.gravity.iter() {
            check("gravity component", "finite", *g, true)?;
        }
        // re-run the layout invariants in case the struct was deserialized directly
        TendonLayout::new(self.layout.azimuths, self.layout.radii)?;
        Ok(())
    }
}

impl Default for ArmGeometry {
    fn default() -> Self {
        Self::demonstrator()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_azimuths() {
        let layout = TendonLayout::default();
        let deg = layout.azimuths().map(|r| r.map(|a| a.to_degrees().round()));
        assert_eq!(deg, [[60.0, 180.0, 300.0], [0.0, 120.0, 240.0], [60.0, 180.0, 300.0]]);
    }

    #[test]
    fn rejects_uneven_spacing() {
        let bad = [[0.0, 1.0, 2.0], [0.0, TAU / 3.0, 2.0 * TAU / 3.0], [0.0, TAU / 3.0, 2.0 * TAU / 3.0]];
        assert_eq!(
            TendonLayout::new(bad, [0.02; 3]).unwrap_err(),
            ModelError::TendonSpacing { section: 0 }
        );
    }

    #[test]
    fn rejects_non_positive_radius() {
        assert!(TendonLayout::with_radii([0.02, 0.0, 0.02]).is_err());
    }

    #[test]
    fn default_lengths() {
        assert!((ArmGeometry::demonstrator().total_length() - 0.60).abs() < 1e-15);
        assert!((ArmGeometry::executor_large().total_length() - 0.98).abs() < 1e-12);
        ArmGeometry::demonstrator().validate().unwrap();
    }

    #[test]
    fn validate_catches_bad_values() {
        let mut g = ArmGeometry::demonstrator();
        g.bend_stiffness[1] = 0.0;
        assert!(g.validate().is_err());
        let mut g = ArmGeometry::demonstrator();
        g.masses[0] = f64::NAN;
        assert!(g.validate().is_err());
    }
}
