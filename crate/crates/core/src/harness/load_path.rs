use super::HarnessError;
use crate::statics::ExternalLoad;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Circle,
    Square,
    Triangle,
    Star,
    LateralSweep,
    RotationSweep,
}

impl Shape {
    /// The four figures traced in the trajectory experiments, in table order.
    pub const FIGURES: [Shape; 4] = [Shape::Circle, Shape::Square, Shape::Triangle, Shape::Star];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Circle => "circle",
            Shape::Square => "square",
            Shape::Triangle => "triangle",
            Shape::Star => "star",
            Shape::LateralSweep => "lateral-sweep",
            Shape::RotationSweep => "rotation-sweep",
        }
    }

    /// Vertex visiting order on the unit circle for the polygonal shapes.
    fn vertices(self) -> Option<Vec<[f64; 2]>> {
        let (n, stride) = match self {
            Shape::Square => (4, 1),
            Shape::Triangle => (3, 1),
            Shape::Star => (5, 2),
            _ => return None,
        };
        Some(
            (0..n)
                .map(|k| {
                    let a = TAU * ((k * stride) % n) as f64 / n as f64;
                    [a.cos(), a.sin()]
                })
                .collect(),
        )
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Shape::Circle,
            Shape::Square,
            Shape::Triangle,
            Shape::Star,
            Shape::LateralSweep,
            Shape::RotationSweep,
        ]
        .into_iter()
        .find(|shape| shape.name() == s.trim().to_ascii_lowercase())
        .ok_or_else(|| HarnessError::Validation(format!("unknown shape {s:?}")))
    }
}

/// The plane a path is traced in, named by its two axes in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    #[default]
    Xy,
    Xz,
    Yz,
}

impl Plane {
    fn embed(self, u: f64, v: f64) -> Vector3<f64> {
        match self {
            Plane::Xy => Vector3::new(u, v, 0.0),
            Plane::Xz => Vector3::new(u, 0.0, v),
            Plane::Yz => Vector3::new(0.0, u, v),
        }
    }
}

/// A periodic pull on the demonstrator, as an operator's hand would apply.
///
/// The hand follows `shape` with the given amplitude; the force is the hand
/// offset times `drag_stiffness`, applied at arc length `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadScript {
    pub shape: Shape,
    pub plane: Plane,
    /// Path radius, m.
    pub amplitude: f64,
    /// s.
    pub period: f64,
    /// Application point, arc length from the base, m.
    pub s: f64,
    /// Force per meter of hand offset, N/m.
    pub drag_stiffness: f64,
}

impl LoadScript {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.amplitude) {
            return Err(HarnessError::Validation(format!("amplitude must be positive, got {}", self.amplitude)));
        }
        if !positive(self.period) {
            return Err(HarnessError::Validation(format!("period must be positive, got {}", self.period)));
        }
        if !(self.s.is_finite() && self.s >= 0.0) {
            return Err(HarnessError::Validation(format!("load point must be non-negative, got {}", self.s)));
        }
        if !(self.drag_stiffness.is_finite() && self.drag_stiffness >= 0.0) {
            return Err(HarnessError::Validation("drag stiffness must be non-negative".into()));
        }
        Ok(())
    }

    /// Hand position in plane coordinates at time `t`, m.
    pub fn path_point(&self, t: f64) -> [f64; 2] {
        let phase = (t / self.period).rem_euclid(1.0);
        let [u, v] = match self.shape {
            Shape::Circle => [(TAU * phase).cos(), (TAU * phase).sin()],
            Shape::LateralSweep => [(TAU * phase).sin(), 0.0],
            Shape::RotationSweep => {
                let a = FRAC_PI_2 * (TAU * phase).sin();
                [a.cos(), a.sin()]
            }
            polygon => {
                let verts = polygon.vertices().expect("polygonal shape");
                let n = verts.len();
                let x = phase * n as f64;
                let k = (x.floor() as usize).min(n - 1);
                let w = x - k as f64;
                let (a, b) = (verts[k], verts[(k + 1) % n]);
                [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
            }
        };
        [self.amplitude * u, self.amplitude * v]
    }
}

/// The load the script applies at time `t` (s, non-negative).
pub fn generate_load_path(script: &LoadScript, t: f64) -> Result<ExternalLoad, HarnessError> {
    script.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(HarnessError::Validation(format!("time must be non-negative, got {t}")));
    }
    let [u, v] = script.path_point(t);
    Ok(ExternalLoad::new(script.s, script.plane.embed(u, v) * script.drag_stiffness))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn script(shape: Shape) -> LoadScript {
        LoadScript {
            shape,
            plane: Plane::Xy,
            amplitude: 0.05,
            period: 4.0,
            s: 0.6,
            drag_stiffness: 10.0,
        }
    }

    #[test]
    fn circle_starts_on_first_axis() {
        let load = generate_load_path(&script(Shape::Circle), 0.0).unwrap();
        assert_eq!(load.force, Vector3::new(0.5, 0.0, 0.0));
        let mut xz = script(Shape::Circle);
        xz.plane = Plane::Xz;
        let quarter = generate_load_path(&xz, 1.0).unwrap().force;
        assert!((quarter - Vector3::new(0.0, 0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn square_corners_at_equal_spacing() {
        let sq = script(Shape::Square);
        for k in 0..4 {
            let p = sq.path_point(k as f64);
            let a = TAU * k as f64 / 4.0;
            assert!((p[0] - 0.05 * a.cos()).abs() < 1e-15 && (p[1] - 0.05 * a.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn paths_are_continuous_and_periodic() {
        for shape in [Shape::Circle, Shape::Square, Shape::Triangle, Shape::Star, Shape::LateralSweep, Shape::RotationSweep] {
            let s = script(shape);
            let a = s.path_point(0.0);
            let b = s.path_point(s.period);
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12, "{shape}");
            let mut prev = s.path_point(0.0);
            for k in 1..=4000 {
                let p = s.path_point(k as f64 * 1e-3);
                // edges are at most 2A long and traversed in period/n
                assert!(((p[0] - prev[0]).powi(2) + (p[1] - prev[1]).powi(2)).sqrt() < 1e-3, "{shape}");
                prev = p;
            }
        }
    }

    #[test]
    fn star_visits_every_other_vertex() {
        let star = script(Shape::Star);
        let p = star.path_point(0.8);
        let a = TAU * 2.0 / 5.0;
        assert!((p[0] - 0.05 * a.cos()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_scripts() {
        let mut s = script(Shape::Circle);
        s.amplitude = 0.0;
        assert!(generate_load_path(&s, 0.0).is_err());
        assert!(generate_load_path(&script(Shape::Circle), -1.0).is_err());
        assert!("hexagon".parse::<Shape>().is_err());
        assert_eq!("Lateral-Sweep".parse::<Shape>().unwrap(), Shape::LateralSweep);
    }
}
