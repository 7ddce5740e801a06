use super::pcc::{centerline_point, section_end_frames, Frame};
use super::{ArmConfig, ArmGeometry, SECTIONS};
use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, Translation3, UnitQuaternion};

/// End frames of the three sections expressed in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPose {
    pub section_ends: [Isometry3<f64>; SECTIONS],
}

impl ArmPose {
    pub fn tip(&self) -> &Isometry3<f64> {
        &self.section_ends[SECTIONS - 1]
    }

    pub fn tip_position(&self) -> Point3<f64> {
        self.tip().translation.vector.into()
    }
}

fn to_isometry(frame: &Frame<f64>) -> Isometry3<f64> {
    let r = &frame.rot;
    let m = Matrix3::new(r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2]);
    let rot = Rotation3::from_matrix_unchecked(m);
    Isometry3::from_parts(
        Translation3::new(frame.pos[0], frame.pos[1], frame.pos[2]),
        UnitQuaternion::from_rotation_matrix(&rot),
    )
}

/// Chains the three constant-curvature sections from the base. A straight
/// section translates along its local +z; a bent one turns its tangent toward
/// the azimuth `phi` of its base frame.
pub fn forward_kinematics(config: &ArmConfig, geom: &ArmGeometry) -> ArmPose {
    let frames = section_end_frames(&config.bending_coords(), &geom.lengths);
    ArmPose {
        section_ends: frames.map(|f| to_isometry(&f)),
    }
}

/// Centerline position at arc length `s` from the base (clamped to `[0, L]`).
pub fn point_at(config: &ArmConfig, geom: &ArmGeometry, s: f64) -> Point3<f64> {
    let p = centerline_point(&config.bending_coords(), &geom.lengths, s);
    Point3::new(p[0], p[1], p[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn straight_arm_points_up_the_base_axis() {
        let pose = forward_kinematics(&ArmConfig::STRAIGHT, &ArmGeometry::demonstrator());
        let tip = pose.tip_position();
        assert!((tip - Point3::new(0.0, 0.0, 0.6)).norm() < 1e-15);
    }

    #[test]
    fn quarter_arc_on_the_first_section() {
        let config = ArmConfig::from_angles([(FRAC_PI_2, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let pose = forward_kinematics(&config, &ArmGeometry::demonstrator());
        let r = 0.4 / std::f64::consts::PI;
        let end1 = pose.section_ends[0].translation.vector;
        assert!((end1 - nalgebra::Vector3::new(r, 0.0, r)).norm() < 1e-12);
        assert!((pose.tip_position() - Point3::new(r + 0.4, 0.0, r)).norm() < 1e-12);
        assert!((r - 0.12732).abs() < 1e-5);
    }

    #[test]
    fn point_at_matches_section_ends() {
        let config = ArmConfig::from_angles([(0.4, 1.0), (1.1, 4.0), (0.3, 2.5)]);
        let geom = ArmGeometry::demonstrator();
        let pose = forward_kinematics(&config, &geom);
        for i in 0..3 {
            let s = geom.section_start(i) + geom.lengths[i];
            let p = point_at(&config, &geom, s);
            assert!((p.coords - pose.section_ends[i].translation.vector).norm() < 1e-14);
        }
        assert_eq!(point_at(&config, &geom, 0.0), Point3::origin());
    }

    #[test]
    fn arc_midpoint_lies_on_the_circle() {
        // a single bent section: the midpoint is at angle theta/2 on a circle of radius L/theta
        let theta: f64 = 1.2;
        let config = ArmConfig::from_angles([(theta, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let p = point_at(&config, &ArmGeometry::demonstrator(), 0.1);
        let r = 0.2 / theta;
        let half = theta / 2.0;
        assert!((p.x - r * (1.0 - half.cos())).abs() < 1e-15);
        assert!((p.z - r * half.sin()).abs() < 1e-15);
    }
}
