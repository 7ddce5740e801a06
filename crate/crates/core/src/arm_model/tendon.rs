use super::{ArmConfig, SectionState, TendonLayout, TendonVector, SECTIONS, TENDONS, TENDONS_PER_SECTION, THETA_EPS};
use nalgebra::SMatrix;

/// `d(tendon displacement) / d(theta_1, phi_1, ..., theta_3, phi_3)`.
pub type TendonJacobian = SMatrix<f64, TENDONS, { 2 * SECTIONS }>;

/// Tendon displacements of a configuration: `dl_ij = -theta_i R_i cos(phi_i - phi_ij)`.
pub fn tendon_lengths(config: &ArmConfig, layout: &TendonLayout) -> TendonVector {
    let mut out = TendonVector::ZERO;
    for (i, s) in config.sections.iter().enumerate() {
        let r = layout.radius(i);
        for j in 0..TENDONS_PER_SECTION {
            out[(i, j)] = -s.theta() * r * (s.phi() - layout.azimuth(i, j)).cos();
        }
    }
    out
}

/// Configuration recovered from measured tendon displacements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perception {
    pub config: ArmConfig,
    /// Root-sum-square least-squares residual per section, meters. Zero for any
    /// displacement vector produced by [`tendon_lengths`].
    pub residuals: [f64; SECTIONS],
}

/// Least-squares inverse of [`tendon_lengths`], solved per section in the
/// bending coordinates `(theta cos phi, theta sin phi)` where the tendon map is
/// linear: three measurements, two unknowns.
pub fn config_from_tendons(t: &TendonVector, layout: &TendonLayout) -> Perception {
    let mut sections = [SectionState::STRAIGHT; SECTIONS];
    let mut residuals = [0.0; SECTIONS];
    for i in 0..SECTIONS {
        let r = layout.radius(i);
        let (mut ncc, mut ncs, mut nss, mut bc, mut bs) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 0..TENDONS_PER_SECTION {
            let (s, c) = layout.azimuth(i, j).sin_cos();
            ncc += c * c;
            ncs += c * s;
            nss += s * s;
            bc += t[(i, j)] * c;
            bs += t[(i, j)] * s;
        }
        // dl = -r (bx c + by s)  =>  r (N) [bx, by] = -[bc, bs]
        let det = ncc * nss - ncs * ncs;
        let bx = -(nss * bc - ncs * bs) / (det * r);
        let by = -(ncc * bs - ncs * bc) / (det * r);
        let mut rss = 0.0;
        for j in 0..TENDONS_PER_SECTION {
            let (s, c) = layout.azimuth(i, j).sin_cos();
            let e = t[(i, j)] + r * (bx * c + by * s);
            rss += e * e;
        }
        sections[i] = SectionState::from_bending_coords(bx, by);
        residuals[i] = rss.sqrt();
    }
    Perception {
        config: ArmConfig::new(sections),
        residuals,
    }
}

/// Analytic Jacobian of [`tendon_lengths`]. Block diagonal; the azimuth columns
/// are zero for straight sections where the azimuth is undefined.
pub fn tendon_jacobian(config: &ArmConfig, layout: &TendonLayout) -> TendonJacobian {
    let mut jac = TendonJacobian::zeros();
    for (i, s) in config.sections.iter().enumerate() {
        let r = layout.radius(i);
        for j in 0..TENDONS_PER_SECTION {
            let row = i * TENDONS_PER_SECTION + j;
            let d = s.phi() - layout.azimuth(i, j);
            jac[(row, 2 * i)] = -r * d.cos();
            if s.theta() >= THETA_EPS {
                jac[(row, 2 * i + 1)] = s.theta() * r * d.sin();
            }
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm_model::angle_diff;

    fn layout() -> TendonLayout {
        TendonLayout::with_radii([0.02; 3]).unwrap()
    }

    #[test]
    fn straight_arm_has_no_displacement() {
        assert_eq!(tendon_lengths(&ArmConfig::STRAIGHT, &layout()), TendonVector::ZERO);
    }

    #[test]
    fn aligned_tendon_shortens_by_theta_r() {
        let config = ArmConfig::from_angles([(0.5, 60f64.to_radians()), (0.0, 0.0), (0.0, 0.0)]);
        let t = tendon_lengths(&config, &layout());
        let s1 = t.section(0);
        assert!((s1[0] + 0.01).abs() < 1e-15);
        assert!((s1[1] - 0.005).abs() < 1e-15);
        assert!((s1[2] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn inverse_of_the_worked_example() {
        let mut t = TendonVector::ZERO;
        t.0[..3].copy_from_slice(&[-0.01, 0.005, 0.005]);
        let p = config_from_tendons(&t, &layout());
        let s = p.config.sections[0];
        assert!((s.theta() - 0.5).abs() < 1e-14);
        assert!(angle_diff(s.phi(), 60f64.to_radians()).abs() < 1e-14);
        assert!(p.residuals[0] < 1e-15);
        assert_eq!(p.config.sections[1], SectionState::STRAIGHT);
    }

    #[test]
    fn zero_vector_perceives_straight() {
        let p = config_from_tendons(&TendonVector::ZERO, &layout());
        assert_eq!(p.config, ArmConfig::STRAIGHT);
        assert_eq!(p.residuals, [0.0; 3]);
    }

    #[test]
    fn common_mode_shows_up_as_residual() {
        // equal displacement on all three tendons is not a bend
        let mut t = TendonVector::ZERO;
        t.0[3..6].copy_from_slice(&[0.001, 0.001, 0.001]);
        let p = config_from_tendons(&t, &layout());
        assert!(p.config.sections[1].theta() < 1e-12);
        assert!((p.residuals[1] - 0.001 * 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn jacobian_entries() {
        let config = ArmConfig::from_angles([(0.5, 60f64.to_radians()), (0.3, 1.0), (0.0, 0.0)]);
        let jac = tendon_jacobian(&config, &layout());
        assert!((jac[(0, 0)] + 0.02).abs() < 1e-15);
        // section-1 tendons do not depend on section 2
        for row in 0..3 {
            assert_eq!(jac[(row, 2)], 0.0);
            assert_eq!(jac[(row, 3)], 0.0);
        }
        // straight section 3: azimuth column is zero by convention
        for row in 6..9 {
            assert_eq!(jac[(row, 5)], 0.0);
        }
    }
}
