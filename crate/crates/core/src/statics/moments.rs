use super::potential::Potential;
use super::{BendingMoment, ExternalLoad, SectionMoments, StiffnessHook};
use crate::arm_model::{ArmConfig, ArmGeometry, TendonLayout, SECTIONS, TENDONS, TENDONS_PER_SECTION};

fn to_moments(forces: [[f64; 2]; SECTIONS]) -> SectionMoments {
    forces.map(|[gx, gy]| BendingMoment::from_generalized(gx, gy))
}

/// Resultant tendon moment per section: `sum_j F_ij R_i (sin a_ij, cos a_ij)`.
/// A tendon loads only the section it terminates in.
pub fn tendon_moment(_config: &ArmConfig, tensions: &[f64; TENDONS], layout: &TendonLayout) -> SectionMoments {
    std::array::from_fn(|i| {
        let r = layout.radius(i);
        let mut m = [0.0; 2];
        for j in 0..TENDONS_PER_SECTION {
            let f = tensions[i * TENDONS_PER_SECTION + j];
            let (s, c) = layout.azimuth(i, j).sin_cos();
            m[0] += f * s * r;
            m[1] += f * c * r;
        }
        BendingMoment(m)
    })
}

/// Gravity moment from the lumped section and tip masses, obtained as the
/// virtual-work projection of the weights onto each section's bending
/// coordinates. For a straight arm this is the weight times its lever arm about
/// the section's midpoint.
pub fn gravity_moment(config: &ArmConfig, geom: &ArmGeometry) -> SectionMoments {
    let pot = Potential {
        gravity: true,
        ..Potential::empty(geom)
    };
    to_moments(pot.forces(&config.bending_coords()))
}

/// Moment of external point loads, projected the same way as gravity.
pub fn load_moment(config: &ArmConfig, geom: &ArmGeometry, loads: &[ExternalLoad]) -> SectionMoments {
    let pot = Potential {
        loads,
        ..Potential::empty(geom)
    };
    to_moments(pot.forces(&config.bending_coords()))
}

/// Linear elastic restoring moment of magnitude `k_bend theta` opposing the bend.
pub fn elastic_moment(config: &ArmConfig, geom: &ArmGeometry) -> SectionMoments {
    std::array::from_fn(|i| {
        let [bx, by] = config.sections[i].bending_coords();
        let k = geom.bend_stiffness[i];
        BendingMoment::from_generalized(-k * bx, -k * by)
    })
}

/// Net section moment `M_T + M_load + M_G + M_K + M_stiffness`.
pub fn residual_moments(
    config: &ArmConfig,
    geom: &ArmGeometry,
    loads: &[ExternalLoad],
    tensions: &[f64; TENDONS],
    hook: &dyn StiffnessHook,
) -> SectionMoments {
    let t = tendon_moment(config, tensions, &geom.layout);
    let l = load_moment(config, geom, loads);
    let g = gravity_moment(config, geom);
    let k = elastic_moment(config, geom);
    let s = hook.moment(config);
    std::array::from_fn(|i| t[i] + l[i] + g[i] + k[i] + s[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statics::NoStiffness;
    use nalgebra::Vector3;

    #[test]
    fn equal_tensions_cancel() {
        let m = tendon_moment(&ArmConfig::STRAIGHT, &[7.0; TENDONS], &TendonLayout::default());
        for s in m {
            assert!(s.norm() < 1e-14);
        }
    }

    #[test]
    fn single_tendon_moment() {
        let mut tensions = [0.0; TENDONS];
        tensions[0] = 10.0;
        let m = tendon_moment(&ArmConfig::STRAIGHT, &tensions, &TendonLayout::with_radii([0.02; 3]).unwrap());
        assert!((m[0].0[0] - 0.17321).abs() < 5e-6);
        assert!((m[0].0[1] - 0.1).abs() < 1e-12);
        assert_eq!(m[1], BendingMoment::ZERO);
    }

    #[test]
    fn tendon_moment_pulls_toward_the_tendon() {
        // pulling the 60-degree tendon bends section I toward 60 degrees
        let mut tensions = [0.0; TENDONS];
        tensions[0] = 10.0;
        let m = tendon_moment(&ArmConfig::STRAIGHT, &tensions, &TendonLayout::with_radii([0.02; 3]).unwrap());
        let [gx, gy] = m[0].generalized();
        assert!((gy.atan2(gx).to_degrees() - 60.0).abs() < 1e-9);
    }

    #[test]
    fn gravity_vanishes_along_the_axis() {
        let mut geom = ArmGeometry::demonstrator();
        geom.gravity = Vector3::new(0.0, 0.0, -9.81);
        for m in gravity_moment(&ArmConfig::STRAIGHT, &geom) {
            assert!(m.norm() < 1e-15);
        }
        geom.gravity = Vector3::zeros();
        let bent = ArmConfig::from_angles([(0.5, 1.0), (0.2, 2.0), (0.9, 3.0)]);
        for m in gravity_moment(&bent, &geom) {
            assert_eq!(m.norm(), 0.0);
        }
    }

    #[test]
    fn horizontal_lever_arm() {
        // straight arm lying along +z with gravity along -x; only the tip mass is
        // loaded. The tip is 0.3 m beyond the midpoint of section II.
        let mut geom = ArmGeometry::demonstrator();
        geom.masses = [0.0; 3];
        geom.tip_mass = 0.1;
        geom.gravity = Vector3::new(-9.81, 0.0, 0.0);
        let m = gravity_moment(&ArmConfig::STRAIGHT, &geom);
        assert!((m[1].norm() - 0.2943).abs() < 1e-12);
        assert!((m[0].norm() - 0.1 * 9.81 * 0.5).abs() < 1e-12);
        assert!((m[2].norm() - 0.1 * 9.81 * 0.1).abs() < 1e-12);
    }

    #[test]
    fn elastic_magnitude() {
        let mut geom = ArmGeometry::demonstrator();
        geom.bend_stiffness = [0.5; 3];
        let config = ArmConfig::from_angles([(0.8, 1.3), (0.0, 0.0), (0.0, 0.0)]);
        let m = elastic_moment(&config, &geom);
        assert!((m[0].norm() - 0.4).abs() < 1e-15);
        assert_eq!(m[1].norm(), 0.0);
    }

    #[test]
    fn elastic_is_negative_energy_gradient() {
        let geom = ArmGeometry::demonstrator();
        let config = ArmConfig::from_angles([(0.8, 1.3), (0.4, 2.0), (1.1, 5.0)]);
        let m = elastic_moment(&config, &geom);
        let energy = |theta: f64, i: usize| 0.5 * geom.bend_stiffness[i] * theta * theta;
        let h = 1e-5;
        for i in 0..3 {
            let t = config.sections[i].theta();
            let fd = -(energy(t + h, i) - energy(t - h, i)) / (2.0 * h);
            assert!(((m[i].norm() - fd.abs()) / fd.abs()).abs() < 1e-8);
        }
    }

    #[test]
    fn residual_sums_components() {
        let geom = ArmGeometry::demonstrator();
        let r = residual_moments(&ArmConfig::STRAIGHT, &geom, &[], &[0.0; TENDONS], &NoStiffness);
        for m in r {
            assert!(m.norm() < 1e-15);
        }
    }
}
