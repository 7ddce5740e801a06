//! Total potential energy of the arm in stacked bending coordinates and its
//! derivatives. Generalized forces are `-grad U`.

use super::ExternalLoad;
use crate::arm_model::pcc::centerline_point;
use crate::arm_model::{ArmGeometry, SECTIONS};
use nalgebra::{SMatrix, SVector};
use num_dual::{DualNum, DualSVec64, Dual2SVec64};

pub(crate) const DOF: usize = 2 * SECTIONS;
pub(crate) type Coords = [f64; DOF];

/// Which contributions enter the energy.
#[derive(Clone)]
pub(crate) struct Potential<'a> {
    pub geom: &'a ArmGeometry,
    pub gravity: bool,
    pub elastic: bool,
    pub extra_stiffness: [f64; SECTIONS],
    pub loads: &'a [ExternalLoad],
    /// Constant tendon generalized forces per section, conjugate to the bending coordinates.
    pub tendon_forces: [[f64; 2]; SECTIONS],
}

impl<'a> Potential<'a> {
    pub fn empty(geom: &'a ArmGeometry) -> Self {
        Potential {
            geom,
            gravity: false,
            elastic: false,
            extra_stiffness: [0.0; SECTIONS],
            loads: &[],
            tendon_forces: [[0.0; 2]; SECTIONS],
        }
    }

    pub fn energy<D: DualNum<Primitive = f64> + Copy>(&self, q: &[D; DOF]) -> D {
        let mut u = D::from(0.0);
        for i in 0..SECTIONS {
            let (bx, by) = (q[2 * i], q[2 * i + 1]);
            let mut k = self.extra_stiffness[i];
            if self.elastic {
                k += self.geom.bend_stiffness[i];
            }
            if k != 0.0 {
                u += (bx * bx + by * by) * (0.5 * k);
            }
            let [fx, fy] = self.tendon_forces[i];
            if fx != 0.0 || fy != 0.0 {
                u -= bx * fx + by * fy;
            }
        }
        if self.gravity {
            let g = &self.geom.gravity;
            let mut masses = Vec::with_capacity(SECTIONS + 1);
            for i in 0..SECTIONS {
                masses.push((self.geom.section_start(i) + 0.5 * self.geom.lengths[i], self.geom.masses[i]));
            }
            masses.push((self.geom.total_length(), self.geom.tip_mass));
            for (s, m) in masses {
                if m != 0.0 {
                    let p = centerline_point(q, &self.geom.lengths, s);
                    u -= (p[0] * g.x + p[1] * g.y + p[2] * g.z) * m;
                }
            }
        }
        for load in self.loads {
            let p = centerline_point(q, &self.geom.lengths, load.s);
            u -= p[0] * load.force.x + p[1] * load.force.y + p[2] * load.force.z;
        }
        u
    }

    pub fn gradient(&self, q: &Coords) -> (f64, Coords) {
        let x = SVector::<f64, DOF>::from(*q);
        let (u, g) = num_dual::gradient(
            |v: SVector<DualSVec64<DOF>, DOF>| {
                let arr: [DualSVec64<DOF>; DOF] = std::array::from_fn(|i| v[i]);
                self.energy(&arr)
            },
            &x,
        );
        (u, std::array::from_fn(|i| g[i]))
    }

    pub fn hessian(&self, q: &Coords) -> (f64, Coords, SMatrix<f64, DOF, DOF>) {
        let x = SVector::<f64, DOF>::from(*q);
        let (u, g, h) = num_dual::hessian(
            |v: SVector<Dual2SVec64<DOF>, DOF>| {
                let arr: [Dual2SVec64<DOF>; DOF] = std::array::from_fn(|i| v[i]);
                self.energy(&arr)
            },
            &x,
        );
        (u, std::array::from_fn(|i| g[i]), h)
    }

    /// Generalized forces `-grad U`, grouped per section.
    pub fn forces(&self, q: &Coords) -> [[f64; 2]; SECTIONS] {
        let (_, g) = self.gradient(q);
        std::array::from_fn(|i| [-g[2 * i], -g[2 * i + 1]])
    }
}
