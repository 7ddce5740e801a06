use super::pcc::section_end_frames;
use super::{ArmGeometry, ModelError, SECTIONS};
use serde::Serialize;
use std::f64::consts::TAU;

/// Axis-aligned spread of reachable tip positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkspaceExtents {
    /// `max - min` of tip x, meters.
    pub width: f64,
    /// `max - min` of tip z, meters.
    pub height: f64,
}

const HALTON_BASES: [u64; 2 * SECTIONS] = [2, 3, 5, 7, 11, 13];

/// Radical inverse of `index` in `base`.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

/// Samples `(theta_i, phi_i)` on a six-dimensional Halton sequence (bend angles
/// over `[0, theta_max]`, azimuths over `[0, 2pi)`) and reports the tip extents.
/// The sequence starts at index 1 so the result is identical on every call.
pub fn workspace_extents(geom: &ArmGeometry, n_samples: usize) -> Result<WorkspaceExtents, ModelError> {
    if n_samples < 1000 {
        return Err(ModelError::TooFewSamples(n_samples));
    }
    let (mut xmin, mut xmax, mut zmin, mut zmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for k in 1..=n_samples as u64 {
        let mut q = [0.0; 2 * SECTIONS];
        for i in 0..SECTIONS {
            let theta = geom.theta_max * radical_inverse(k, HALTON_BASES[2 * i]);
            let phi = TAU * radical_inverse(k, HALTON_BASES[2 * i + 1]);
            q[2 * i] = theta * phi.cos();
            q[2 * i + 1] = theta * phi.sin();
        }
        let tip = section_end_frames(&q, &geom.lengths)[SECTIONS - 1].pos;
        xmin = xmin.min(tip[0]);
        xmax = xmax.max(tip[0]);
        zmin = zmin.min(tip[2]);
        zmax = zmax.max(tip[2]);
    }
    Ok(WorkspaceExtents {
        width: xmax - xmin,
        height: zmax - zmin,
    })
}
