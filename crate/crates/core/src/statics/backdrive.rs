//! Back-drivable stepping with per-tendon stick/slip.
//!
//! At each sub-step the non-tendon section moments (loads, gravity, elasticity,
//! controller stiffness) are converted into the extra tension each tendon would
//! have to carry to hold the section still: the minimum-norm solution of
//! `A^T t = Q` with `A` the section's tendon map in bending coordinates. A
//! tendon whose demand stays within its static friction limit is stuck. Above
//! the limit it pays out (or reels in) at a speed proportional to the excess
//! over kinetic friction, and the section follows the least-squares fit of its
//! three tendon lengths.

use super::friction::{actuation_force, kinetic_friction, static_friction_limit};
use super::potential::Potential;
use super::{ExternalLoad, FrictionParams, Regime, StaticsError, StiffnessHook, TendonChannelState};
use crate::arm_model::{
    config_from_tendons, tendon_lengths, ArmConfig, ArmGeometry, TendonLayout, TendonVector, SECTIONS, TENDONS,
    TENDONS_PER_SECTION,
};
use serde::{Deserialize, Serialize};

/// Configuration plus tendon channel bookkeeping of a back-drivable arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub config: ArmConfig,
    pub channels: [TendonChannelState; TENDONS],
}

impl ArmState {
    /// An arm at rest in `config`, every channel stuck with its displacement
    /// matching the configuration.
    pub fn at_rest(config: ArmConfig, layout: &TendonLayout) -> Self {
        let dl = tendon_lengths(&config, layout);
        ArmState {
            config,
            channels: std::array::from_fn(|k| TendonChannelState {
                displacement: dl.0[k],
                ..Default::default()
            }),
        }
    }

    pub fn tendon_displacements(&self) -> TendonVector {
        TendonVector(self.channels.map(|c| c.displacement))
    }

    pub fn currents(&self) -> [f64; TENDONS] {
        self.channels.map(|c| c.current)
    }

    pub fn is_stuck(&self) -> bool {
        self.channels.iter().all(|c| c.regime == Regime::Stuck)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackdriveParams {
    pub friction: FrictionParams,
    /// Tendon speed per newton of force above kinetic friction, m/(N s).
    pub mobility: f64,
    /// Longest internal integration step, s.
    pub max_substep: f64,
    /// Controller stiffness added to each section, N m / rad.
    pub extra_stiffness: [f64; SECTIONS],
}

impl Default for BackdriveParams {
    fn default() -> Self {
        BackdriveParams {
            friction: FrictionParams::default(),
            mobility: 0.005,
            max_substep: 0.005,
            extra_stiffness: [0.0; SECTIONS],
        }
    }
}

/// Per-tendon extra tension needed to hold the given section forces.
fn holding_demand(forces: &[[f64; 2]; SECTIONS], layout: &TendonLayout) -> [f64; TENDONS] {
    let mut demand = [0.0; TENDONS];
    for i in 0..SECTIONS {
        let r = layout.radius(i);
        let (mut ncc, mut ncs, mut nss) = (0.0, 0.0, 0.0);
        for j in 0..TENDONS_PER_SECTION {
            let (s, c) = layout.azimuth(i, j).sin_cos();
            ncc += c * c;
            ncs += c * s;
            nss += s * s;
        }
        // A = -r [c s]; t = A (A^T A)^-1 Q
        let det = ncc * nss - ncs * ncs;
        let [qx, qy] = forces[i];
        let wx = (nss * qx - ncs * qy) / det;
        let wy = (ncc * qy - ncs * qx) / det;
        for j in 0..TENDONS_PER_SECTION {
            let (s, c) = layout.azimuth(i, j).sin_cos();
            demand[i * TENDONS_PER_SECTION + j] = -(c * wx + s * wy) / r;
        }
    }
    demand
}

/// Friction state of one channel under a given holding demand.
#[derive(Debug, Clone, Copy)]
struct ChannelLoad {
    tension: f64,
    actuation: f64,
    static_limit: f64,
    slack: bool,
}

fn channel_load(demand: f64, current: f64, p: &FrictionParams) -> Result<ChannelLoad, StaticsError> {
    let actuation = actuation_force(current, p)?;
    let raw = actuation + demand;
    let tension = raw.max(0.0);
    Ok(ChannelLoad {
        tension,
        actuation,
        static_limit: static_friction_limit(tension, actuation, p)?,
        slack: raw < 0.0,
    })
}

fn non_tendon_forces(
    config: &ArmConfig,
    geom: &ArmGeometry,
    loads: &[ExternalLoad],
    extra_stiffness: [f64; SECTIONS],
) -> [[f64; 2]; SECTIONS] {
    let pot = Potential {
        gravity: true,
        elastic: true,
        extra_stiffness,
        loads,
        ..Potential::empty(geom)
    };
    pot.forces(&config.bending_coords())
}

/// Advances a back-drivable arm by `dt` under external loads and motor currents.
///
/// When every tendon of a section is stuck the section is left bit-for-bit
/// unchanged. Bend angles saturate at the geometry's `theta_max`.
pub fn backdrive_step(
    state: &mut ArmState,
    loads: &[ExternalLoad],
    currents: &[f64; TENDONS],
    dt: f64,
    geom: &ArmGeometry,
    params: &BackdriveParams,
) -> Result<(), StaticsError> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(StaticsError::InvalidTimeStep(dt));
    }
    for &i in currents {
        actuation_force(i, &params.friction)?;
    }
    for load in loads {
        load.validate(geom)?;
    }
    let p = &params.friction;
    let substeps = (dt / params.max_substep).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;

    for _ in 0..substeps {
        let forces = non_tendon_forces(&state.config, geom, loads, params.extra_stiffness);
        let demand = holding_demand(&forces, &geom.layout);
        let mut velocities = [0.0; TENDONS];
        for k in 0..TENDONS {
            let load = channel_load(demand[k], currents[k], p)?;
            let excess = demand[k].abs();
            let mut velocity = 0.0;
            if excess > load.static_limit {
                let kinetic = kinetic_friction(load.tension, load.actuation, demand[k], p)?.abs();
                if excess > kinetic {
                    velocity = params.mobility * (excess - kinetic) * demand[k].signum();
                }
            }
            velocities[k] = velocity;
            let ch = &mut state.channels[k];
            ch.tension = load.tension;
            ch.current = currents[k];
            ch.slack = load.slack;
            ch.velocity = velocity;
            ch.regime = if velocity == 0.0 { Regime::Stuck } else { Regime::Slipping };
        }

        let mut sections = state.config.sections;
        for i in 0..SECTIONS {
            let range = i * TENDONS_PER_SECTION..(i + 1) * TENDONS_PER_SECTION;
            if velocities[range.clone()].iter().all(|v| *v == 0.0) {
                continue;
            }
            let mut dl = TendonVector::ZERO;
            for k in range.clone() {
                dl.0[k] = state.channels[k].displacement + velocities[k] * h;
            }
            let perceived = config_from_tendons(&dl, &geom.layout);
            sections[i] = perceived.config.sections[i].saturated(geom.theta_max);
            let mut single = ArmConfig::STRAIGHT;
            single.sections[i] = sections[i];
            let synced = tendon_lengths(&single, &geom.layout);
            for k in range {
                state.channels[k].displacement = synced.0[k];
            }
        }
        state.config.sections = sections;
    }
    Ok(())
}

/// Whether friction alone can hold a configuration at the given currents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoldReport {
    pub held: bool,
    /// Spare static friction of the worst tendon in each section times the
    /// section's tendon radius, N m. Negative when the section cannot be held.
    pub margins: [f64; SECTIONS],
    /// Tendons whose demanded tension would be negative; their tension is clamped to zero.
    pub slack: Vec<usize>,
}

/// Checks that gravity and elastic restoring moments at `config` can be balanced
/// by tendon tensions whose holding forces stay within the static friction
/// limits at `currents`.
pub fn hold_check(
    config: &ArmConfig,
    currents: &[f64; TENDONS],
    geom: &ArmGeometry,
    friction: &FrictionParams,
) -> Result<HoldReport, StaticsError> {
    hold_check_with_stiffness(config, currents, geom, friction, &[0.0; SECTIONS])
}

/// [`hold_check`] with a controller stiffness contributing to the restoring moment.
pub fn hold_check_with_stiffness(
    config: &ArmConfig,
    currents: &[f64; TENDONS],
    geom: &ArmGeometry,
    friction: &FrictionParams,
    hook: &dyn StiffnessHook,
) -> Result<HoldReport, StaticsError> {
    let forces = non_tendon_forces(config, geom, &[], hook.extra_stiffness());
    let demand = holding_demand(&forces, &geom.layout);
    let mut margins = [f64::INFINITY; SECTIONS];
    let mut slack = Vec::new();
    for k in 0..TENDONS {
        let load = channel_load(demand[k], currents[k], friction)?;
        if load.slack {
            slack.push(k);
        }
        let i = k / TENDONS_PER_SECTION;
        let spare = (load.static_limit - demand[k].abs()) * geom.layout.radius(i);
        margins[i] = margins[i].min(spare);
    }
    Ok(HoldReport {
        held: margins.iter().all(|m| *m >= 0.0),
        margins,
        slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn demand_reproduces_section_forces() {
        let layout = TendonLayout::default();
        let forces = [[0.3, -0.1], [0.0, 0.2], [-0.05, 0.0]];
        let t = holding_demand(&forces, &layout);
        for i in 0..SECTIONS {
            // A^T t must equal Q and the three demands sum to zero
            let r = layout.radius(i);
            let (mut ax, mut ay, mut sum) = (0.0, 0.0, 0.0);
            for j in 0..3 {
                let (s, c) = layout.azimuth(i, j).sin_cos();
                let tj = t[i * 3 + j];
                ax += -r * c * tj;
                ay += -r * s * tj;
                sum += tj;
            }
            assert!((ax - forces[i][0]).abs() < 1e-14);
            assert!((ay - forces[i][1]).abs() < 1e-14);
            assert!(sum.abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_time_step() {
        let geom = ArmGeometry::demonstrator();
        let mut state = ArmState::at_rest(ArmConfig::STRAIGHT, &geom.layout);
        for dt in [0.0, -0.01, 0.2, f64::NAN] {
            assert!(backdrive_step(&mut state, &[], &[0.0; TENDONS], dt, &geom, &BackdriveParams::default()).is_err());
        }
    }

    #[test]
    fn straight_hanging_arm_is_held_with_full_margins() {
        let mut geom = ArmGeometry::demonstrator();
        geom.gravity = Vector3::zeros();
        let p = FrictionParams::default();
        let report = hold_check(&ArmConfig::STRAIGHT, &[0.0; TENDONS], &geom, &p).unwrap();
        assert!(report.held);
        let full = static_friction_limit(p.c_act, p.c_act, &p).unwrap();
        for (m, r) in report.margins.iter().zip(geom.layout.radii()) {
            assert!((m - full * r).abs() < 1e-15);
        }
        assert!(report.slack.is_empty());
    }

    #[test]
    fn zero_friction_cannot_hold_against_gravity() {
        let mut geom = ArmGeometry::demonstrator();
        geom.gravity = Vector3::new(9.81, 0.0, 0.0);
        let p = FrictionParams {
            mu_s: 0.0,
            mu_k: 0.0,
            ..Default::default()
        };
        let config = ArmConfig::from_angles([(0.5, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let report = hold_check(&config, &[0.0; TENDONS], &geom, &p).unwrap();
        assert!(!report.held);
    }

    #[test]
    fn zero_current_slack_is_reported() {
        let mut geom = ArmGeometry::demonstrator();
        geom.gravity = Vector3::zeros();
        let p = FrictionParams {
            c_act: 0.0,
            ..Default::default()
        };
        let config = ArmConfig::from_angles([(0.5, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let report = hold_check(&config, &[0.0; TENDONS], &geom, &p).unwrap();
        assert!(!report.slack.is_empty());
        assert!(report.slack.iter().all(|&k| k < 3));
    }

    #[test]
    fn loaded_arm_slips_and_unloaded_arm_sticks() {
        let geom = ArmGeometry::demonstrator();
        let params = BackdriveParams::default();
        let currents = [0.1; TENDONS];
        let mut state = ArmState::at_rest(ArmConfig::STRAIGHT, &geom.layout);
        let push = [ExternalLoad::at_tip(&geom, Vector3::new(2.0, 0.0, 0.0))];
        backdrive_step(&mut state, &push, &currents, 0.05, &geom, &params).unwrap();
        assert!(state.config.sections[0].theta() > 0.0);
        assert!(state.channels.iter().any(|c| c.regime == Regime::Slipping));
        let settled = state;
        backdrive_step(&mut state, &[], &[5.0; TENDONS], 0.05, &geom, &params).unwrap();
        assert_eq!(state.config, settled.config);
        assert_eq!(state.tendon_displacements(), settled.tendon_displacements());
    }
}
