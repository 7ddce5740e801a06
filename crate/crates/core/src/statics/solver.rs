use super::moments::{residual_moments, tendon_moment};
use super::potential::{Coords, Potential, DOF};
use super::{EquilibriumResult, ExternalLoad, StiffnessHook, TendonChannelState};
use crate::arm_model::{ArmConfig, ArmGeometry, SECTIONS, TENDONS};
use nalgebra::{SMatrix, SVector, SymmetricEigen};
use serde::Serialize;

/// One Newton iteration, emitted as a JSON log line on the `twinarm::solver` target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Largest section moment norm before the step, N m.
    pub residual: f64,
    /// Accepted step fraction after backtracking.
    pub damping: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Convergence threshold on every section's net moment, N m.
    pub moment_tol: f64,
    pub max_iterations: usize,
    /// Maximum number of step halvings per iteration.
    pub max_halvings: usize,
    pub initial: ArmConfig,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            moment_tol: 1e-8,
            max_iterations: 200,
            max_halvings: 40,
            initial: ArmConfig::STRAIGHT,
        }
    }
}

/// Solves `M_T + M_load + M_G + M_K (+ M_stiffness) = 0` from the straight pose.
pub fn solve_equilibrium(
    loads: &[ExternalLoad],
    channels: &[TendonChannelState; TENDONS],
    geom: &ArmGeometry,
    hook: &dyn StiffnessHook,
) -> EquilibriumResult {
    solve_equilibrium_with(loads, channels, geom, hook, &SolverOptions::default())
}

fn section_norms(g: &Coords) -> [f64; SECTIONS] {
    std::array::from_fn(|i| g[2 * i].hypot(g[2 * i + 1]))
}

fn max_norm(g: &Coords) -> f64 {
    section_norms(g).into_iter().fold(0.0, f64::max)
}

/// Keeps every section's bend within `theta_max` by radial projection.
fn project(q: &mut Coords, theta_max: f64) {
    for i in 0..SECTIONS {
        let t = q[2 * i].hypot(q[2 * i + 1]);
        if t > theta_max {
            q[2 * i] *= theta_max / t;
            q[2 * i + 1] *= theta_max / t;
        }
    }
}

/// Damped Newton iteration on the bending coordinates
/// `(theta_i cos phi_i, theta_i sin phi_i)`, which stay regular at the straight
/// pose. The Hessian is made positive definite by taking absolute eigenvalues so
/// each step descends the potential; steps are halved until the energy drops
/// (or, once the Hessian is positive definite, until the residual drops).
pub fn solve_equilibrium_with(
    loads: &[ExternalLoad],
    channels: &[TendonChannelState; TENDONS],
    geom: &ArmGeometry,
    hook: &dyn StiffnessHook,
    options: &SolverOptions,
) -> EquilibriumResult {
    let tensions: [f64; TENDONS] = channels.map(|c| c.tension.max(0.0));
    let tendon = tendon_moment(&options.initial, &tensions, &geom.layout);
    let pot = Potential {
        gravity: true,
        elastic: true,
        extra_stiffness: hook.extra_stiffness(),
        loads,
        tendon_forces: tendon.map(|m| m.generalized()),
        ..Potential::empty(geom)
    };

    let mut q = options.initial.bending_coords();
    project(&mut q, geom.theta_max);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        let (u, g, h) = pot.hessian(&q);
        let residual = max_norm(&g);
        if residual <= options.moment_tol {
            converged = true;
            break;
        }
        let step = newton_direction(&g, &h);
        let positive_definite = step.1;
        let d = step.0;
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let mut trial = q;
            for k in 0..DOF {
                trial[k] += alpha * d[k];
            }
            project(&mut trial, geom.theta_max);
            let (u_trial, g_trial) = pot.gradient(&trial);
            let gnorm_trial = g_trial.iter().map(|v| v * v).sum::<f64>().sqrt();
            let armijo = u_trial <= u + 1e-4 * alpha * slope;
            let residual_drop = positive_definite && gnorm_trial < (1.0 - 1e-4 * alpha) * gnorm;
            if armijo || residual_drop {
                accepted = Some(trial);
                break;
            }
            alpha *= 0.5;
        }
        iterations += 1;
        let record = IterationRecord {
            iteration: iterations,
            residual,
            damping: if accepted.is_some() { alpha } else { 0.0 },
        };
        if let Ok(line) = serde_json::to_string(&record) {
            log::debug!(target: "twinarm::solver", "{line}");
        }
        history.push(record);
        match accepted {
            Some(trial) => q = trial,
            None => break,
        }
    }

    let config = ArmConfig::from_bending_coords(&q);
    if !converged {
        let (_, g) = pot.gradient(&q);
        converged = max_norm(&g) <= options.moment_tol;
    }
    let residuals = residual_moments(&config, geom, loads, &tensions, hook).map(|m| m.norm());
    EquilibriumResult {
        config,
        residuals,
        tensions,
        iterations,
        converged,
        history,
    }
}

/// Newton direction with absolute-eigenvalue regularization. The flag reports
/// whether the Hessian was already positive definite.
fn newton_direction(g: &Coords, h: &SMatrix<f64, DOF, DOF>) -> (Coords, bool) {
    let eig = SymmetricEigen::new(*h);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-10 * scale;
    let positive_definite = eig.eigenvalues.iter().all(|&v| v > floor);
    let gv = SVector::<f64, DOF>::from(*g);
    let coeffs = eig.eigenvectors.transpose() * gv;
    let mut d = SVector::<f64, DOF>::zeros();
    for k in 0..DOF {
        let lambda = eig.eigenvalues[k].abs().max(floor);
        d -= eig.eigenvectors.column(k) * (coeffs[k] / lambda);
    }
    (std::array::from_fn(|k| d[k]), positive_definite)
}
