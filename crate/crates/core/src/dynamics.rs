//! Best-response population dynamics.
//!
//! The population fraction moves toward the current best response,
//! `phi <- phi + step * (BR(phi) - phi)`. When the best response reverses
//! direction the population has overshot a crossing, and the step is halved;
//! this lets trajectories settle on an attracting interior equilibrium instead
//! of chattering around it at the amplitude of the step.
//!
//! Asymptotic stability under this flow is how the ESS labels from
//! [`crate::equilibrium`] are checked empirically.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{cost_gap, Discipline};
use crate::equilibrium::equilibria;
use crate::model::{ModelParams, PhiFraction};

/// Relative tolerance on `|C(phi) - C|` below which a customer is indifferent.
pub const INDIFFERENCE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("phi = {phi} is not an equilibrium of this instance")]
    NotAnEquilibrium { phi: f64 },
    #[error("invalid dynamics option: {0}")]
    InvalidOption(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BestResponse {
    Join,
    Stay,
    Indifferent,
}

impl BestResponse {
    /// Target fraction: 1 for join, 0 for stay, the current `phi` otherwise.
    pub fn target(self, phi: f64) -> f64 {
        match self {
            BestResponse::Join => 1.0,
            BestResponse::Stay => 0.0,
            BestResponse::Indifferent => phi,
        }
    }
}

pub fn best_response(
    params: &ModelParams,
    phi: PhiFraction,
    discipline: Discipline,
) -> BestResponse {
    let gap = cost_gap(params, phi, discipline);
    let fee = params.cost;
    let tol = INDIFFERENCE_RTOL * gap.abs().max(fee.abs());
    if gap > fee + tol {
        BestResponse::Join
    } else if gap < fee - tol {
        BestResponse::Stay
    } else {
        BestResponse::Indifferent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateOptions {
    pub step_size: f64,
    /// Stop once a step moves `phi` by less than this.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions {
            step_size: 0.1,
            tolerance: 1e-8,
            max_iters: 100_000,
        }
    }
}

impl IterateOptions {
    fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return Err(DynamicsError::InvalidOption(format!(
                "step_size = {} not in (0, 1]",
                self.step_size
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(DynamicsError::InvalidOption(format!(
                "tolerance = {}",
                self.tolerance
            )));
        }
        if self.max_iters == 0 {
            return Err(DynamicsError::InvalidOption(
                "max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `(iteration, phi)`, starting with `(0, phi0)`.
    pub points: Vec<(usize, f64)>,
    pub terminal: f64,
    pub converged: bool,
    pub iterations_used: usize,
}

pub fn iterate(
    params: &ModelParams,
    discipline: Discipline,
    phi0: PhiFraction,
    options: &IterateOptions,
) -> Result<Trajectory, DynamicsError> {
    options.validate()?;
    let mut phi = phi0.value();
    let mut step = options.step_size;
    let mut points = vec![(0, phi)];
    let mut last_direction = 0.0f64;
    let mut converged = false;
    let mut iterations_used = 0;

    for t in 1..=options.max_iters {
        iterations_used = t;
        let br = best_response(params, PhiFraction::clamped(phi), discipline);
        let pull = br.target(phi) - phi;
        let direction = pull.signum();
        if pull != 0.0 && last_direction != 0.0 && direction != last_direction {
            step *= 0.5;
        }
        if pull != 0.0 {
            last_direction = direction;
        }
        let next = (phi + step * pull).clamp(0.0, 1.0);
        let moved = (next - phi).abs();
        phi = next;
        points.push((t, phi));
        if moved < options.tolerance {
            converged = true;
            break;
        }
    }

    Ok(Trajectory {
        points,
        terminal: phi,
        converged,
        iterations_used,
    })
}

/// One CSV row of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub phi: f64,
}

impl Trajectory {
    pub fn rows(&self) -> Vec<TrajectoryPoint> {
        self.points
            .iter()
            .map(|&(iteration, phi)| TrajectoryPoint { iteration, phi })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
}

/// Perturbs an equilibrium by `+-epsilon` and checks that both trajectories
/// return to within `epsilon / 10`.
pub fn ess_probe(
    params: &ModelParams,
    discipline: Discipline,
    eq_phi: f64,
    epsilon: f64,
    options: &IterateOptions,
) -> Result<Stability, DynamicsError> {
    if !(epsilon > 0.0 && epsilon <= 0.1) {
        return Err(DynamicsError::InvalidOption(format!(
            "epsilon = {epsilon} not in (0, 0.1]"
        )));
    }
    let set = equilibria(params, discipline);
    if !set.contains(eq_phi, 1e-9) {
        return Err(DynamicsError::NotAnEquilibrium { phi: eq_phi });
    }
    for start in [eq_phi - epsilon, eq_phi + epsilon] {
        let traj = iterate(params, discipline, PhiFraction::clamped(start), options)?;
        if (traj.terminal - eq_phi).abs() > epsilon / 10.0 {
            return Ok(Stability::Unstable);
        }
    }
    Ok(Stability::Stable)
}
