//! The iterative outer loop: rollout, LQ approximation, occlusion
//! re-detection, hybrid solve, damped strategy update, convergence test.

use nalgebra::DVector;

use crate::error::GameError;
use crate::game::{InformationSchedule, LqGame, TrajectoryIterate};
use crate::lq::solve_lq_hybrid;
use crate::visibility::{find_occlusions, BodyTemplate, OccluderSet};

use super::approx::{linearize_dynamics, quadraticize_costs};
use super::trajectory::{check_convergence, get_trajectory, Strategy};
use super::GameProblem;

/// Outer-loop configuration.
#[derive(Clone, Debug)]
pub struct SolverSettings {
    /// Fraction of each candidate update applied per iteration, in (0, 1].
    pub step_size: f64,
    pub max_iterations: usize,
    /// Sup-norm threshold on the state change between iterates (meters at
    /// driving scale).
    pub state_tolerance: f64,
    /// Sup-norm threshold on the control change between iterates.
    pub control_tolerance: f64,
    /// Added to every own-control Hessian so the LQ games stay well posed.
    pub control_regularization: f64,
    /// Eigenvalue floor for state-cost Hessians.
    pub psd_floor: f64,
    /// Step-size halvings allowed when a rollout turns non-finite.
    pub max_backoffs: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            max_iterations: 200,
            state_tolerance: 1e-2,
            control_tolerance: 1e-2,
            control_regularization: 1e-3,
            psd_floor: 0.0,
            max_backoffs: 10,
        }
    }
}

/// Where each iteration's information schedule comes from.
#[derive(Clone, Debug)]
pub enum ScheduleSource {
    /// Re-detect occlusions from the current iterate every pass.
    Detected {
        geometry: Vec<BodyTemplate>,
        occluders: OccluderSet,
        interacting_pairs: Vec<(usize, usize)>,
        samples_per_edge: usize,
    },
    /// Use one fixed schedule for every iteration; no visibility tests run.
    Fixed(InformationSchedule),
}

/// One row of the iteration log.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iteration: usize,
    /// Occlusion flags of the schedule used this iteration.
    pub occluded_flags: Vec<bool>,
    /// Per-player total cost of the iterate produced this iteration.
    pub costs: Vec<f64>,
    pub max_state_change: f64,
    pub max_control_change: f64,
    /// Step size actually applied after backoffs.
    pub step_size_used: f64,
    pub backoffs: usize,
}

/// Result of an iterative solve.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub converged: bool,
    /// Iterations actually executed.
    pub iterations: usize,
    pub trajectory: TrajectoryIterate,
    pub log: Vec<IterationRecord>,
}

/// Iteratively solve a nonlinear game, re-approximating it as a hybrid
/// LQ game about the current iterate until the iterate stops moving.
///
/// `initial_controls` defaults to all-zero sequences (each vehicle holds
/// its initial speed and heading). When the iteration budget runs out the
/// best iterate so far is returned with `converged = false`.
pub fn solve(
    problem: &dyn GameProblem,
    schedule_source: &ScheduleSource,
    settings: &SolverSettings,
    initial_controls: Option<Vec<Vec<DVector<f64>>>>,
) -> Result<SolveOutcome, GameError> {
    let horizon = problem.horizon();
    let x1 = problem.initial_state();
    let controls = initial_controls.unwrap_or_else(|| {
        vec![
            problem.control_dims().iter().map(|&m| DVector::zeros(m)).collect();
            horizon
        ]
    });

    let mut current = get_trajectory(problem, &x1, Strategy::Controls(&controls))?;
    let mut log: Vec<IterationRecord> = Vec::new();

    for iteration in 1..=settings.max_iterations {
        let schedule = match schedule_source {
            ScheduleSource::Detected { geometry, occluders, interacting_pairs, samples_per_edge } => {
                find_occlusions(&current, geometry, occluders, interacting_pairs, *samples_per_edge)?
            }
            ScheduleSource::Fixed(schedule) => schedule.clone(),
        };
        current.occluded = schedule.to_flags();

        let dynamics = linearize_dynamics(&current, problem);
        let costs = quadraticize_costs(&current, problem, settings);
        let deviation_game = LqGame::new(dynamics.into_iter().zip(costs).collect())?;
        let solution = solve_lq_hybrid(&deviation_game, &schedule)?;

        let mut step_size = settings.step_size;
        let mut backoffs = 0;
        let next = loop {
            match get_trajectory(
                problem,
                &x1,
                Strategy::Hybrid {
                    base: &current,
                    solution: &solution,
                    deviation_game: &deviation_game,
                    step_size,
                },
            ) {
                Ok(t) => break t,
                Err(GameError::NonFiniteState { .. }) if backoffs < settings.max_backoffs => {
                    step_size *= 0.5;
                    backoffs += 1;
                }
                Err(e) => return Err(e),
            }
        };

        let check = check_convergence(&current, &next, settings);
        log.push(IterationRecord {
            iteration,
            occluded_flags: schedule.to_flags(),
            costs: problem.total_costs(&next),
            max_state_change: check.max_state_change,
            max_control_change: check.max_control_change,
            step_size_used: step_size,
            backoffs,
        });
        current = next;

        if check.converged {
            return Ok(SolveOutcome { converged: true, iterations: iteration, trajectory: current, log });
        }
    }

    Ok(SolveOutcome {
        converged: false,
        iterations: settings.max_iterations,
        trajectory: current,
        log,
    })
}
