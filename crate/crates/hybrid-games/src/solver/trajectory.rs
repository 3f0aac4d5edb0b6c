//! Forward trajectory generation under plain control sequences or hybrid
//! deviation strategies, plus the step and convergence helpers of the
//! outer loop.

use nalgebra::DVector;

use crate::error::GameError;
use crate::game::{LqGame, TrajectoryIterate};
use crate::lq::{open_loop_controls, HybridSolution, PeriodSolution};

use super::{GameProblem, SolverSettings};

/// What to roll forward.
pub enum Strategy<'a> {
    /// Fixed control sequences indexed `[stage][player]`.
    Controls(&'a [Vec<DVector<f64>>]),
    /// Deviation strategies from a hybrid LQ solve about `base`:
    /// feedback stages apply `u = base_u - step_size * offset - gain * (x - base_x)`;
    /// each open-loop period regenerates its deviation sequence once from
    /// the realized entry deviation and applies it without state feedback.
    Hybrid {
        base: &'a TrajectoryIterate,
        solution: &'a HybridSolution,
        deviation_game: &'a LqGame,
        step_size: f64,
    },
}

/// Elementwise strategy update `u + step_size * delta` over per-stage,
/// per-player control sequences.
pub fn step_toward(
    controls: &[Vec<DVector<f64>>],
    deltas: &[Vec<DVector<f64>>],
    step_size: f64,
) -> Vec<Vec<DVector<f64>>> {
    controls
        .iter()
        .zip(deltas)
        .map(|(us, ds)| us.iter().zip(ds).map(|(u, d)| u + d * step_size).collect())
        .collect()
}

fn check_finite(x: &DVector<f64>, stage: usize) -> Result<(), GameError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GameError::NonFiniteState { stage })
    }
}

/// Roll the problem dynamics forward from `x1` under the given strategy.
pub fn get_trajectory(
    problem: &dyn GameProblem,
    x1: &DVector<f64>,
    strategy: Strategy<'_>,
) -> Result<TrajectoryIterate, GameError> {
    let horizon = problem.horizon();
    match strategy {
        Strategy::Controls(controls) => {
            if controls.len() != horizon {
                return Err(GameError::InvalidInput(format!(
                    "{} control stages for horizon {horizon}",
                    controls.len()
                )));
            }
            let mut states = Vec::with_capacity(horizon);
            let mut x = x1.clone();
            for t in 1..=horizon {
                check_finite(&x, t)?;
                let x_next = problem.step(t, &x, &controls[t - 1]);
                states.push(std::mem::replace(&mut x, x_next));
            }
            Ok(TrajectoryIterate {
                states,
                controls: controls.to_vec(),
                occluded: vec![false; horizon],
            })
        }
        Strategy::Hybrid { base, solution, deviation_game, step_size } => {
            let schedule = solution.schedule();
            let mut states = Vec::with_capacity(horizon);
            let mut controls = Vec::with_capacity(horizon);
            let mut x = x1.clone();

            for (period, segment) in schedule.periods().iter().zip(solution.segments()) {
                match segment {
                    PeriodSolution::Feedback(stage_records) => {
                        for (k, t) in period.stages().enumerate() {
                            check_finite(&x, t)?;
                            let record = &stage_records[k];
                            let dx = &x - &base.states[t - 1];
                            let us: Vec<DVector<f64>> = (0..problem.num_players())
                                .map(|i| {
                                    &base.controls[t - 1][i]
                                        - &record.offsets[i] * step_size
                                        - &record.gains[i] * &dx
                                })
                                .collect();
                            let x_next = problem.step(t, &x, &us);
                            states.push(std::mem::replace(&mut x, x_next));
                            controls.push(us);
                        }
                    }
                    PeriodSolution::OpenLoop(segment_solution) => {
                        let entry = period.start;
                        check_finite(&x, entry)?;
                        let dx_entry = &x - &base.states[entry - 1];
                        let (deltas, _) =
                            open_loop_controls(deviation_game, segment_solution, &dx_entry)?;
                        for (k, t) in period.stages().enumerate() {
                            check_finite(&x, t)?;
                            let us: Vec<DVector<f64>> = (0..problem.num_players())
                                .map(|i| &base.controls[t - 1][i] + &deltas[k][i] * step_size)
                                .collect();
                            let x_next = problem.step(t, &x, &us);
                            states.push(std::mem::replace(&mut x, x_next));
                            controls.push(us);
                        }
                    }
                }
            }
            check_finite(&x, horizon)?;
            Ok(TrajectoryIterate {
                states,
                controls,
                occluded: schedule.to_flags(),
            })
        }
    }
}

/// Joint sup-norm convergence check with arg-max diagnostics.
#[derive(Clone, Debug)]
pub struct ConvergenceCheck {
    pub converged: bool,
    pub max_state_change: f64,
    /// 1-based stage where the state change peaks.
    pub state_argmax_stage: usize,
    pub max_control_change: f64,
    /// 1-based stage where the control change peaks.
    pub control_argmax_stage: usize,
}

/// Compare two iterates: converged when both the state and the control
/// sup-norm changes fall below their tolerances.
pub fn check_convergence(
    previous: &TrajectoryIterate,
    next: &TrajectoryIterate,
    settings: &SolverSettings,
) -> ConvergenceCheck {
    let mut max_state_change = 0.0_f64;
    let mut state_argmax_stage = 1;
    for (t, (a, b)) in previous.states.iter().zip(&next.states).enumerate() {
        let d = (a - b).amax();
        if d > max_state_change {
            max_state_change = d;
            state_argmax_stage = t + 1;
        }
    }
    let mut max_control_change = 0.0_f64;
    let mut control_argmax_stage = 1;
    for (t, (us, vs)) in previous.controls.iter().zip(&next.controls).enumerate() {
        for (u, v) in us.iter().zip(vs) {
            let d = (u - v).amax();
            if d > max_control_change {
                max_control_change = d;
                control_argmax_stage = t + 1;
            }
        }
    }
    ConvergenceCheck {
        converged: max_state_change < settings.state_tolerance
            && max_control_change < settings.control_tolerance,
        max_state_change,
        state_argmax_stage,
        max_control_change,
        control_argmax_stage,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn step_toward_identities() {
        let u = vec![vec![DVector::from_vec(vec![1.0, 2.0])]];
        let d = vec![vec![DVector::from_vec(vec![4.0, -2.0])]];
        let zero = vec![vec![DVector::zeros(2)]];

        let unchanged = step_toward(&u, &zero, 0.7);
        assert_eq!(unchanged[0][0], u[0][0]);

        let full = step_toward(&u, &d, 1.0);
        assert_eq!(full[0][0], DVector::from_vec(vec![5.0, 0.0]));

        let half = step_toward(&u, &d, 0.5);
        assert_eq!(half[0][0], DVector::from_vec(vec![3.0, 1.0]));
    }

    fn constant_trajectory(value: f64, horizon: usize) -> TrajectoryIterate {
        TrajectoryIterate {
            states: vec![DVector::from_element(3, value); horizon],
            controls: vec![vec![DVector::from_element(2, value)]; horizon],
            occluded: vec![false; horizon],
        }
    }

    #[test]
    fn identical_iterates_converge() {
        let a = constant_trajectory(1.0, 4);
        let check = check_convergence(&a, &a.clone(), &SolverSettings::default());
        assert!(check.converged);
        assert_eq!(check.max_state_change, 0.0);
    }

    #[test]
    fn large_state_change_blocks_convergence_and_reports_stage() {
        let settings = SolverSettings::default();
        let a = constant_trajectory(1.0, 4);
        let mut b = a.clone();
        b.states[2][1] += 10.0 * settings.state_tolerance;
        let check = check_convergence(&a, &b, &settings);
        assert!(!check.converged);
        assert_eq!(check.state_argmax_stage, 3);
        assert_abs_diff_eq!(check.max_state_change, 10.0 * settings.state_tolerance, epsilon = 1e-15);
    }
}
