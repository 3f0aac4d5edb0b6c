//! Iterative solver for nonlinear, non-quadratic games with
//! state-dependent occlusions.
//!
//! Each pass rolls out the current strategy, builds a linear-quadratic
//! game in deviations about the iterate, re-detects the occlusion
//! schedule from the iterate, solves the hybrid LQ game, and steps the
//! strategies a fraction of the way toward the candidate update.

mod approx;
mod outer;
mod surrogate;
mod trajectory;
mod unicycle;

pub use approx::{linearize_dynamics, quadraticize_costs};
pub use outer::{solve, IterationRecord, ScheduleSource, SolveOutcome, SolverSettings};
pub use surrogate::LqSurrogateProblem;
pub use trajectory::{check_convergence, get_trajectory, step_toward, ConvergenceCheck, Strategy};
pub use unicycle::{unicycle_step, CostWeights, LaneGeometry, UnicycleProblem};

use nalgebra::DVector;

use crate::game::{LinearDynamicsStage, PlayerStageCost};

/// A dynamic game the iterative solver can reduce to LQ approximations:
/// stagewise dynamics with analytic Jacobians and per-player running
/// costs with analytic quadratic expansions.
pub trait GameProblem {
    fn num_players(&self) -> usize;
    fn state_dim(&self) -> usize;
    fn control_dims(&self) -> Vec<usize>;
    fn horizon(&self) -> usize;
    fn initial_state(&self) -> DVector<f64>;

    /// Advance the dynamics at 1-based stage `t`.
    fn step(&self, t: usize, x: &DVector<f64>, controls: &[DVector<f64>]) -> DVector<f64>;

    /// Jacobians of [`GameProblem::step`] at the given point.
    fn linearize(&self, t: usize, x: &DVector<f64>, controls: &[DVector<f64>]) -> LinearDynamicsStage;

    /// Running cost of `player` at stage `t`.
    fn stage_cost(&self, t: usize, player: usize, x: &DVector<f64>, controls: &[DVector<f64>]) -> f64;

    /// Raw (unregularized, unclamped) gradients and Hessians of the
    /// running cost at the given point, in the stage-cost layout.
    fn quadraticize(
        &self,
        t: usize,
        player: usize,
        x: &DVector<f64>,
        controls: &[DVector<f64>],
    ) -> PlayerStageCost;

    /// Total cost of each player along a trajectory.
    fn total_costs(&self, trajectory: &crate::game::TrajectoryIterate) -> Vec<f64> {
        (0..self.num_players())
            .map(|i| {
                (1..=self.horizon())
                    .map(|t| {
                        self.stage_cost(t, i, &trajectory.states[t - 1], &trajectory.controls[t - 1])
                    })
                    .sum()
            })
            .collect()
    }
}
