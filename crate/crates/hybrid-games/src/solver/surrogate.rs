//! A linear-quadratic game wrapped as a [`GameProblem`], so the iterative
//! loop can be exercised on problems whose exact solution is known.

use nalgebra::DVector;

use crate::game::{LinearDynamicsStage, LqGame, PlayerStageCost};

use super::GameProblem;

/// Exposes an [`LqGame`] through the nonlinear-problem interface. The
/// linearization returns the true stage dynamics and the quadratic
/// expansion recenters the true stage cost, so a full-step iteration of
/// the outer loop must land on the direct hybrid solution.
#[derive(Clone, Debug)]
pub struct LqSurrogateProblem {
    pub game: LqGame,
    pub x1: DVector<f64>,
}

impl GameProblem for LqSurrogateProblem {
    fn num_players(&self) -> usize {
        self.game.num_players()
    }

    fn state_dim(&self) -> usize {
        self.game.state_dim()
    }

    fn control_dims(&self) -> Vec<usize> {
        self.game.control_dims().to_vec()
    }

    fn horizon(&self) -> usize {
        self.game.horizon()
    }

    fn initial_state(&self) -> DVector<f64> {
        self.x1.clone()
    }

    fn step(&self, t: usize, x: &DVector<f64>, controls: &[DVector<f64>]) -> DVector<f64> {
        self.game.dynamics(t).step(x, controls)
    }

    fn linearize(&self, t: usize, _x: &DVector<f64>, _controls: &[DVector<f64>]) -> LinearDynamicsStage {
        self.game.dynamics(t).clone()
    }

    fn stage_cost(&self, t: usize, player: usize, x: &DVector<f64>, controls: &[DVector<f64>]) -> f64 {
        self.game.stage_cost(t, player, x, controls)
    }

    fn quadraticize(
        &self,
        t: usize,
        player: usize,
        x: &DVector<f64>,
        controls: &[DVector<f64>],
    ) -> PlayerStageCost {
        let cost = &self.game.costs(t).players[player];
        PlayerStageCost {
            q_mat: cost.q_mat.clone(),
            q_vec: &cost.q_mat * x + &cost.q_vec,
            r_mats: cost.r_mats.clone(),
            r_vecs: cost
                .r_mats
                .iter()
                .zip(&cost.r_vecs)
                .zip(controls)
                .map(|((r, rv), u)| r * u + rv)
                .collect(),
        }
    }
}
