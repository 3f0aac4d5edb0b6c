//! Open-loop LQ Nash solver: backward costate recursions through the
//! coupling matrix, and the matching forward state/control generation.

use nalgebra::{DMatrix, DVector};

use crate::error::GameError;
use crate::game::{CostToGo, LqGame, Period};

use super::{solve_own_control, CheckedLu};

/// Costate map coefficients for one stage: player `i`'s equilibrium
/// costate at `t - 1` is `value_mats[i] * x_t + value_vecs[i]`.
#[derive(Clone, Debug)]
pub struct OpenLoopValueStage {
    /// Per-player `n x n` matrices (not symmetric in general for N >= 2).
    pub value_mats: Vec<DMatrix<f64>>,
    /// Per-player length-`n` vectors.
    pub value_vecs: Vec<DVector<f64>>,
}

/// Backward solve output for one open-loop period: stage records for
/// `t_s ..= t_e` plus the terminal seed at `t_e + 1`, kept so controls can
/// be regenerated from any entry state.
#[derive(Clone, Debug)]
pub struct OpenLoopSolution {
    pub period: Period,
    /// Stage records in forward order (`stages[k]` is stage `t_s + k`).
    pub stages: Vec<OpenLoopValueStage>,
    /// The cost-to-go this period was seeded with, valid at `t_e + 1`.
    pub terminal: CostToGo,
}

impl OpenLoopSolution {
    /// Costate coefficients valid at `t + 1` for a stage `t` in the period.
    fn next_values(&self, t: usize) -> (Vec<&DMatrix<f64>>, Vec<&DVector<f64>>) {
        if t == self.period.end {
            (self.terminal.mats.iter().collect(), self.terminal.vecs.iter().collect())
        } else {
            let next = &self.stages[t + 1 - self.period.start];
            (next.value_mats.iter().collect(), next.value_vecs.iter().collect())
        }
    }
}

struct StageCoupling {
    lu: CheckedLu,
    /// `B^j (R^{jj})^-1 (B^j' m^j_{t+1} + r^{jj})` summed over players.
    forcing: DVector<f64>,
}

/// Assemble and factor the coupling matrix
/// `I + sum_j B^j (R^{jj})^-1 B^j' M^j_{t+1}` at stage `t`.
fn stage_coupling(
    game: &LqGame,
    t: usize,
    next_mats: &[&DMatrix<f64>],
    next_vecs: &[&DVector<f64>],
) -> Result<StageCoupling, GameError> {
    let n = game.state_dim();
    let dyn_stage = game.dynamics(t);
    let costs = game.costs(t);

    let mut coupling = DMatrix::<f64>::identity(n, n);
    let mut forcing = DVector::<f64>::zeros(n);
    for j in 0..game.num_players() {
        let b = &dyn_stage.b_mats[j];
        let cost = &costs.players[j];
        let gain_map = solve_own_control(&cost.r_mats[j], &b.transpose(), t)?;
        coupling += b * &gain_map * next_mats[j];
        let w = solve_own_control(
            &cost.r_mats[j],
            &DMatrix::from_column_slice(
                b.ncols(),
                1,
                (b.transpose() * next_vecs[j] + &cost.r_vecs[j]).as_slice(),
            ),
            t,
        )?;
        forcing += b * w.column(0);
    }
    let lu = CheckedLu::new(coupling).check(t, "open-loop coupling matrix")?;
    Ok(StageCoupling { lu, forcing })
}

/// Backward open-loop recursion over one period, seeded with the
/// cost-to-go valid at `t_e + 1`:
///
/// `M^i_t = Q^i_t + A_t' M^i_{t+1} L_t^-1 A_t`,
/// `m^i_t = q^i_t + A_t' (m^i_{t+1} - M^i_{t+1} L_t^-1 f_t)`,
///
/// with `L_t` the coupling matrix and `f_t` its forcing vector.
pub fn solve_lq_open_loop(
    game: &LqGame,
    period: Period,
    terminal: &CostToGo,
) -> Result<OpenLoopSolution, GameError> {
    check_period(game, period)?;
    check_cost_to_go(game, terminal)?;
    let num_players = game.num_players();

    let mut next_mats: Vec<DMatrix<f64>> = terminal.mats.clone();
    let mut next_vecs: Vec<DVector<f64>> = terminal.vecs.clone();
    let mut stages: Vec<OpenLoopValueStage> = Vec::with_capacity(period.len());

    for t in period.stages().rev() {
        let mats_ref: Vec<&DMatrix<f64>> = next_mats.iter().collect();
        let vecs_ref: Vec<&DVector<f64>> = next_vecs.iter().collect();
        let coupling = stage_coupling(game, t, &mats_ref, &vecs_ref)?;

        let dyn_stage = game.dynamics(t);
        let costs = game.costs(t);
        let inv_a = coupling
            .lu
            .solve_matrix(&dyn_stage.a_mat)
            .ok_or(GameError::SingularSystem { stage: t, what: "open-loop coupling matrix", rcond: 0.0 })?;
        let inv_forcing = coupling
            .lu
            .solve_vector(&coupling.forcing)
            .ok_or(GameError::SingularSystem { stage: t, what: "open-loop coupling matrix", rcond: 0.0 })?;

        let a_t = &dyn_stage.a_mat;
        let mut mats = Vec::with_capacity(num_players);
        let mut vecs = Vec::with_capacity(num_players);
        for i in 0..num_players {
            let cost = &costs.players[i];
            mats.push(&cost.q_mat + a_t.transpose() * &next_mats[i] * &inv_a);
            vecs.push(&cost.q_vec + a_t.transpose() * (&next_vecs[i] - &next_mats[i] * &inv_forcing));
        }
        stages.push(OpenLoopValueStage { value_mats: mats.clone(), value_vecs: vecs.clone() });
        next_mats = mats;
        next_vecs = vecs;
    }
    stages.reverse();
    Ok(OpenLoopSolution { period, stages, terminal: terminal.clone() })
}

/// Forward pass over an open-loop period: equilibrium states from
/// `x*_{t+1} = L_t^-1 (A_t x*_t - f_t)` and controls
/// `u^i_t = -(R^{ii})^-1 (B^i'(M^i_{t+1} x*_{t+1} + m^i_{t+1}) + r^{ii})`,
/// seeded at the entry state.
///
/// Returns controls `[stage][player]` for `t_s ..= t_e` and states
/// `x_{t_s} ..= x_{t_e + 1}`.
pub fn open_loop_controls(
    game: &LqGame,
    solution: &OpenLoopSolution,
    x_entry: &DVector<f64>,
) -> Result<(Vec<Vec<DVector<f64>>>, Vec<DVector<f64>>), GameError> {
    let period = solution.period;
    if x_entry.len() != game.state_dim() {
        return Err(GameError::DimensionMismatch {
            stage: period.start,
            what: format!("entry state has length {}, expected {}", x_entry.len(), game.state_dim()),
        });
    }
    let num_players = game.num_players();
    let mut states = Vec::with_capacity(period.len() + 1);
    let mut controls = Vec::with_capacity(period.len());
    states.push(x_entry.clone());

    for t in period.stages() {
        let (next_mats, next_vecs) = solution.next_values(t);
        let coupling = stage_coupling(game, t, &next_mats, &next_vecs)?;
        let dyn_stage = game.dynamics(t);
        let costs = game.costs(t);

        let x_now = states.last().unwrap();
        let x_next = coupling
            .lu
            .solve_vector(&(&dyn_stage.a_mat * x_now - &coupling.forcing))
            .ok_or(GameError::SingularSystem { stage: t, what: "open-loop coupling matrix", rcond: 0.0 })?;

        let mut us = Vec::with_capacity(num_players);
        for i in 0..num_players {
            let b = &dyn_stage.b_mats[i];
            let cost = &costs.players[i];
            let rhs = b.transpose() * (next_mats[i] * &x_next + next_vecs[i]) + &cost.r_vecs[i];
            let u = solve_own_control(&cost.r_mats[i], &DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice()), t)?;
            us.push(-u.column(0).clone_owned());
        }
        controls.push(us);
        states.push(x_next);
    }
    Ok((controls, states))
}

pub(crate) fn check_period(game: &LqGame, period: Period) -> Result<(), GameError> {
    if period.start < 1 || period.start > period.end || period.end > game.horizon() {
        return Err(GameError::BadSchedule {
            horizon: game.horizon(),
            what: format!("period [{},{}] out of bounds", period.start, period.end),
        });
    }
    Ok(())
}

pub(crate) fn check_cost_to_go(game: &LqGame, ctg: &CostToGo) -> Result<(), GameError> {
    let n = game.state_dim();
    if ctg.num_players() != game.num_players() {
        return Err(GameError::DimensionMismatch {
            stage: 0,
            what: format!("cost-to-go covers {} players, game has {}", ctg.num_players(), game.num_players()),
        });
    }
    for (i, (mat, vec)) in ctg.mats.iter().zip(&ctg.vecs).enumerate() {
        if mat.nrows() != n || mat.ncols() != n || vec.len() != n {
            return Err(GameError::DimensionMismatch {
                stage: 0,
                what: format!("cost-to-go entry {i} has wrong dimensions"),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{LinearDynamicsStage, PeriodMode, PlayerStageCost, QuadraticCostStage};
    use crate::lq::oracle::kkt_oracle_solve;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};

    fn full_period(game: &LqGame) -> Period {
        Period { start: 1, end: game.horizon(), mode: PeriodMode::OpenLoop }
    }

    fn scalar_one_player(t: usize) -> LqGame {
        let stage = (
            LinearDynamicsStage { a_mat: dmatrix![1.0], b_mats: vec![dmatrix![1.0]] },
            QuadraticCostStage {
                players: vec![PlayerStageCost {
                    q_mat: dmatrix![1.0],
                    q_vec: dvector![0.0],
                    r_mats: vec![dmatrix![1.0]],
                    r_vecs: vec![dvector![0.0]],
                }],
            },
        );
        LqGame::new(vec![stage; t]).unwrap()
    }

    #[test]
    fn zero_linear_terms_give_zero_value_vectors() {
        let game = scalar_one_player(4);
        let sol = solve_lq_open_loop(&game, full_period(&game), &CostToGo::zero(1, 1)).unwrap();
        for stage in &sol.stages {
            assert_abs_diff_eq!(stage.value_vecs[0][0], 0.0, epsilon = 1e-15);
        }
    }

    // With a zero terminal seed the last-stage recursion must reduce to the
    // raw stage cost: M_T = Q_T, m_T = q_T.
    #[test]
    fn zero_terminal_reproduces_stage_cost_at_horizon() {
        let stage = (
            LinearDynamicsStage { a_mat: dmatrix![0.7], b_mats: vec![dmatrix![0.3]] },
            QuadraticCostStage {
                players: vec![PlayerStageCost {
                    q_mat: dmatrix![2.5],
                    q_vec: dvector![0.4],
                    r_mats: vec![dmatrix![1.0]],
                    r_vecs: vec![dvector![0.1]],
                }],
            },
        );
        let game = LqGame::new(vec![stage; 3]).unwrap();
        let sol = solve_lq_open_loop(&game, full_period(&game), &CostToGo::zero(1, 1)).unwrap();
        assert_abs_diff_eq!(sol.stages[2].value_mats[0][0], 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(sol.stages[2].value_vecs[0][0], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn scalar_controls_match_kkt_oracle() {
        let game = scalar_one_player(2);
        let x1 = dvector![1.0];
        let sol = solve_lq_open_loop(&game, full_period(&game), &CostToGo::zero(1, 1)).unwrap();
        let (controls, states) = open_loop_controls(&game, &sol, &x1).unwrap();
        let eq = kkt_oracle_solve(&game, &x1).unwrap();
        for t in 0..2 {
            assert_abs_diff_eq!(controls[t][0][0], eq.controls[t][0][0], epsilon = 1e-10);
            assert_abs_diff_eq!(states[t][0], eq.states[t][0], epsilon = 1e-10);
        }
        // Hand value from the QP: u_1 = -x_1 / 2.
        assert_abs_diff_eq!(controls[0][0][0], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn returned_states_satisfy_dynamics() {
        let game = scalar_one_player(4);
        let sol = solve_lq_open_loop(&game, full_period(&game), &CostToGo::zero(1, 1)).unwrap();
        let (controls, states) = open_loop_controls(&game, &sol, &dvector![2.0]).unwrap();
        for t in 0..4 {
            let stepped = game.dynamics(t + 1).step(&states[t], &controls[t]);
            assert_abs_diff_eq!(stepped[0], states[t + 1][0], epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_coupling_is_reported_with_stage() {
        // Terminal seed S = -1 makes the scalar coupling 1 + S = 0 at the
        // last stage.
        let game = scalar_one_player(2);
        let terminal = CostToGo {
            mats: vec![dmatrix![-1.0]],
            vecs: vec![dvector![0.0]],
            consts: vec![0.0],
        };
        let err = solve_lq_open_loop(&game, full_period(&game), &terminal).unwrap_err();
        match err {
            GameError::SingularSystem { stage, .. } => assert_eq!(stage, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
