//! Brute-force verification oracles: a dense stacked KKT solver for
//! open-loop equilibria, a single-player quadratic-program solver, and a
//! textbook affine LQR recursion for best responses against fixed
//! co-player policies.
//!
//! These deliberately avoid the coupling-matrix recursions used by the
//! production solvers so the two paths stay independent.

use nalgebra::{DMatrix, DVector};

use crate::error::GameError;
use crate::game::{CostToGo, LqGame, Period, PeriodMode};

use super::{symmetrize, CheckedLu};

/// Open-loop equilibrium trajectory from a dense KKT solve.
#[derive(Clone, Debug)]
pub struct OpenLoopEquilibrium {
    /// States over the period including the post-period state
    /// (`x_{t_s} ..= x_{t_e + 1}`).
    pub states: Vec<DVector<f64>>,
    /// Controls indexed `[stage][player]` over the period.
    pub controls: Vec<Vec<DVector<f64>>>,
    /// Costate sequences indexed `[stage][player]`.
    pub multipliers: Vec<Vec<DVector<f64>>>,
    /// Max-abs residual of the assembled linear system at the solution.
    pub residual: f64,
}

/// Solve the full-horizon open-loop Nash equilibrium by assembling every
/// player's stationarity conditions and the dynamics into one dense linear
/// system. Intended as a test surface for small games (stacked dimension
/// up to a couple thousand).
pub fn kkt_oracle_solve(game: &LqGame, x1: &DVector<f64>) -> Result<OpenLoopEquilibrium, GameError> {
    let period = Period { start: 1, end: game.horizon(), mode: PeriodMode::OpenLoop };
    let terminal = CostToGo::zero(game.state_dim(), game.num_players());
    kkt_solve_period(game, period, x1, &terminal, None)
}

/// Dense KKT solve restricted to one period, with a terminal quadratic
/// `1/2 x'S x + s'x` per player valid at `t_e + 1` and an optional known
/// additive drift `d_t` in the dynamics (`x' = A x + sum B_j u_j + d_t`).
///
/// Unknown layout: `[x_{t_s+1..t_e+1} | u (stage-major) | lambda (player-major)]`.
pub fn kkt_solve_period(
    game: &LqGame,
    period: Period,
    x_entry: &DVector<f64>,
    terminal: &CostToGo,
    drift: Option<&[DVector<f64>]>,
) -> Result<OpenLoopEquilibrium, GameError> {
    let n = game.state_dim();
    let num_players = game.num_players();
    let dims = game.control_dims().to_vec();
    let m_total: usize = dims.iter().sum();
    let k_len = period.len();

    let x_off = 0;
    let u_off = k_len * n;
    let lam_off = u_off + k_len * m_total;
    let dim = lam_off + num_players * k_len * n;

    // Index helpers (k is 0-based within the period).
    let x_idx = |k: usize| x_off + k * n; // x_{t_s + k + 1}
    let u_idx = |k: usize, i: usize| {
        let mut off = u_off + k * m_total;
        for j in 0..i {
            off += dims[j];
        }
        off
    };
    let lam_idx = |i: usize, k: usize| lam_off + (i * k_len + k) * n;

    let mut mat = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    let mut row = 0;

    // Control stationarity: R^{ii} u^i_t + B^i' lambda^i_t = -r^{ii}.
    for i in 0..num_players {
        for k in 0..k_len {
            let t = period.start + k;
            let cost = &game.costs(t).players[i];
            let b = &game.dynamics(t).b_mats[i];
            mat.view_mut((row, u_idx(k, i)), (dims[i], dims[i]))
                .copy_from(&cost.r_mats[i]);
            mat.view_mut((row, lam_idx(i, k)), (dims[i], n))
                .copy_from(&b.transpose());
            rhs.rows_mut(row, dims[i]).copy_from(&(-&cost.r_vecs[i]));
            row += dims[i];
        }
    }

    // State stationarity at interior stages:
    // Q^i_t x_t + q^i_t - lambda^i_{t-1} + A_t' lambda^i_t = 0.
    for i in 0..num_players {
        for k in 1..k_len {
            let t = period.start + k;
            let cost = &game.costs(t).players[i];
            let a = &game.dynamics(t).a_mat;
            mat.view_mut((row, x_idx(k - 1)), (n, n)).copy_from(&cost.q_mat);
            mat.view_mut((row, lam_idx(i, k - 1)), (n, n))
                .copy_from(&(-DMatrix::<f64>::identity(n, n)));
            mat.view_mut((row, lam_idx(i, k)), (n, n)).copy_from(&a.transpose());
            rhs.rows_mut(row, n).copy_from(&(-&cost.q_vec));
            row += n;
        }
        // Terminal stationarity: sym(S^i) x_{t_e+1} + s^i - lambda^i_{t_e} = 0.
        let s_sym = symmetrize(&terminal.mats[i]);
        mat.view_mut((row, x_idx(k_len - 1)), (n, n)).copy_from(&s_sym);
        mat.view_mut((row, lam_idx(i, k_len - 1)), (n, n))
            .copy_from(&(-DMatrix::<f64>::identity(n, n)));
        rhs.rows_mut(row, n).copy_from(&(-&terminal.vecs[i]));
        row += n;
    }

    // Dynamics feasibility: x_{t+1} - A_t x_t - sum_j B^j_t u^j_t = d_t.
    for k in 0..k_len {
        let t = period.start + k;
        let dyn_stage = game.dynamics(t);
        mat.view_mut((row, x_idx(k)), (n, n))
            .copy_from(&DMatrix::<f64>::identity(n, n));
        if k > 0 {
            mat.view_mut((row, x_idx(k - 1)), (n, n)).copy_from(&(-&dyn_stage.a_mat));
        }
        for (j, b) in dyn_stage.b_mats.iter().enumerate() {
            mat.view_mut((row, u_idx(k, j)), (n, dims[j])).copy_from(&(-b));
        }
        let mut r = DVector::<f64>::zeros(n);
        if k == 0 {
            r += &dyn_stage.a_mat * x_entry;
        }
        if let Some(d) = drift {
            r += &d[k];
        }
        rhs.rows_mut(row, n).copy_from(&r);
        row += n;
    }
    debug_assert_eq!(row, dim);

    let lu = CheckedLu::new(mat.clone()).check(period.start, "stacked KKT system")?;
    let sol = lu.solve_vector(&rhs).ok_or(GameError::SingularSystem {
        stage: period.start,
        what: "stacked KKT system",
        rcond: 0.0,
    })?;
    let residual = (&mat * &sol - &rhs).amax();

    let mut states = Vec::with_capacity(k_len + 1);
    states.push(x_entry.clone());
    for k in 0..k_len {
        states.push(sol.rows(x_idx(k), n).into_owned());
    }
    let controls = (0..k_len)
        .map(|k| {
            (0..num_players)
                .map(|i| sol.rows(u_idx(k, i), dims[i]).into_owned())
                .collect()
        })
        .collect();
    let multipliers = (0..k_len)
        .map(|k| {
            (0..num_players)
                .map(|i| sol.rows(lam_idx(i, k), n).into_owned())
                .collect()
        })
        .collect();

    Ok(OpenLoopEquilibrium { states, controls, multipliers, residual })
}

/// Best response of one player over a period when every other player's
/// control sequence is held fixed: a single-player quadratic program
/// solved through its own dense KKT system.
///
/// `fixed_controls` is indexed `[stage][player]`; the entry for `player`
/// itself is ignored. The terminal value is player `i`'s quadratic from
/// `terminal` at `t_e + 1`.
pub fn open_loop_best_response(
    game: &LqGame,
    period: Period,
    player: usize,
    x_entry: &DVector<f64>,
    fixed_controls: &[Vec<DVector<f64>>],
    terminal: &CostToGo,
) -> Result<Vec<DVector<f64>>, GameError> {
    if player >= game.num_players() {
        return Err(GameError::UnknownPlayer { index: player, count: game.num_players() });
    }
    // Reduce to a one-player game whose dynamics absorb the other
    // players' fixed controls as a known drift.
    let mut stages = Vec::with_capacity(period.len());
    let mut drift = Vec::with_capacity(period.len());
    for (k, t) in period.stages().enumerate() {
        let dyn_stage = game.dynamics(t);
        let cost = &game.costs(t).players[player];
        let mut d = DVector::<f64>::zeros(game.state_dim());
        for (j, b) in dyn_stage.b_mats.iter().enumerate() {
            if j != player {
                d += b * &fixed_controls[k][j];
            }
        }
        drift.push(d);
        stages.push((
            crate::game::LinearDynamicsStage {
                a_mat: dyn_stage.a_mat.clone(),
                b_mats: vec![dyn_stage.b_mats[player].clone()],
            },
            crate::game::QuadraticCostStage {
                players: vec![crate::game::PlayerStageCost {
                    q_mat: cost.q_mat.clone(),
                    q_vec: cost.q_vec.clone(),
                    r_mats: vec![cost.r_mats[player].clone()],
                    r_vecs: vec![cost.r_vecs[player].clone()],
                }],
            },
        ));
    }
    let single = LqGame::new(stages)?;
    let single_period = Period { start: 1, end: period.len(), mode: PeriodMode::OpenLoop };
    let single_terminal = CostToGo {
        mats: vec![terminal.mats[player].clone()],
        vecs: vec![terminal.vecs[player].clone()],
        consts: vec![terminal.consts[player]],
    };
    let eq = kkt_solve_period(&single, single_period, x_entry, &single_terminal, Some(&drift))?;
    Ok(eq.controls.into_iter().map(|mut us| us.remove(0)).collect())
}

/// Affine time-varying LQR policies for one player holding all other
/// players' affine feedback policies fixed, via the textbook
/// inverse-based Riccati recursion.
///
/// `co_gains[k][j]` / `co_offsets[k][j]` give player `j`'s policy at the
/// `k`-th stage of the period; entries for `player` itself are ignored.
/// Returns `(gains, offsets)` for `u = -K x - k` over the period.
pub fn feedback_best_response(
    game: &LqGame,
    period: Period,
    player: usize,
    co_gains: &[Vec<DMatrix<f64>>],
    co_offsets: &[Vec<DVector<f64>>],
    terminal: &CostToGo,
) -> Result<(Vec<DMatrix<f64>>, Vec<DVector<f64>>), GameError> {
    if player >= game.num_players() {
        return Err(GameError::UnknownPlayer { index: player, count: game.num_players() });
    }
    let n = game.state_dim();
    let mut z_next = symmetrize(&terminal.mats[player]);
    let mut zeta_next = terminal.vecs[player].clone();

    let mut gains = vec![DMatrix::<f64>::zeros(0, 0); period.len()];
    let mut offsets = vec![DVector::<f64>::zeros(0); period.len()];

    for k in (0..period.len()).rev() {
        let t = period.start + k;
        let dyn_stage = game.dynamics(t);
        let cost = &game.costs(t).players[player];
        let b_own = &dyn_stage.b_mats[player];

        // Substitute fixed co-player policies into dynamics and cost.
        let mut a_eff = dyn_stage.a_mat.clone();
        let mut c_eff = DVector::<f64>::zeros(n);
        let mut q_eff = cost.q_mat.clone();
        let mut qv_eff = cost.q_vec.clone();
        for j in 0..game.num_players() {
            if j == player {
                continue;
            }
            let p_j = &co_gains[k][j];
            let a_j = &co_offsets[k][j];
            a_eff -= &dyn_stage.b_mats[j] * p_j;
            c_eff -= &dyn_stage.b_mats[j] * a_j;
            q_eff += p_j.transpose() * &cost.r_mats[j] * p_j;
            qv_eff += p_j.transpose() * (&cost.r_mats[j] * a_j - &cost.r_vecs[j]);
        }

        let g = &cost.r_mats[player] + b_own.transpose() * &z_next * b_own;
        let g_lu = CheckedLu::new(g).check(t, "best-response control Hessian")?;
        let gain = g_lu
            .solve_matrix(&(b_own.transpose() * &z_next * &a_eff))
            .ok_or(GameError::SingularSystem { stage: t, what: "best-response control Hessian", rcond: 0.0 })?;
        let offset = g_lu
            .solve_vector(&(b_own.transpose() * (&z_next * &c_eff + &zeta_next) + &cost.r_vecs[player]))
            .ok_or(GameError::SingularSystem { stage: t, what: "best-response control Hessian", rcond: 0.0 })?;

        let f_eff = &a_eff - b_own * &gain;
        let gamma = &c_eff - b_own * &offset;
        let z_now = &q_eff
            + gain.transpose() * &cost.r_mats[player] * &gain
            + f_eff.transpose() * &z_next * &f_eff;
        let zeta_now = &qv_eff + gain.transpose() * (&cost.r_mats[player] * &offset - &cost.r_vecs[player])
            + f_eff.transpose() * (&z_next * &gamma + &zeta_next);

        z_next = symmetrize(&z_now);
        zeta_next = zeta_now;
        gains[k] = gain;
        offsets[k] = offset;
    }
    Ok((gains, offsets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{LinearDynamicsStage, PlayerStageCost, QuadraticCostStage};
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};

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
    fn zero_initial_state_gives_zero_solution() {
        let game = scalar_one_player(3);
        let eq = kkt_oracle_solve(&game, &dvector![0.0]).unwrap();
        for us in &eq.controls {
            assert_abs_diff_eq!(us[0][0], 0.0, epsilon = 1e-14);
        }
        for x in &eq.states {
            assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn kkt_residual_is_tiny() {
        let game = scalar_one_player(4);
        let eq = kkt_oracle_solve(&game, &dvector![2.0]).unwrap();
        assert!(eq.residual < 1e-12, "residual {}", eq.residual);
    }

    // Hand-computable check: T=2, A=B=Q=R=1, no terminal cost. Stage costs
    // are 1/2(x_t^2 + u_t^2). Only the t=1 control matters (x_2 is the last
    // state that is penalized... x_2 enters the stage-2 cost), u_2 = 0.
    // Minimize 1/2(x1^2 + u1^2) + 1/2((x1+u1)^2 + u2^2):
    // d/du1 = u1 + (x1 + u1) = 0 -> u1 = -x1/2; u2 = 0.
    #[test]
    fn kkt_matches_hand_solution() {
        let game = scalar_one_player(2);
        let eq = kkt_oracle_solve(&game, &dvector![1.0]).unwrap();
        assert_abs_diff_eq!(eq.controls[0][0][0], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(eq.controls[1][0][0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eq.states[1][0], 0.5, epsilon = 1e-12);
    }

    // The best response of the only player in a one-player game is the
    // equilibrium itself.
    #[test]
    fn single_player_best_response_matches_kkt() {
        let game = scalar_one_player(3);
        let x1 = dvector![1.5];
        let eq = kkt_oracle_solve(&game, &x1).unwrap();
        let period = Period { start: 1, end: 3, mode: PeriodMode::OpenLoop };
        let terminal = CostToGo::zero(1, 1);
        let br = open_loop_best_response(&game, period, 0, &x1, &eq.controls, &terminal).unwrap();
        for (u_br, u_eq) in br.iter().zip(&eq.controls) {
            assert_abs_diff_eq!(u_br[0], u_eq[0][0], epsilon = 1e-12);
        }
    }
}
