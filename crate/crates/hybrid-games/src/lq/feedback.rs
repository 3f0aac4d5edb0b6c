//! Feedback LQ Nash solver: at each stage all players' gains are coupled
//! through one stacked linear system, then quadratic value functions are
//! propagated backward.

use nalgebra::{DMatrix, DVector};

use crate::error::GameError;
use crate::game::{CostToGo, LqGame, Period};

use super::open_loop::{check_cost_to_go, check_period};
use super::{control_offsets, symmetrize_drift, CheckedLu};

/// Feedback solution data for one stage: affine policies `u^i = -P^i x - a^i`
/// and the quadratic value function `1/2 x'Z^i x + z^i'x + c^i` of each
/// player at this stage.
#[derive(Clone, Debug)]
pub struct FeedbackValueStage {
    /// Per-player gains `P^i`, `m_i x n`.
    pub gains: Vec<DMatrix<f64>>,
    /// Per-player offsets `a^i`, length `m_i`.
    pub offsets: Vec<DVector<f64>>,
    /// Per-player value matrices `Z^i`, symmetric `n x n`.
    pub value_mats: Vec<DMatrix<f64>>,
    /// Per-player value vectors, length `n`.
    pub value_vecs: Vec<DVector<f64>>,
    /// Per-player value constants.
    pub value_consts: Vec<f64>,
}

/// Backward feedback recursion over one period, seeded with the value
/// quadratic valid at `t_e + 1`.
///
/// At each stage the policies of all players solve the stacked system
/// whose `(i, j)` block is `B^i' Z^i_{t+1} B^j` (plus `R^{ii}` on the
/// diagonal), with right-hand sides `B^i' Z^i_{t+1} A` for the gains and
/// `B^i' z^i_{t+1} + r^{ii}` for the offsets; one factorization serves
/// both. Value functions then advance through the closed-loop map
/// `F = A - sum_j B^j P^j`, `b = -sum_j B^j a^j`.
pub fn solve_lq_feedback(
    game: &LqGame,
    period: Period,
    terminal: &CostToGo,
) -> Result<Vec<FeedbackValueStage>, GameError> {
    check_period(game, period)?;
    check_cost_to_go(game, terminal)?;

    let n = game.state_dim();
    let num_players = game.num_players();
    let dims = game.control_dims().to_vec();
    let offsets_of = control_offsets(&dims);
    let m_total: usize = dims.iter().sum();

    // The terminal quadratic is consumed as given. A hand-off from an
    // open-loop period can be nonsymmetric for N >= 2; using it raw keeps
    // the recursion covariant under re-centering about a trajectory
    // iterate, which the iterative outer loop relies on.
    let mut z_next: Vec<DMatrix<f64>> = terminal.mats.clone();
    let mut zeta_next: Vec<DVector<f64>> = terminal.vecs.clone();
    let mut const_next: Vec<f64> = terminal.consts.clone();

    let mut stages: Vec<FeedbackValueStage> = Vec::with_capacity(period.len());

    for t in period.stages().rev() {
        let dyn_stage = game.dynamics(t);
        let costs = game.costs(t);
        let a_t = &dyn_stage.a_mat;

        let mut coupled = DMatrix::<f64>::zeros(m_total, m_total);
        let mut rhs_gain = DMatrix::<f64>::zeros(m_total, n);
        let mut rhs_offset = DVector::<f64>::zeros(m_total);
        for i in 0..num_players {
            let b_i = &dyn_stage.b_mats[i];
            let bt_z = b_i.transpose() * &z_next[i];
            for j in 0..num_players {
                let mut block = &bt_z * &dyn_stage.b_mats[j];
                if i == j {
                    block += &costs.players[i].r_mats[i];
                }
                coupled
                    .view_mut((offsets_of[i], offsets_of[j]), (dims[i], dims[j]))
                    .copy_from(&block);
            }
            rhs_gain.view_mut((offsets_of[i], 0), (dims[i], n)).copy_from(&(&bt_z * a_t));
            rhs_offset
                .rows_mut(offsets_of[i], dims[i])
                .copy_from(&(b_i.transpose() * &zeta_next[i] + &costs.players[i].r_vecs[i]));
        }

        let lu = CheckedLu::new(coupled).check(t, "coupled feedback system")?;
        let gain_stack = lu
            .solve_matrix(&rhs_gain)
            .ok_or(GameError::SingularSystem { stage: t, what: "coupled feedback system", rcond: 0.0 })?;
        let offset_stack = lu
            .solve_vector(&rhs_offset)
            .ok_or(GameError::SingularSystem { stage: t, what: "coupled feedback system", rcond: 0.0 })?;

        let gains: Vec<DMatrix<f64>> = (0..num_players)
            .map(|i| gain_stack.rows(offsets_of[i], dims[i]).into_owned())
            .collect();
        let offs: Vec<DVector<f64>> = (0..num_players)
            .map(|i| offset_stack.rows(offsets_of[i], dims[i]).into_owned())
            .collect();

        // Closed-loop dynamics under all policies.
        let mut f_mat = a_t.clone();
        let mut beta = DVector::<f64>::zeros(n);
        for j in 0..num_players {
            f_mat -= &dyn_stage.b_mats[j] * &gains[j];
            beta -= &dyn_stage.b_mats[j] * &offs[j];
        }

        let mut z_now = Vec::with_capacity(num_players);
        let mut zeta_now = Vec::with_capacity(num_players);
        let mut const_now = Vec::with_capacity(num_players);
        for i in 0..num_players {
            let cost = &costs.players[i];
            let mut z = cost.q_mat.clone();
            let mut zeta = cost.q_vec.clone();
            let mut c = const_next[i];
            for j in 0..num_players {
                z += gains[j].transpose() * &cost.r_mats[j] * &gains[j];
                zeta += gains[j].transpose() * (&cost.r_mats[j] * &offs[j] - &cost.r_vecs[j]);
                c += 0.5 * (offs[j].transpose() * &cost.r_mats[j] * &offs[j])[(0, 0)]
                    - cost.r_vecs[j].dot(&offs[j]);
            }
            z += f_mat.transpose() * &z_next[i] * &f_mat;
            zeta += f_mat.transpose() * (&zeta_next[i] + &z_next[i] * &beta);
            c += 0.5 * (beta.transpose() * &z_next[i] * &beta)[(0, 0)] + zeta_next[i].dot(&beta);

            z_now.push(symmetrize_drift(&z));
            zeta_now.push(zeta);
            const_now.push(c);
        }

        stages.push(FeedbackValueStage {
            gains,
            offsets: offs,
            value_mats: z_now.clone(),
            value_vecs: zeta_now.clone(),
            value_consts: const_now.clone(),
        });
        z_next = z_now;
        zeta_next = zeta_now;
        const_next = const_now;
    }
    stages.reverse();
    Ok(stages)
}
