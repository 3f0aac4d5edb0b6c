//! Cross-validation of the LQ recursion solvers against independent
//! dense-oracle solution paths on batches of random games.

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};

use hybrid_games::game::{
    partition_from_flags, CostToGo, InformationSchedule, LqGame, Period, PeriodMode,
    TrajectoryIterate,
};
use hybrid_games::lq::oracle::{feedback_best_response, kkt_oracle_solve, open_loop_best_response};
use hybrid_games::lq::{
    open_loop_controls, rollout_hybrid, solve_lq_feedback, solve_lq_hybrid, solve_lq_open_loop,
    HybridSolution,
};
use hybrid_games::synth::{random_lq_game, random_state, RandomGameSpec};

fn spec_for_seed(seed: u64) -> RandomGameSpec {
    // Vary the shape with the seed: n <= 4, N <= 3, T <= 5.
    let n = 1 + (seed % 4) as usize;
    let num_players = 1 + (seed % 3) as usize;
    let horizon = 1 + (seed % 5) as usize;
    let control_dims = (0..num_players).map(|i| 1 + ((seed as usize + i) % 2)).collect();
    RandomGameSpec { state_dim: n, control_dims, horizon, linear_scale: 1.0 }
}

fn full_period(game: &LqGame, mode: PeriodMode) -> Period {
    Period { start: 1, end: game.horizon(), mode }
}

#[test]
fn open_loop_recursion_matches_kkt_oracle_on_random_games() {
    for seed in 0..100u64 {
        let spec = spec_for_seed(seed);
        let game = random_lq_game(&spec, seed);
        let x1 = random_state(spec.state_dim, seed);

        let terminal = CostToGo::zero(game.state_dim(), game.num_players());
        let sol = solve_lq_open_loop(&game, full_period(&game, PeriodMode::OpenLoop), &terminal)
            .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        let (controls, states) = open_loop_controls(&game, &sol, &x1).unwrap();

        let oracle = kkt_oracle_solve(&game, &x1).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert!(oracle.residual < 1e-9, "seed {seed}: oracle residual {}", oracle.residual);

        for t in 0..game.horizon() {
            for i in 0..game.num_players() {
                let diff = (&controls[t][i] - &oracle.controls[t][i]).amax();
                assert!(diff <= 1e-8, "seed {seed} stage {} player {i}: control diff {diff}", t + 1);
            }
            let sdiff = (&states[t + 1] - &oracle.states[t + 1]).amax();
            assert!(sdiff <= 1e-8, "seed {seed} stage {}: state diff {sdiff}", t + 1);
        }
    }
}

#[test]
fn feedback_policies_are_best_responses() {
    for seed in 0..50u64 {
        let spec = spec_for_seed(seed);
        let game = random_lq_game(&spec, seed.wrapping_mul(31).wrapping_add(5));
        let period = full_period(&game, PeriodMode::Feedback);
        let terminal = CostToGo::zero(game.state_dim(), game.num_players());
        let stages = solve_lq_feedback(&game, period, &terminal).unwrap();

        let co_gains: Vec<Vec<DMatrix<f64>>> =
            stages.iter().map(|s| s.gains.clone()).collect();
        let co_offsets: Vec<Vec<DVector<f64>>> =
            stages.iter().map(|s| s.offsets.clone()).collect();

        for i in 0..game.num_players() {
            let (gains, offsets) =
                feedback_best_response(&game, period, i, &co_gains, &co_offsets, &terminal).unwrap();
            for (t, stage) in stages.iter().enumerate() {
                let gdiff = (&gains[t] - &stage.gains[i]).amax();
                let odiff = (&offsets[t] - &stage.offsets[i]).amax();
                assert!(gdiff <= 1e-8, "seed {seed} player {i} stage {}: gain diff {gdiff}", t + 1);
                assert!(odiff <= 1e-8, "seed {seed} player {i} stage {}: offset diff {odiff}", t + 1);
            }
        }
    }
}

#[test]
fn hybrid_degenerates_to_pure_solvers() {
    for seed in 0..20u64 {
        let spec = spec_for_seed(seed);
        let game = random_lq_game(&spec, seed.wrapping_add(1000));
        let horizon = game.horizon();
        let terminal = CostToGo::zero(game.state_dim(), game.num_players());

        let hybrid_fb =
            solve_lq_hybrid(&game, &InformationSchedule::single(PeriodMode::Feedback, horizon)).unwrap();
        let pure_fb =
            solve_lq_feedback(&game, full_period(&game, PeriodMode::Feedback), &terminal).unwrap();
        for t in 1..=horizon {
            let h = hybrid_fb.feedback_stage(t).unwrap();
            let p = &pure_fb[t - 1];
            for i in 0..game.num_players() {
                assert!((&h.gains[i] - &p.gains[i]).amax() <= 1e-12);
                assert!((&h.offsets[i] - &p.offsets[i]).amax() <= 1e-12);
                assert!((&h.value_mats[i] - &p.value_mats[i]).amax() <= 1e-12);
            }
        }

        let hybrid_ol =
            solve_lq_hybrid(&game, &InformationSchedule::single(PeriodMode::OpenLoop, horizon)).unwrap();
        let pure_ol =
            solve_lq_open_loop(&game, full_period(&game, PeriodMode::OpenLoop), &terminal).unwrap();
        for t in 1..=horizon {
            let h = hybrid_ol.open_loop_stage(t).unwrap();
            let p = &pure_ol.stages[t - 1];
            for i in 0..game.num_players() {
                assert!((&h.value_mats[i] - &p.value_mats[i]).amax() <= 1e-12);
                assert!((&h.value_vecs[i] - &p.value_vecs[i]).amax() <= 1e-12);
            }
        }
    }
}

#[test]
fn feedback_rollout_cost_matches_value_function() {
    for seed in 0..50u64 {
        let spec = spec_for_seed(seed);
        let game = random_lq_game(&spec, seed.wrapping_mul(7).wrapping_add(42));
        let x1 = random_state(spec.state_dim, seed.wrapping_add(9));
        let schedule = InformationSchedule::single(PeriodMode::Feedback, game.horizon());
        let solution = solve_lq_hybrid(&game, &schedule).unwrap();
        let traj = rollout_hybrid(&game, &solution, &x1).unwrap();

        let first = solution.feedback_stage(1).unwrap();
        for i in 0..game.num_players() {
            let accumulated = game.total_cost(i, &traj.states, &traj.controls);
            let predicted = 0.5 * (x1.transpose() * &first.value_mats[i] * &x1)[(0, 0)]
                + first.value_vecs[i].dot(&x1)
                + first.value_consts[i];
            assert_abs_diff_eq!(accumulated, predicted, epsilon = 1e-8);
        }
    }
}

#[test]
fn value_matrices_stay_symmetric() {
    for seed in 0..20u64 {
        let spec = spec_for_seed(seed);
        let game = random_lq_game(&spec, seed.wrapping_add(77));
        let terminal = CostToGo::zero(game.state_dim(), game.num_players());
        let stages =
            solve_lq_feedback(&game, full_period(&game, PeriodMode::Feedback), &terminal).unwrap();
        for stage in &stages {
            for z in &stage.value_mats {
                assert!((z - z.transpose()).amax() <= 1e-10);
            }
        }
        // Open-loop costate matrices are symmetric in the single-player case.
        if game.num_players() == 1 {
            let sol = solve_lq_open_loop(&game, full_period(&game, PeriodMode::OpenLoop), &terminal)
                .unwrap();
            for stage in &sol.stages {
                assert!((&stage.value_mats[0] - stage.value_mats[0].transpose()).amax() <= 1e-10);
            }
        }
    }
}

/// Accumulated model cost for one player over a feedback period when that
/// player injects `eps` into one control entry at `deviate_at`, with
/// everyone following the equilibrium policies otherwise, plus the boundary
/// quadratic at the period-end state. Evaluated by direct simulation, with
/// no recursion involved.
fn feedback_deviation_cost(
    game: &LqGame,
    solution: &HybridSolution,
    period: Period,
    boundary: &CostToGo,
    player: usize,
    x_entry: &DVector<f64>,
    deviate_at: usize,
    entry_index: usize,
    eps: f64,
) -> f64 {
    let mut x = x_entry.clone();
    let mut total = 0.0;
    for t in period.stages() {
        let stage = solution.feedback_stage(t).unwrap();
        let mut us: Vec<DVector<f64>> = stage
            .gains
            .iter()
            .zip(&stage.offsets)
            .map(|(p, a)| -(p * &x) - a)
            .collect();
        if t == deviate_at {
            us[player][entry_index] += eps;
        }
        total += game.stage_cost(t, player, &x, &us);
        x = game.dynamics(t).step(&x, &us);
    }
    total + boundary.eval(player, &x)
}

fn assert_hybrid_period_nash(game: &LqGame, schedule: &InformationSchedule, x1: &DVector<f64>) {
    let solution = solve_lq_hybrid(game, schedule).unwrap();
    let traj = rollout_hybrid(game, &solution, x1).unwrap();

    for (j, period) in schedule.periods().iter().enumerate() {
        let boundary = solution.boundary_value(j);
        let x_entry = &traj.states[period.start - 1];
        match period.mode {
            PeriodMode::Feedback => {
                // No single-stage unilateral deviation may reduce the
                // player's model cost-to-go: the derivative at the
                // equilibrium is zero and the curvature is positive.
                for i in 0..game.num_players() {
                    for t in period.stages() {
                        for entry in 0..game.control_dims()[i] {
                            let h = 1e-4;
                            let up = feedback_deviation_cost(
                                game, &solution, *period, boundary, i, x_entry, t, entry, h,
                            );
                            let down = feedback_deviation_cost(
                                game, &solution, *period, boundary, i, x_entry, t, entry, -h,
                            );
                            let base = feedback_deviation_cost(
                                game, &solution, *period, boundary, i, x_entry, t, entry, 0.0,
                            );
                            let slope = (up - down) / (2.0 * h);
                            assert!(
                                slope.abs() <= 1e-6,
                                "period {j} player {i} stage {t}: deviation slope {slope}"
                            );
                            assert!(up >= base - 1e-10 && down >= base - 1e-10);
                        }
                    }
                }
            }
            PeriodMode::OpenLoop => {
                // Fixing everyone else's realized control sequences, each
                // player's sequence solves the stacked QP with the boundary
                // quadratic as terminal cost.
                let fixed: Vec<Vec<DVector<f64>>> = period
                    .stages()
                    .map(|t| traj.controls[t - 1].clone())
                    .collect();
                for i in 0..game.num_players() {
                    let best =
                        open_loop_best_response(game, *period, i, x_entry, &fixed, boundary)
                            .unwrap();
                    for (k, t) in period.stages().enumerate() {
                        let diff = (&best[k] - &traj.controls[t - 1][i]).amax();
                        assert!(
                            diff <= 1e-6,
                            "period {j} player {i} stage {t}: open-loop response diff {diff}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn hybrid_periods_satisfy_nash_conditions() {
    // Scalar two-player game, T = 4, both period orders.
    let spec = RandomGameSpec {
        state_dim: 1,
        control_dims: vec![1, 1],
        horizon: 4,
        linear_scale: 1.0,
    };
    for seed in 0..10u64 {
        let game = random_lq_game(&spec, seed.wrapping_add(500));
        let x1 = random_state(1, seed);
        let ol_then_fb = partition_from_flags(&[true, true, false, false]).unwrap();
        assert_hybrid_period_nash(&game, &ol_then_fb, &x1);
        let fb_then_ol = partition_from_flags(&[false, false, true, true]).unwrap();
        assert_hybrid_period_nash(&game, &fb_then_ol, &x1);
    }
}

#[test]
fn rollout_open_loop_segment_reproduces_forward_recursion() {
    let spec = RandomGameSpec {
        state_dim: 2,
        control_dims: vec![1, 1],
        horizon: 5,
        linear_scale: 1.0,
    };
    let game = random_lq_game(&spec, 321);
    let schedule = partition_from_flags(&[true, true, true, false, false]).unwrap();
    let solution = solve_lq_hybrid(&game, &schedule).unwrap();
    let x1 = random_state(2, 321);
    let traj: TrajectoryIterate = rollout_hybrid(&game, &solution, &x1).unwrap();

    // Regenerate the open-loop segment directly and compare states.
    if let hybrid_games::lq::PeriodSolution::OpenLoop(sol) = &solution.segments()[0] {
        let (_, states) = open_loop_controls(&game, sol, &x1).unwrap();
        for (k, x) in states.iter().take(3).enumerate() {
            assert!((x - &traj.states[k]).amax() <= 1e-12);
        }
    } else {
        panic!("first segment should be open-loop");
    }
}
