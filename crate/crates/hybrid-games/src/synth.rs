//! Deterministic synthetic game generation, used by benchmarks and by the
//! verification suites.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{LinearDynamicsStage, LqGame, PlayerStageCost, QuadraticCostStage};

/// Parameters for [`random_lq_game`].
#[derive(Clone, Debug)]
pub struct RandomGameSpec {
    pub state_dim: usize,
    pub control_dims: Vec<usize>,
    pub horizon: usize,
    /// Scale of the linear cost terms; zero gives a purely quadratic game.
    pub linear_scale: f64,
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

fn random_psd(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> DMatrix<f64> {
    let g = random_matrix(rng, dim, dim, 1.0);
    let m = &g * g.transpose() * (scale / dim as f64);
    // Exact symmetry despite floating-point products.
    (&m + m.transpose()) * 0.5
}

/// A dense, well-posed random LQ game: bounded dynamics, PSD state costs,
/// PD own-control costs, and small PSD cross-control costs. The same seed
/// always yields the same game.
pub fn random_lq_game(spec: &RandomGameSpec, seed: u64) -> LqGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.state_dim;
    let num_players = spec.control_dims.len();

    let stages = (0..spec.horizon)
        .map(|_| {
            let a_mat = random_matrix(&mut rng, n, n, 0.9);
            let b_mats = spec
                .control_dims
                .iter()
                .map(|&m| random_matrix(&mut rng, n, m, 1.0))
                .collect();
            let players = (0..num_players)
                .map(|i| {
                    let q_mat = random_psd(&mut rng, n, 1.0);
                    let q_vec =
                        DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0) * spec.linear_scale);
                    let r_mats: Vec<DMatrix<f64>> = (0..num_players)
                        .map(|j| {
                            let m = spec.control_dims[j];
                            if i == j {
                                random_psd(&mut rng, m, 1.0) + DMatrix::identity(m, m) * 0.5
                            } else {
                                random_psd(&mut rng, m, 0.2)
                            }
                        })
                        .collect();
                    let r_vecs = (0..num_players)
                        .map(|j| {
                            DVector::from_fn(spec.control_dims[j], |_, _| {
                                rng.gen_range(-1.0..1.0) * spec.linear_scale
                            })
                        })
                        .collect();
                    PlayerStageCost { q_mat, q_vec, r_mats, r_vecs }
                })
                .collect();
            (LinearDynamicsStage { a_mat, b_mats }, QuadraticCostStage { players })
        })
        .collect();

    LqGame::new(stages).expect("generated game is well-formed")
}

/// A random initial state with entries in `(-1, 1)`, deterministic per seed.
pub fn random_state(dim: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5eed));
    DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::validate_lq_game;

    #[test]
    fn generated_games_validate() {
        let spec = RandomGameSpec {
            state_dim: 3,
            control_dims: vec![2, 1],
            horizon: 4,
            linear_scale: 1.0,
        };
        for seed in 0..10 {
            let game = random_lq_game(&spec, seed);
            let report = validate_lq_game(&game);
            assert!(report.is_valid(), "seed {seed}: {:?}", report.issues);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = RandomGameSpec {
            state_dim: 2,
            control_dims: vec![1, 1],
            horizon: 3,
            linear_scale: 0.5,
        };
        let g1 = random_lq_game(&spec, 7);
        let g2 = random_lq_game(&spec, 7);
        assert_eq!(g1.dynamics(2).a_mat, g2.dynamics(2).a_mat);
        assert_eq!(g1.costs(3).players[1].q_mat, g2.costs(3).players[1].q_mat);
    }
}
