//! Stagewise LQ approximation of a nonlinear game about a trajectory
//! iterate.

use nalgebra::{DMatrix, DVector};

use crate::game::{LinearDynamicsStage, QuadraticCostStage, TrajectoryIterate};

use super::{GameProblem, SolverSettings};

/// Analytic dynamics Jacobians along the iterate.
pub fn linearize_dynamics(
    trajectory: &TrajectoryIterate,
    problem: &dyn GameProblem,
) -> Vec<LinearDynamicsStage> {
    (1..=trajectory.horizon())
        .map(|t| problem.linearize(t, &trajectory.states[t - 1], &trajectory.controls[t - 1]))
        .collect()
}

/// Clamp the eigenvalues of a symmetric matrix at `floor` and restore
/// exact symmetry afterwards.
fn clamp_psd(mat: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = mat.clone().symmetric_eigen();
    let mut needs_clamp = false;
    for v in eig.eigenvalues.iter() {
        if *v < floor {
            needs_clamp = true;
        }
    }
    if !needs_clamp {
        return mat.clone();
    }
    let clamped = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|v| v.max(floor)),
    );
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    (&rebuilt + rebuilt.transpose()) * 0.5
}

/// Quadratic cost expansions along the iterate: state Hessians are
/// clamped to the PSD floor and every own-control Hessian receives the
/// `+ mu I` regularization so the LQ sub-solvers stay well posed.
pub fn quadraticize_costs(
    trajectory: &TrajectoryIterate,
    problem: &dyn GameProblem,
    settings: &SolverSettings,
) -> Vec<QuadraticCostStage> {
    let num_players = problem.num_players();
    (1..=trajectory.horizon())
        .map(|t| {
            let x = &trajectory.states[t - 1];
            let us = &trajectory.controls[t - 1];
            let players = (0..num_players)
                .map(|i| {
                    let mut cost = problem.quadraticize(t, i, x, us);
                    cost.q_mat = clamp_psd(&cost.q_mat, settings.psd_floor);
                    let m = cost.r_mats[i].nrows();
                    cost.r_mats[i] += DMatrix::<f64>::identity(m, m) * settings.control_regularization;
                    cost
                })
                .collect();
            QuadraticCostStage { players }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    #[test]
    fn clamp_leaves_psd_matrices_alone() {
        let m = dmatrix![2.0, 0.5; 0.5, 1.0];
        assert_eq!(clamp_psd(&m, 0.0), m);
    }

    #[test]
    fn clamp_floors_negative_directions() {
        let m = dmatrix![1.0, 0.0; 0.0, -3.0];
        let c = clamp_psd(&m, 0.0);
        assert_abs_diff_eq!(c[(1, 1)], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c[(0, 0)], 1.0, epsilon = 1e-14);
        // Result stays exactly symmetric.
        assert_eq!(c[(0, 1)], c[(1, 0)]);
        let eig = c.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&v| v >= -1e-14));
    }
}
