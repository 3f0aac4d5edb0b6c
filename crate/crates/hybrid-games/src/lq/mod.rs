//! Nash equilibrium solvers for linear-quadratic games under open-loop,
//! feedback, and hybrid information structures, plus the dense KKT and
//! best-response oracles used to verify them.

mod feedback;
mod hybrid;
mod open_loop;
pub mod oracle;

pub use feedback::{solve_lq_feedback, FeedbackValueStage};
pub use hybrid::{rollout_hybrid, solve_lq_hybrid, HybridSolution, PeriodSolution};
pub use open_loop::{open_loop_controls, solve_lq_open_loop, OpenLoopSolution, OpenLoopValueStage};
pub use oracle::{kkt_oracle_solve, OpenLoopEquilibrium};

use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::GameError;

/// Reject a linear solve when the reciprocal condition estimate drops
/// below this bound.
pub const RCOND_MIN: f64 = 1e-12;

/// Dense LU factorization with a cheap reciprocal-condition estimate
/// (ratio of smallest to largest pivot magnitude).
pub(crate) struct CheckedLu {
    lu: nalgebra::linalg::LU<f64, Dyn, Dyn>,
    rcond: f64,
}

impl CheckedLu {
    pub fn new(mat: DMatrix<f64>) -> Self {
        let lu = mat.lu();
        let u = lu.u();
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0_f64;
        for k in 0..u.nrows().min(u.ncols()) {
            let p = u[(k, k)].abs();
            min_pivot = min_pivot.min(p);
            max_pivot = max_pivot.max(p);
        }
        let rcond = if max_pivot > 0.0 && min_pivot.is_finite() {
            min_pivot / max_pivot
        } else {
            0.0
        };
        Self { lu, rcond }
    }

    /// Error out if the factorization looks singular.
    pub fn check(self, stage: usize, what: &'static str) -> Result<Self, GameError> {
        if !self.rcond.is_finite() || self.rcond < RCOND_MIN {
            return Err(GameError::SingularSystem { stage, what, rcond: self.rcond });
        }
        Ok(self)
    }

    pub fn solve_matrix(&self, rhs: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        self.lu.solve(rhs)
    }

    pub fn solve_vector(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        self.lu.solve(rhs)
    }
}

/// `(M + M^T) / 2`; exact (bitwise identity) when `M` is already symmetric.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Suppress floating-point asymmetry drift: averages with the transpose
/// when the asymmetry is at rounding scale, and returns the matrix
/// unchanged when the asymmetry is structural (a costate hand-off from an
/// open-loop period is nonsymmetric for N >= 2, and must stay that way for
/// the recursion to re-center exactly about a trajectory iterate).
pub(crate) fn symmetrize_drift(m: &DMatrix<f64>) -> DMatrix<f64> {
    let scale = m.amax().max(1.0);
    let mut asym = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if asym <= 1e-12 * scale {
        symmetrize(m)
    } else {
        m.clone()
    }
}

/// Solve `R y = rhs` for a (nominally PD) own-control cost block.
pub(crate) fn solve_own_control(
    r: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    stage: usize,
) -> Result<DMatrix<f64>, GameError> {
    if let Some(chol) = r.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    let lu = CheckedLu::new(r.clone()).check(stage, "own-control cost block")?;
    lu.solve_matrix(rhs)
        .ok_or(GameError::SingularSystem { stage, what: "own-control cost block", rcond: 0.0 })
}

/// Stack per-player control vectors into one flat vector (player order).
pub(crate) fn control_offsets(dims: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(dims.len());
    let mut acc = 0;
    for &m in dims {
        offsets.push(acc);
        acc += m;
    }
    offsets
}

/// Evaluate an affine feedback law `u = -P x - a`.
pub(crate) fn affine_control(p: &DMatrix<f64>, a: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    -(p * x) - a
}
