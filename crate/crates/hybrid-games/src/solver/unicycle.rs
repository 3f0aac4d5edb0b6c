//! Multi-vehicle unicycle dynamics and the driving running costs.
//!
//! The stacked state has four entries per player, `(x, y, speed, heading)`;
//! each player's control is `(turn rate, acceleration)`.

use nalgebra::{DMatrix, DVector, Vector2, Vector4};

use crate::game::{LinearDynamicsStage, PlayerStageCost};

use super::GameProblem;

/// One forward-Euler step of a single unicycle:
/// positions advance along the pre-update heading at the pre-update speed,
/// then speed and heading integrate the controls.
pub fn unicycle_step(state: Vector4<f64>, control: Vector2<f64>, dt: f64) -> Vector4<f64> {
    let (x, y, v, heading) = (state[0], state[1], state[2], state[3]);
    Vector4::new(
        x + dt * v * heading.cos(),
        y + dt * v * heading.sin(),
        v + dt * control[1],
        heading + dt * control[0],
    )
}

/// An infinite lane center-line: a point on the line plus a unit direction.
#[derive(Clone, Copy, Debug)]
pub struct LaneGeometry {
    pub point: Vector2<f64>,
    pub direction: Vector2<f64>,
}

impl LaneGeometry {
    pub fn new(point: Vector2<f64>, direction: Vector2<f64>) -> Self {
        let norm = direction.norm();
        debug_assert!(norm > 0.0);
        Self { point, direction: direction / norm }
    }

    /// Left-handed unit normal of the direction.
    pub fn normal(&self) -> Vector2<f64> {
        Vector2::new(-self.direction.y, self.direction.x)
    }

    /// Signed lateral offset of `p` from the center-line.
    pub fn signed_offset(&self, p: Vector2<f64>) -> f64 {
        self.normal().dot(&(p - self.point))
    }

    /// Signed progress of `p` along the lane direction, measured from the
    /// reference point.
    pub fn progress(&self, p: Vector2<f64>) -> f64 {
        self.direction.dot(&(p - self.point))
    }
}

/// Running-cost weights for one player. Every term is a weighted square;
/// the lane-crossing, proximity, and speed-bound terms are quadratic
/// penalties that switch on outside their comfort region.
#[derive(Clone, Debug)]
pub struct CostWeights {
    pub goal_position: Vector2<f64>,
    pub goal_weight: f64,
    pub nominal_speed: f64,
    pub speed_weight: f64,
    /// Diagonal of the positive-definite control cost (turn rate, accel).
    pub control_weights: Vector2<f64>,
    pub lane: LaneGeometry,
    pub lane_center_weight: f64,
    pub lane_crossing_weight: f64,
    /// Lateral offset beyond which the crossing penalty activates.
    pub lane_half_width: f64,
    pub proximity_weight: f64,
    /// Center distance below which the proximity penalty activates.
    pub proximity_threshold: f64,
    pub speed_bound_weight: f64,
    pub speed_max: f64,
    pub speed_min: f64,
}

/// An N-player unicycle game over a fixed horizon.
#[derive(Clone, Debug)]
pub struct UnicycleProblem {
    pub horizon: usize,
    pub dt: f64,
    /// Stacked initial state, four entries per player.
    pub initial_state: DVector<f64>,
    pub weights: Vec<CostWeights>,
}

impl UnicycleProblem {
    pub fn num_players(&self) -> usize {
        self.weights.len()
    }

    fn position(x: &DVector<f64>, i: usize) -> Vector2<f64> {
        Vector2::new(x[4 * i], x[4 * i + 1])
    }
}

impl GameProblem for UnicycleProblem {
    fn num_players(&self) -> usize {
        self.weights.len()
    }

    fn state_dim(&self) -> usize {
        4 * self.weights.len()
    }

    fn control_dims(&self) -> Vec<usize> {
        vec![2; self.weights.len()]
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn initial_state(&self) -> DVector<f64> {
        self.initial_state.clone()
    }

    fn step(&self, _t: usize, x: &DVector<f64>, controls: &[DVector<f64>]) -> DVector<f64> {
        let mut next = DVector::zeros(x.len());
        for i in 0..self.num_players() {
            let o = 4 * i;
            let block = unicycle_step(
                Vector4::new(x[o], x[o + 1], x[o + 2], x[o + 3]),
                Vector2::new(controls[i][0], controls[i][1]),
                self.dt,
            );
            next.rows_mut(o, 4).copy_from(&block);
        }
        next
    }

    fn linearize(&self, _t: usize, x: &DVector<f64>, _controls: &[DVector<f64>]) -> LinearDynamicsStage {
        let n = self.state_dim();
        let dt = self.dt;
        let mut a_mat = DMatrix::identity(n, n);
        let mut b_mats = Vec::with_capacity(self.num_players());
        for i in 0..self.num_players() {
            let o = 4 * i;
            let v = x[o + 2];
            let heading = x[o + 3];
            let (sin, cos) = heading.sin_cos();
            a_mat[(o, o + 2)] = dt * cos;
            a_mat[(o, o + 3)] = -dt * v * sin;
            a_mat[(o + 1, o + 2)] = dt * sin;
            a_mat[(o + 1, o + 3)] = dt * v * cos;

            let mut b = DMatrix::zeros(n, 2);
            b[(o + 2, 1)] = dt; // speed <- acceleration
            b[(o + 3, 0)] = dt; // heading <- turn rate
            b_mats.push(b);
        }
        LinearDynamicsStage { a_mat, b_mats }
    }

    fn stage_cost(&self, _t: usize, player: usize, x: &DVector<f64>, controls: &[DVector<f64>]) -> f64 {
        let w = &self.weights[player];
        let p = Self::position(x, player);
        let v = x[4 * player + 2];
        let u = &controls[player];

        let mut cost = w.goal_weight * (p - w.goal_position).norm_squared();
        cost += w.speed_weight * (v - w.nominal_speed).powi(2);
        cost += w.control_weights[0] * u[0] * u[0] + w.control_weights[1] * u[1] * u[1];

        let offset = w.lane.signed_offset(p);
        cost += w.lane_center_weight * offset * offset;
        let excess = offset.abs() - w.lane_half_width;
        if excess > 0.0 {
            cost += w.lane_crossing_weight * excess * excess;
        }

        for j in 0..self.num_players() {
            if j == player {
                continue;
            }
            let gap = (p - Self::position(x, j)).norm();
            if gap < w.proximity_threshold {
                cost += w.proximity_weight * (w.proximity_threshold - gap).powi(2);
            }
        }

        if v > w.speed_max {
            cost += w.speed_bound_weight * (v - w.speed_max).powi(2);
        }
        if v < w.speed_min {
            cost += w.speed_bound_weight * (w.speed_min - v).powi(2);
        }
        cost
    }

    fn quadraticize(
        &self,
        _t: usize,
        player: usize,
        x: &DVector<f64>,
        controls: &[DVector<f64>],
    ) -> PlayerStageCost {
        let n = self.state_dim();
        let num_players = self.num_players();
        let w = &self.weights[player];
        let o = 4 * player;
        let p = Self::position(x, player);
        let v = x[o + 2];

        let mut q_mat = DMatrix::<f64>::zeros(n, n);
        let mut q_vec = DVector::<f64>::zeros(n);

        // Goal attraction: w * |p - g|^2.
        let dp = p - w.goal_position;
        q_vec[o] += 2.0 * w.goal_weight * dp.x;
        q_vec[o + 1] += 2.0 * w.goal_weight * dp.y;
        q_mat[(o, o)] += 2.0 * w.goal_weight;
        q_mat[(o + 1, o + 1)] += 2.0 * w.goal_weight;

        // Nominal speed: w * (v - v_nom)^2.
        q_vec[o + 2] += 2.0 * w.speed_weight * (v - w.nominal_speed);
        q_mat[(o + 2, o + 2)] += 2.0 * w.speed_weight;

        // Lane centering: w * s^2 for the signed offset s = n.(p - p0).
        let normal = w.lane.normal();
        let offset = w.lane.signed_offset(p);
        let scale = 2.0 * w.lane_center_weight * offset;
        q_vec[o] += scale * normal.x;
        q_vec[o + 1] += scale * normal.y;
        add_outer_2x2(&mut q_mat, o, o, &(2.0 * w.lane_center_weight * normal * normal.transpose()));

        // Lane-crossing penalty, active when |s| exceeds the half width.
        let excess = offset.abs() - w.lane_half_width;
        if excess > 0.0 {
            let sign = offset.signum();
            let scale = 2.0 * w.lane_crossing_weight * excess * sign;
            q_vec[o] += scale * normal.x;
            q_vec[o + 1] += scale * normal.y;
            add_outer_2x2(&mut q_mat, o, o, &(2.0 * w.lane_crossing_weight * normal * normal.transpose()));
        }

        // Mutual proximity penalties couple this player's position block
        // with each nearby player's block.
        for j in 0..num_players {
            if j == player {
                continue;
            }
            let oj = 4 * j;
            let delta = p - Self::position(x, j);
            let gap = delta.norm();
            if gap >= w.proximity_threshold || gap == 0.0 {
                continue;
            }
            let shortfall = w.proximity_threshold - gap;
            // d/d delta of w * (d_prox - |delta|)^2.
            let grad = -2.0 * w.proximity_weight * shortfall / gap * delta;
            q_vec[o] += grad.x;
            q_vec[o + 1] += grad.y;
            q_vec[oj] -= grad.x;
            q_vec[oj + 1] -= grad.y;

            let unit = delta / gap;
            let outer = unit * unit.transpose();
            let eye = nalgebra::Matrix2::identity();
            let hess = 2.0 * w.proximity_weight * (outer - (shortfall / gap) * (eye - outer));
            add_outer_2x2(&mut q_mat, o, o, &hess);
            add_outer_2x2(&mut q_mat, oj, oj, &hess);
            add_outer_2x2(&mut q_mat, o, oj, &(-hess));
            add_outer_2x2(&mut q_mat, oj, o, &(-hess));
        }

        // Speed bounds.
        if v > w.speed_max {
            q_vec[o + 2] += 2.0 * w.speed_bound_weight * (v - w.speed_max);
            q_mat[(o + 2, o + 2)] += 2.0 * w.speed_bound_weight;
        }
        if v < w.speed_min {
            q_vec[o + 2] -= 2.0 * w.speed_bound_weight * (w.speed_min - v);
            q_mat[(o + 2, o + 2)] += 2.0 * w.speed_bound_weight;
        }

        // Control cost u'diag(cw)u: only the player's own control appears
        // in its running cost.
        let mut r_mats = Vec::with_capacity(num_players);
        let mut r_vecs = Vec::with_capacity(num_players);
        for j in 0..num_players {
            if j == player {
                let u = &controls[player];
                r_mats.push(DMatrix::from_diagonal(&DVector::from_vec(vec![
                    2.0 * w.control_weights[0],
                    2.0 * w.control_weights[1],
                ])));
                r_vecs.push(DVector::from_vec(vec![
                    2.0 * w.control_weights[0] * u[0],
                    2.0 * w.control_weights[1] * u[1],
                ]));
            } else {
                r_mats.push(DMatrix::zeros(2, 2));
                r_vecs.push(DVector::zeros(2));
            }
        }

        PlayerStageCost { q_mat, q_vec, r_mats, r_vecs }
    }
}

fn add_outer_2x2(q: &mut DMatrix<f64>, row: usize, col: usize, block: &nalgebra::Matrix2<f64>) {
    for r in 0..2 {
        for c in 0..2 {
            q[(row + r, col + c)] += block[(r, c)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn stationary_state_is_fixed_point() {
        let s = unicycle_step(Vector4::new(1.0, 2.0, 0.0, 0.7), Vector2::zeros(), 0.1);
        assert_eq!(s, Vector4::new(1.0, 2.0, 0.0, 0.7));
    }

    #[test]
    fn straight_motion_advances_x() {
        let s = unicycle_step(Vector4::new(0.0, 0.0, 10.0, 0.0), Vector2::zeros(), 0.1);
        assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[2], 10.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[3], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn controls_integrate_into_speed_and_heading() {
        let s = unicycle_step(Vector4::new(0.0, 0.0, 5.0, 0.0), Vector2::new(0.3, -1.0), 0.1);
        assert_abs_diff_eq!(s[2], 4.9, epsilon = 1e-15);
        assert_abs_diff_eq!(s[3], 0.03, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_entries_at_zero_heading() {
        let problem = UnicycleProblem {
            horizon: 1,
            dt: 0.1,
            initial_state: DVector::zeros(4),
            weights: vec![test_weights()],
        };
        let x = DVector::from_vec(vec![0.0, 0.0, 7.0, 0.0]);
        let lin = problem.linearize(1, &x, &[DVector::zeros(2)]);
        assert_abs_diff_eq!(lin.a_mat[(0, 2)], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(lin.a_mat[(1, 3)], 0.1 * 7.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lin.b_mats[0][(2, 1)], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(lin.b_mats[0][(3, 0)], 0.1, epsilon = 1e-15);
    }

    pub(super) fn test_weights() -> CostWeights {
        CostWeights {
            goal_position: Vector2::new(50.0, 0.0),
            goal_weight: 0.1,
            nominal_speed: 8.0,
            speed_weight: 1.0,
            control_weights: Vector2::new(1.0, 1.0),
            lane: LaneGeometry::new(Vector2::new(0.0, 0.0), Vector2::new(1.0, 0.0)),
            lane_center_weight: 0.5,
            lane_crossing_weight: 10.0,
            lane_half_width: 3.75,
            proximity_weight: 20.0,
            proximity_threshold: 3.0,
            speed_bound_weight: 5.0,
            speed_max: 15.0,
            speed_min: 0.0,
        }
    }

    #[test]
    fn distant_players_contribute_no_proximity_terms() {
        let problem = UnicycleProblem {
            horizon: 1,
            dt: 0.1,
            initial_state: DVector::zeros(8),
            weights: vec![test_weights(), test_weights()],
        };
        // 10 m apart, beyond the 3 m threshold.
        let x = DVector::from_vec(vec![0.0, 0.0, 8.0, 0.0, 10.0, 0.0, 8.0, 0.0]);
        let us = vec![DVector::zeros(2), DVector::zeros(2)];
        let quad = problem.quadraticize(1, 0, &x, &us);
        // The second player's block must be untouched.
        for r in 4..8 {
            assert_eq!(quad.q_vec[r], 0.0);
            for c in 0..8 {
                assert_eq!(quad.q_mat[(r, c)], 0.0);
                assert_eq!(quad.q_mat[(c, r)], 0.0);
            }
        }
    }
}
