//! Data model for stagewise linear-quadratic games, information schedules,
//! and trajectory iterates.
//!
//! Stage indices are 1-based throughout: a game of horizon `T` has stages
//! `1..=T`, and a quantity "valid at `t_e + 1`" for the last period refers to
//! the virtual index `T + 1` (where terminal seeds are all zero; terminal
//! state costs, when present, are folded into the stage-`T` cost matrices).

use nalgebra::{DMatrix, DVector};

use crate::error::GameError;

/// Linear dynamics for one stage: `x' = A x + sum_i B_i u_i`.
#[derive(Clone, Debug)]
pub struct LinearDynamicsStage {
    /// State transition, `n x n`.
    pub a_mat: DMatrix<f64>,
    /// Per-player control maps; `b_mats[i]` is `n x m_i`.
    pub b_mats: Vec<DMatrix<f64>>,
}

impl LinearDynamicsStage {
    pub fn state_dim(&self) -> usize {
        self.a_mat.nrows()
    }

    pub fn control_dims(&self) -> Vec<usize> {
        self.b_mats.iter().map(|b| b.ncols()).collect()
    }

    /// Advance the dynamics one stage.
    pub fn step(&self, x: &DVector<f64>, controls: &[DVector<f64>]) -> DVector<f64> {
        let mut next = &self.a_mat * x;
        for (b, u) in self.b_mats.iter().zip(controls) {
            next += b * u;
        }
        next
    }
}

/// Quadratic stage cost for one player:
/// `1/2 x'Qx + q'x + sum_j (1/2 u_j' R_j u_j + r_j' u_j)`.
#[derive(Clone, Debug)]
pub struct PlayerStageCost {
    /// State cost matrix, `n x n`, symmetric PSD.
    pub q_mat: DMatrix<f64>,
    /// State cost vector, length `n`.
    pub q_vec: DVector<f64>,
    /// Control cost matrices; `r_mats[j]` is `m_j x m_j` (own block PD).
    pub r_mats: Vec<DMatrix<f64>>,
    /// Control cost vectors; `r_vecs[j]` has length `m_j`.
    pub r_vecs: Vec<DVector<f64>>,
}

/// Costs for all players at one stage.
#[derive(Clone, Debug)]
pub struct QuadraticCostStage {
    pub players: Vec<PlayerStageCost>,
}

impl QuadraticCostStage {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }
}

/// A finite-horizon linear-quadratic game: `T` stages of paired dynamics
/// and costs, dimensionally identical across stages.
#[derive(Clone, Debug)]
pub struct LqGame {
    stages: Vec<(LinearDynamicsStage, QuadraticCostStage)>,
    state_dim: usize,
    control_dims: Vec<usize>,
}

impl LqGame {
    /// Build a game from per-stage dynamics/cost pairs.
    ///
    /// Dimensions are taken from the first stage; use [`validate_lq_game`]
    /// for a full consistency report.
    pub fn new(stages: Vec<(LinearDynamicsStage, QuadraticCostStage)>) -> Result<Self, GameError> {
        if stages.is_empty() {
            return Err(GameError::InvalidInput("game must have at least one stage".into()));
        }
        let state_dim = stages[0].0.state_dim();
        let control_dims = stages[0].0.control_dims();
        if control_dims.is_empty() {
            return Err(GameError::InvalidInput("game must have at least one player".into()));
        }
        Ok(Self { stages, state_dim, control_dims })
    }

    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    pub fn num_players(&self) -> usize {
        self.control_dims.len()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dims(&self) -> &[usize] {
        &self.control_dims
    }

    /// Dynamics at 1-based stage `t`.
    pub fn dynamics(&self, t: usize) -> &LinearDynamicsStage {
        &self.stages[t - 1].0
    }

    /// Costs at 1-based stage `t`.
    pub fn costs(&self, t: usize) -> &QuadraticCostStage {
        &self.stages[t - 1].1
    }

    /// Stage cost of `player` at 1-based stage `t` for state `x` and the
    /// full control profile `controls`.
    pub fn stage_cost(&self, t: usize, player: usize, x: &DVector<f64>, controls: &[DVector<f64>]) -> f64 {
        let cost = &self.costs(t).players[player];
        let mut value = 0.5 * (x.transpose() * &cost.q_mat * x)[(0, 0)] + cost.q_vec.dot(x);
        for (j, u) in controls.iter().enumerate() {
            value += 0.5 * (u.transpose() * &cost.r_mats[j] * u)[(0, 0)] + cost.r_vecs[j].dot(u);
        }
        value
    }

    /// Total cost of `player` along a trajectory (states `x_{1..T}`,
    /// controls `u_{1..T}` indexed `[stage][player]`).
    pub fn total_cost(&self, player: usize, states: &[DVector<f64>], controls: &[Vec<DVector<f64>>]) -> f64 {
        (1..=self.horizon())
            .map(|t| self.stage_cost(t, player, &states[t - 1], &controls[t - 1]))
            .sum()
    }
}

/// Information mode of a period.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeriodMode {
    /// Players see only the state at the period start (occluded).
    OpenLoop,
    /// Players observe the full current state at every stage (visible).
    Feedback,
}

/// A contiguous run of stages sharing one information mode.
/// `start` and `end` are inclusive 1-based stage indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Period {
    pub start: usize,
    pub end: usize,
    pub mode: PeriodMode,
}

impl Period {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Iterate the 1-based stage indices of the period.
    pub fn stages(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

/// An ordered partition of stages `1..=T` into alternating open-loop and
/// feedback periods.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InformationSchedule {
    periods: Vec<Period>,
    horizon: usize,
}

impl InformationSchedule {
    /// Build from an ordered period list, checking contiguity, coverage of
    /// `1..=T`, and mode alternation.
    pub fn new(periods: Vec<Period>, horizon: usize) -> Result<Self, GameError> {
        if periods.is_empty() {
            return Err(GameError::BadSchedule { horizon, what: "no periods".into() });
        }
        if periods[0].start != 1 {
            return Err(GameError::BadSchedule {
                horizon,
                what: format!("first period starts at {}, expected 1", periods[0].start),
            });
        }
        for (k, p) in periods.iter().enumerate() {
            if p.start > p.end || p.end > horizon {
                return Err(GameError::BadSchedule {
                    horizon,
                    what: format!("period {} has bad bounds [{},{}]", k + 1, p.start, p.end),
                });
            }
            if k > 0 {
                if p.start != periods[k - 1].end + 1 {
                    return Err(GameError::BadSchedule {
                        horizon,
                        what: format!("gap or overlap before period {}", k + 1),
                    });
                }
                if p.mode == periods[k - 1].mode {
                    return Err(GameError::BadSchedule {
                        horizon,
                        what: format!("periods {} and {} share mode {:?}", k, k + 1, p.mode),
                    });
                }
            }
        }
        let last = periods.last().unwrap();
        if last.end != horizon {
            return Err(GameError::BadSchedule {
                horizon,
                what: format!("last period ends at {}, expected {}", last.end, horizon),
            });
        }
        Ok(Self { periods, horizon })
    }

    /// A schedule with a single period spanning the whole horizon.
    pub fn single(mode: PeriodMode, horizon: usize) -> Self {
        Self {
            periods: vec![Period { start: 1, end: horizon, mode }],
            horizon,
        }
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of occluded (open-loop) periods.
    pub fn occluded_count(&self) -> usize {
        self.periods.iter().filter(|p| p.mode == PeriodMode::OpenLoop).count()
    }

    /// Number of visible (feedback) periods.
    pub fn visible_count(&self) -> usize {
        self.periods.iter().filter(|p| p.mode == PeriodMode::Feedback).count()
    }

    /// Mode at 1-based stage `t`.
    pub fn mode_at(&self, t: usize) -> PeriodMode {
        self.periods
            .iter()
            .find(|p| p.start <= t && t <= p.end)
            .map(|p| p.mode)
            .expect("stage within horizon")
    }

    /// Flatten back to per-stage occlusion flags (`true` = occluded).
    pub fn to_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.horizon];
        for p in &self.periods {
            for t in p.stages() {
                flags[t - 1] = p.mode == PeriodMode::OpenLoop;
            }
        }
        flags
    }
}

/// Convert per-stage occlusion flags (`true` = occluded) into a schedule of
/// maximal same-mode runs.
pub fn partition_from_flags(flags: &[bool]) -> Result<InformationSchedule, GameError> {
    if flags.is_empty() {
        return Err(GameError::EmptyFlags);
    }
    let mode_of = |f: bool| if f { PeriodMode::OpenLoop } else { PeriodMode::Feedback };
    let mut periods = Vec::new();
    let mut start = 1usize;
    for t in 2..=flags.len() {
        if flags[t - 1] != flags[t - 2] {
            periods.push(Period { start, end: t - 1, mode: mode_of(flags[start - 1]) });
            start = t;
        }
    }
    periods.push(Period { start, end: flags.len(), mode: mode_of(flags[start - 1]) });
    InformationSchedule::new(periods, flags.len())
}

/// Quadratic cost-to-go boundary data handed between periods: per player
/// `1/2 x'Sx + s'x + c`, valid at some stage index `t_e + 1`.
///
/// Feedback periods read it as their terminal value function; open-loop
/// periods read `(S, s)` as their terminal costate seed and carry `c`
/// through unchanged.
#[derive(Clone, Debug)]
pub struct CostToGo {
    /// Per-player quadratic coefficient `S`, `n x n`, symmetric.
    pub mats: Vec<DMatrix<f64>>,
    /// Per-player linear coefficient `s`, length `n`.
    pub vecs: Vec<DVector<f64>>,
    /// Per-player constant term.
    pub consts: Vec<f64>,
}

impl CostToGo {
    /// The all-zero cost-to-go used to seed the final period.
    pub fn zero(state_dim: usize, num_players: usize) -> Self {
        Self {
            mats: vec![DMatrix::zeros(state_dim, state_dim); num_players],
            vecs: vec![DVector::zeros(state_dim); num_players],
            consts: vec![0.0; num_players],
        }
    }

    pub fn num_players(&self) -> usize {
        self.mats.len()
    }

    /// Evaluate player `i`'s quadratic at `x`.
    pub fn eval(&self, player: usize, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.mats[player] * x)[(0, 0)]
            + self.vecs[player].dot(x)
            + self.consts[player]
    }
}

/// A state/control trajectory over the full horizon with per-stage
/// occlusion flags.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryIterate {
    /// States `x_1 .. x_T`.
    pub states: Vec<DVector<f64>>,
    /// Controls indexed `[stage][player]`.
    pub controls: Vec<Vec<DVector<f64>>>,
    /// `true` where the stage was occluded.
    pub occluded: Vec<bool>,
}

impl TrajectoryIterate {
    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    pub fn num_players(&self) -> usize {
        self.controls.first().map_or(0, |c| c.len())
    }

    /// Fraction of stages flagged occluded.
    pub fn occluded_fraction(&self) -> f64 {
        if self.occluded.is_empty() {
            return 0.0;
        }
        self.occluded.iter().filter(|&&f| f).count() as f64 / self.occluded.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.states.iter().all(|x| x.iter().all(|v| v.is_finite()))
            && self
                .controls
                .iter()
                .all(|us| us.iter().all(|u| u.iter().all(|v| v.is_finite())))
    }
}

/// One problem found by [`validate_lq_game`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationIssue {
    /// 1-based stage the issue was found at.
    pub stage: usize,
    pub what: String,
}

/// Result of validating an [`LqGame`].
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

const SYMMETRY_TOL: f64 = 1e-12;

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Check every stage of a game for dimensional consistency, cost-matrix
/// symmetry (tolerance `1e-12`), and positive-definite own-control costs.
/// Diagnostic only: all problems are collected, none abort the scan.
pub fn validate_lq_game(game: &LqGame) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = game.state_dim();
    let dims = game.control_dims().to_vec();
    let num_players = game.num_players();

    for t in 1..=game.horizon() {
        let mut issue = |what: String| report.issues.push(ValidationIssue { stage: t, what });
        let dyn_stage = game.dynamics(t);
        let cost_stage = game.costs(t);

        if dyn_stage.a_mat.nrows() != n || dyn_stage.a_mat.ncols() != n {
            issue(format!(
                "A is {}x{}, expected {n}x{n}",
                dyn_stage.a_mat.nrows(),
                dyn_stage.a_mat.ncols()
            ));
        }
        if dyn_stage.b_mats.len() != num_players {
            issue(format!("{} control maps for {} players", dyn_stage.b_mats.len(), num_players));
        }
        for (i, b) in dyn_stage.b_mats.iter().enumerate() {
            if b.nrows() != n {
                issue(format!("B[{i}] has {} rows, expected {n}", b.nrows()));
            }
            if i < dims.len() && b.ncols() != dims[i] {
                issue(format!("B[{i}] has {} cols, expected {}", b.ncols(), dims[i]));
            }
        }

        if cost_stage.players.len() != num_players {
            issue(format!("{} cost records for {} players", cost_stage.players.len(), num_players));
        }
        for (i, cost) in cost_stage.players.iter().enumerate() {
            if cost.q_mat.nrows() != n || cost.q_mat.ncols() != n {
                issue(format!("Q[{i}] is {}x{}, expected {n}x{n}", cost.q_mat.nrows(), cost.q_mat.ncols()));
            } else if max_asymmetry(&cost.q_mat) > SYMMETRY_TOL {
                issue(format!("Q[{i}] asymmetric by {:.2e}", max_asymmetry(&cost.q_mat)));
            }
            if cost.q_vec.len() != n {
                issue(format!("q[{i}] has length {}, expected {n}", cost.q_vec.len()));
            }
            if cost.r_mats.len() != num_players || cost.r_vecs.len() != num_players {
                issue(format!("player {i} has control costs for {} players, expected {num_players}", cost.r_mats.len()));
                continue;
            }
            for (j, r) in cost.r_mats.iter().enumerate() {
                let m = dims.get(j).copied().unwrap_or(0);
                if r.nrows() != m || r.ncols() != m {
                    issue(format!("R[{i}][{j}] is {}x{}, expected {m}x{m}", r.nrows(), r.ncols()));
                    continue;
                }
                if max_asymmetry(r) > SYMMETRY_TOL {
                    issue(format!("R[{i}][{j}] asymmetric by {:.2e}", max_asymmetry(r)));
                }
                if cost.r_vecs[j].len() != m {
                    issue(format!("r[{i}][{j}] has length {}, expected {m}", cost.r_vecs[j].len()));
                }
                if i == j && r.clone().cholesky().is_none() {
                    issue(format!("R[{i}][{i}] not positive definite"));
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use proptest::prelude::*;

    pub(crate) fn scalar_game(t: usize, a: f64, b: f64, q: f64, r: f64) -> LqGame {
        let stage = (
            LinearDynamicsStage {
                a_mat: dmatrix![a],
                b_mats: vec![dmatrix![b]],
            },
            QuadraticCostStage {
                players: vec![PlayerStageCost {
                    q_mat: dmatrix![q],
                    q_vec: dvector![0.0],
                    r_mats: vec![dmatrix![r]],
                    r_vecs: vec![dvector![0.0]],
                }],
            },
        );
        LqGame::new(vec![stage; t]).unwrap()
    }

    #[test]
    fn identity_scalar_game_is_valid() {
        let game = scalar_game(3, 1.0, 1.0, 1.0, 1.0);
        assert!(validate_lq_game(&game).is_valid());
    }

    #[test]
    fn zero_own_control_cost_is_flagged() {
        let game = scalar_game(2, 1.0, 1.0, 1.0, 0.0);
        let report = validate_lq_game(&game);
        assert!(!report.is_valid());
        assert!(report.issues.iter().any(|i| i.what.contains("not positive definite")));
    }

    #[test]
    fn wrong_b_row_count_reports_stage() {
        let mut game = scalar_game(3, 1.0, 1.0, 1.0, 1.0);
        game.stages[1].0.b_mats[0] = DMatrix::zeros(2, 1);
        let report = validate_lq_game(&game);
        assert!(report.issues.iter().any(|i| i.stage == 2 && i.what.contains("rows")));
    }

    #[test]
    fn partition_all_visible() {
        let sched = partition_from_flags(&[false, false, false]).unwrap();
        assert_eq!(sched.periods(), &[Period { start: 1, end: 3, mode: PeriodMode::Feedback }]);
        assert_eq!(sched.occluded_count(), 0);
        assert_eq!(sched.visible_count(), 1);
    }

    #[test]
    fn partition_mixed_runs() {
        let sched = partition_from_flags(&[false, false, true, true, false]).unwrap();
        assert_eq!(
            sched.periods(),
            &[
                Period { start: 1, end: 2, mode: PeriodMode::Feedback },
                Period { start: 3, end: 4, mode: PeriodMode::OpenLoop },
                Period { start: 5, end: 5, mode: PeriodMode::Feedback },
            ]
        );
        assert_eq!(sched.occluded_count(), 1);
        assert_eq!(sched.visible_count(), 2);
    }

    #[test]
    fn partition_single_occluded_stage() {
        let sched = partition_from_flags(&[true]).unwrap();
        assert_eq!(sched.periods(), &[Period { start: 1, end: 1, mode: PeriodMode::OpenLoop }]);
        assert_eq!(sched.occluded_count(), 1);
        assert_eq!(sched.visible_count(), 0);
    }

    #[test]
    fn partition_rejects_empty() {
        assert!(matches!(partition_from_flags(&[]), Err(GameError::EmptyFlags)));
    }

    #[test]
    fn schedule_rejects_non_alternating() {
        let periods = vec![
            Period { start: 1, end: 2, mode: PeriodMode::Feedback },
            Period { start: 3, end: 4, mode: PeriodMode::Feedback },
        ];
        assert!(InformationSchedule::new(periods, 4).is_err());
    }

    proptest! {
        #[test]
        fn partition_roundtrips_and_covers(flags in proptest::collection::vec(any::<bool>(), 1..60)) {
            let sched = partition_from_flags(&flags).unwrap();
            // Covers 1..=T with no gaps or overlaps.
            let mut covered = Vec::new();
            for p in sched.periods() {
                covered.extend(p.stages());
            }
            prop_assert_eq!(covered, (1..=flags.len()).collect::<Vec<_>>());
            prop_assert_eq!(sched.occluded_count() + sched.visible_count(), sched.periods().len());
            // Inverse of flattening.
            prop_assert_eq!(sched.to_flags(), flags);
        }
    }
}
