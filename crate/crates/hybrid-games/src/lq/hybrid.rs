//! Hybrid-information LQ solver: solves each period of the schedule
//! backward in time with the matching pure solver, handing each period's
//! initial cost-to-go to the period before it as a terminal seed, then
//! rolls the full trajectory forward respecting each period's
//! information structure.

use nalgebra::DVector;

use crate::error::GameError;
use crate::game::{CostToGo, InformationSchedule, LqGame, PeriodMode, TrajectoryIterate};

use super::feedback::{solve_lq_feedback, FeedbackValueStage};
use super::open_loop::{open_loop_controls, solve_lq_open_loop, OpenLoopSolution, OpenLoopValueStage};
use super::affine_control;

/// Per-period solution data.
#[derive(Clone, Debug)]
pub enum PeriodSolution {
    OpenLoop(OpenLoopSolution),
    /// Stage records in forward order over the period.
    Feedback(Vec<FeedbackValueStage>),
}

/// Solution of a hybrid-information LQ game: one solved segment per
/// period of the schedule plus the boundary cost-to-go each segment was
/// seeded with (valid at its `t_e + 1`).
#[derive(Clone, Debug)]
pub struct HybridSolution {
    schedule: InformationSchedule,
    segments: Vec<PeriodSolution>,
    boundary_values: Vec<CostToGo>,
}

impl HybridSolution {
    pub fn schedule(&self) -> &InformationSchedule {
        &self.schedule
    }

    pub fn segments(&self) -> &[PeriodSolution] {
        &self.segments
    }

    /// Terminal cost-to-go the `j`-th period was solved with.
    pub fn boundary_value(&self, period_index: usize) -> &CostToGo {
        &self.boundary_values[period_index]
    }

    fn segment_index_at(&self, t: usize) -> usize {
        self.schedule
            .periods()
            .iter()
            .position(|p| p.start <= t && t <= p.end)
            .expect("stage within horizon")
    }

    /// Feedback stage record at 1-based stage `t`, if `t` lies in a
    /// feedback period.
    pub fn feedback_stage(&self, t: usize) -> Option<&FeedbackValueStage> {
        let j = self.segment_index_at(t);
        match &self.segments[j] {
            PeriodSolution::Feedback(stages) => Some(&stages[t - self.schedule.periods()[j].start]),
            PeriodSolution::OpenLoop(_) => None,
        }
    }

    /// Open-loop stage record at 1-based stage `t`, if `t` lies in an
    /// open-loop period.
    pub fn open_loop_stage(&self, t: usize) -> Option<&OpenLoopValueStage> {
        let j = self.segment_index_at(t);
        match &self.segments[j] {
            PeriodSolution::OpenLoop(sol) => Some(&sol.stages[t - self.schedule.periods()[j].start]),
            PeriodSolution::Feedback(_) => None,
        }
    }
}

/// Solve a hybrid-information LQ game over the given schedule.
///
/// Periods are processed from the last to the first. The final period is
/// seeded with an all-zero cost-to-go; every other period is seeded with
/// the value data its successor produced at its own start stage: feedback
/// periods hand over `(Z, z, c)` at `t_s`, open-loop periods hand over
/// their costate coefficients `(M, m)` at `t_s` with the constant carried
/// through unchanged.
pub fn solve_lq_hybrid(game: &LqGame, schedule: &InformationSchedule) -> Result<HybridSolution, GameError> {
    if schedule.horizon() != game.horizon() {
        return Err(GameError::BadSchedule {
            horizon: game.horizon(),
            what: format!("schedule covers {} stages", schedule.horizon()),
        });
    }
    let num_periods = schedule.periods().len();
    let mut seed = CostToGo::zero(game.state_dim(), game.num_players());
    let mut segments: Vec<Option<PeriodSolution>> = (0..num_periods).map(|_| None).collect();
    let mut boundary_values: Vec<Option<CostToGo>> = (0..num_periods).map(|_| None).collect();

    for j in (0..num_periods).rev() {
        let period = schedule.periods()[j];
        boundary_values[j] = Some(seed.clone());
        match period.mode {
            PeriodMode::Feedback => {
                let stages = solve_lq_feedback(game, period, &seed)
                    .map_err(|e| e.in_period(j + 1, period.mode, period.start, period.end))?;
                let first = &stages[0];
                seed = CostToGo {
                    mats: first.value_mats.clone(),
                    vecs: first.value_vecs.clone(),
                    consts: first.value_consts.clone(),
                };
                segments[j] = Some(PeriodSolution::Feedback(stages));
            }
            PeriodMode::OpenLoop => {
                let sol = solve_lq_open_loop(game, period, &seed)
                    .map_err(|e| e.in_period(j + 1, period.mode, period.start, period.end))?;
                let first = &sol.stages[0];
                // Handed over raw: the pair acts as a costate map, and the
                // preceding feedback period consumes it through affine
                // products only, which keeps re-centering about any
                // iterate exact.
                seed = CostToGo {
                    mats: first.value_mats.clone(),
                    vecs: first.value_vecs.clone(),
                    consts: seed.consts.clone(),
                };
                segments[j] = Some(PeriodSolution::OpenLoop(sol));
            }
        }
    }

    Ok(HybridSolution {
        schedule: schedule.clone(),
        segments: segments.into_iter().map(Option::unwrap).collect(),
        boundary_values: boundary_values.into_iter().map(Option::unwrap).collect(),
    })
}

/// Roll a hybrid solution forward from `x_1`.
///
/// Feedback periods apply the affine laws `u^i_t = -P^i_t x_t - a^i_t`
/// stage by stage. On entering an open-loop period the whole control
/// sequence is generated once from the realized entry state and then
/// played out without further state feedback.
pub fn rollout_hybrid(
    game: &LqGame,
    solution: &HybridSolution,
    x1: &DVector<f64>,
) -> Result<TrajectoryIterate, GameError> {
    if solution.schedule.horizon() != game.horizon() {
        return Err(GameError::BadSchedule {
            horizon: game.horizon(),
            what: "solution schedule does not match game horizon".into(),
        });
    }
    let mut states: Vec<DVector<f64>> = Vec::with_capacity(game.horizon());
    let mut controls: Vec<Vec<DVector<f64>>> = Vec::with_capacity(game.horizon());
    let mut x = x1.clone();

    for (period, segment) in solution.schedule.periods().iter().zip(&solution.segments) {
        match segment {
            PeriodSolution::Feedback(stages) => {
                for (k, t) in period.stages().enumerate() {
                    let stage = &stages[k];
                    let us: Vec<DVector<f64>> = stage
                        .gains
                        .iter()
                        .zip(&stage.offsets)
                        .map(|(p, a)| affine_control(p, a, &x))
                        .collect();
                    let x_next = game.dynamics(t).step(&x, &us);
                    states.push(std::mem::replace(&mut x, x_next));
                    controls.push(us);
                }
            }
            PeriodSolution::OpenLoop(sol) => {
                let (us_seq, xs_seq) = open_loop_controls(game, sol, &x)?;
                // The generated state sequence satisfies the dynamics under
                // the generated controls, so adopt it directly.
                for (us, x_now) in us_seq.into_iter().zip(xs_seq.iter()) {
                    states.push(x_now.clone());
                    controls.push(us);
                }
                x = xs_seq.last().unwrap().clone();
            }
        }
    }

    Ok(TrajectoryIterate {
        states,
        controls,
        occluded: solution.schedule.to_flags(),
    })
}
