use thiserror::Error;

use crate::game::PeriodMode;

/// Errors raised by game construction and the LQ / iterative solvers.
#[derive(Debug, Error)]
pub enum GameError {
    #[error("flag sequence is empty")]
    EmptyFlags,

    #[error("dimension mismatch at stage {stage}: {what}")]
    DimensionMismatch { stage: usize, what: String },

    #[error("{what} is singular or ill-conditioned at stage {stage} (rcond {rcond:.3e})")]
    SingularSystem {
        stage: usize,
        what: &'static str,
        rcond: f64,
    },

    #[error("in {mode:?} period {period} [{start},{end}]: {source}")]
    InPeriod {
        period: usize,
        mode: PeriodMode,
        start: usize,
        end: usize,
        #[source]
        source: Box<GameError>,
    },

    #[error("schedule does not cover stages 1..{horizon}: {what}")]
    BadSchedule { horizon: usize, what: String },

    #[error("non-finite state encountered at stage {stage}")]
    NonFiniteState { stage: usize },

    #[error("unknown player index {index} (game has {count} players)")]
    UnknownPlayer { index: usize, count: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl GameError {
    /// Wrap a sub-solver error with the period it occurred in.
    pub(crate) fn in_period(self, period: usize, mode: PeriodMode, start: usize, end: usize) -> Self {
        GameError::InPeriod {
            period,
            mode,
            start,
            end,
            source: Box::new(self),
        }
    }
}
