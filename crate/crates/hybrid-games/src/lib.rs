//! Solvers for N-player general-sum dynamic games played under a hybrid
//! information structure: the horizon is partitioned into periods during
//! which players either observe the full state ("feedback" periods) or see
//! nothing beyond the state at the period start ("open-loop" periods).
//!
//! The crate has three layers:
//!
//! - [`game`]: the linear-quadratic game data model (stagewise dynamics and
//!   costs, information schedules, trajectories).
//! - [`lq`]: exact Nash solvers for linear-quadratic games under open-loop,
//!   feedback, and hybrid information structures, plus dense KKT and
//!   best-response oracles used for verification.
//! - [`solver`]: an iterative outer loop that reduces nonlinear,
//!   non-quadratic games (unicycle vehicles with driving costs) to a
//!   sequence of hybrid LQ games, re-detecting occlusions from the current
//!   trajectory iterate on every pass.
//!
//! Occlusion detection between rectangular agents lives in [`visibility`].

pub mod error;
pub mod game;
pub mod lq;
pub mod solver;
pub mod synth;
pub mod visibility;

pub use error::GameError;
pub use game::{
    partition_from_flags, validate_lq_game, CostToGo, InformationSchedule, LinearDynamicsStage,
    LqGame, Period, PeriodMode, QuadraticCostStage, TrajectoryIterate,
};
pub use lq::{
    kkt_oracle_solve, open_loop_controls, rollout_hybrid, solve_lq_feedback, solve_lq_hybrid,
    solve_lq_open_loop, HybridSolution,
};
pub use solver::{GameProblem, SolverSettings};
pub use visibility::{find_occlusions, pair_visible, segment_intersects_rectangle, OrientedRectangle};
