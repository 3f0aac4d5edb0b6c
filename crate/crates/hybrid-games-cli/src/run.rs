//! Scenario execution: single runs and the three-way information
//! structure comparison.

use std::time::Instant;

use anyhow::Result;
use serde::Serialize;

use hybrid_games::game::TrajectoryIterate;
use hybrid_games::solver::solve;

use crate::config::{prepare_scenario, InformationMode, PreparedScenario, ScenarioConfig};
use crate::report::{compute_metrics, RunReport};

/// Solve one prepared scenario and aggregate metrics. Solver failures are
/// folded into the report rather than escalated; in that case the initial
/// rollout is returned so exports still work.
pub fn run_prepared(scenario: &PreparedScenario) -> (RunReport, TrajectoryIterate) {
    let start = Instant::now();
    let result = solve(
        &scenario.problem,
        &scenario.schedule_source(),
        &scenario.settings,
        Some(scenario.initial_controls.clone()),
    );
    let elapsed = start.elapsed().as_secs_f64();

    match result {
        Ok(outcome) => {
            let metrics = compute_metrics(&outcome.trajectory, scenario);
            let report = RunReport::from_metrics(
                scenario,
                &metrics,
                outcome.converged,
                outcome.iterations,
                outcome.trajectory.occluded.clone(),
                elapsed,
            );
            (report, outcome.trajectory)
        }
        Err(e) => {
            // Fall back to the bare initial rollout for reporting.
            let fallback = hybrid_games::solver::get_trajectory(
                &scenario.problem,
                &scenario.problem.initial_state,
                hybrid_games::solver::Strategy::Controls(&scenario.initial_controls),
            )
            .expect("initial rollout of a finite problem");
            let metrics = compute_metrics(&fallback, scenario);
            let mut report = RunReport::from_metrics(
                scenario,
                &metrics,
                false,
                0,
                fallback.occluded.clone(),
                elapsed,
            );
            report.error = Some(e.to_string());
            (report, fallback)
        }
    }
}

/// Prepare (jitter + assemble) and run a scenario in the given mode.
pub fn run_scenario(
    config: &ScenarioConfig,
    seed: u64,
    mode: InformationMode,
) -> (RunReport, TrajectoryIterate) {
    let prepared = prepare_scenario(config, seed, mode);
    run_prepared(&prepared)
}

/// Outcome of running the same initialization under all three
/// information structures.
#[derive(Debug, Serialize)]
pub struct StructureComparison {
    pub hybrid: RunReport,
    pub openloop: RunReport,
    pub feedback: RunReport,
    /// Modes ordered by max lane-center deviation, smallest first.
    pub lane_deviation_ordering: Vec<String>,
    /// Hybrid keeps the lane at least as well as pure open-loop play.
    pub hybrid_no_worse_than_openloop: bool,
}

/// Run all three information modes from the identical jittered
/// initialization and rank them by lane keeping. Per-mode failures are
/// recorded in the individual reports; the comparison is still emitted.
pub fn compare_structures(
    config: &ScenarioConfig,
    seed: u64,
) -> (StructureComparison, Vec<(String, TrajectoryIterate)>) {
    let modes = [InformationMode::Hybrid, InformationMode::Openloop, InformationMode::Feedback];
    let mut results: Vec<(RunReport, TrajectoryIterate)> = modes
        .iter()
        .map(|&mode| run_scenario(config, seed, mode))
        .collect();

    let feedback = results.pop().expect("three runs");
    let openloop = results.pop().expect("three runs");
    let hybrid = results.pop().expect("three runs");

    let mut ordering: Vec<(String, f64)> = [
        ("hybrid".to_string(), hybrid.0.max_lane_deviation),
        ("openloop".to_string(), openloop.0.max_lane_deviation),
        ("feedback".to_string(), feedback.0.max_lane_deviation),
    ]
    .into();
    ordering.sort_by(|a, b| a.1.total_cmp(&b.1));

    let comparison = StructureComparison {
        hybrid_no_worse_than_openloop: hybrid.0.max_lane_deviation
            <= openloop.0.max_lane_deviation,
        lane_deviation_ordering: ordering.into_iter().map(|(m, _)| m).collect(),
        hybrid: hybrid.0,
        openloop: openloop.0,
        feedback: feedback.0,
    };
    let trajectories = vec![
        ("hybrid".to_string(), hybrid.1),
        ("openloop".to_string(), openloop.1),
        ("feedback".to_string(), feedback.1),
    ];
    (comparison, trajectories)
}

/// Convenience used by tests: run and fail on solver error.
pub fn run_scenario_strict(
    config: &ScenarioConfig,
    seed: u64,
    mode: InformationMode,
) -> Result<(RunReport, TrajectoryIterate)> {
    let (report, traj) = run_scenario(config, seed, mode);
    if let Some(err) = &report.error {
        anyhow::bail!("solver failed: {err}");
    }
    Ok((report, traj))
}
