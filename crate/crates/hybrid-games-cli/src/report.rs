//! Run reports and the trajectory metrics they aggregate.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use hybrid_games::game::TrajectoryIterate;
use hybrid_games::visibility::{player_pose, rectangles_intersect};

use crate::config::PreparedScenario;

/// Metrics of one solved trajectory plus run bookkeeping.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: String,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    /// Per-stage occlusion flags of the returned trajectory.
    pub occluded_flags: Vec<bool>,
    pub occluded_fraction: f64,
    /// Smallest center-to-center distance over all stages and pairs.
    pub min_pairwise_distance: f64,
    /// Stages at which any two player rectangles overlap.
    pub overlap_count: usize,
    /// Largest distance of any player from its lane center-line.
    pub max_lane_deviation: f64,
    /// Distance of each player to its goal at the final stage.
    pub goal_distances: Vec<f64>,
    pub wall_clock_seconds: f64,
    /// Set when the solver failed outright; the other metrics then refer
    /// to the last usable iterate (or are empty).
    #[serde(default)]
    pub error: Option<String>,
}

/// Pure function of (trajectory, scenario): the metric block of a report.
pub struct Metrics {
    pub occluded_fraction: f64,
    pub min_pairwise_distance: f64,
    pub overlap_count: usize,
    pub max_lane_deviation: f64,
    pub goal_distances: Vec<f64>,
}

pub fn compute_metrics(trajectory: &TrajectoryIterate, scenario: &PreparedScenario) -> Metrics {
    let n = scenario.problem.num_players();
    let mut min_dist = f64::INFINITY;
    let mut overlap_count = 0;
    let mut max_lane_dev = 0.0_f64;

    for state in &trajectory.states {
        let poses: Vec<(Vector2<f64>, f64)> = (0..n).map(|i| player_pose(state, i)).collect();
        let mut overlapped = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (poses[i].0 - poses[j].0).norm();
                min_dist = min_dist.min(d);
                let ri = scenario.geometry[i].at(poses[i].0, poses[i].1);
                let rj = scenario.geometry[j].at(poses[j].0, poses[j].1);
                if rectangles_intersect(&ri, &rj) {
                    overlapped = true;
                }
            }
            let dev = scenario.problem.weights[i].lane.signed_offset(poses[i].0).abs();
            max_lane_dev = max_lane_dev.max(dev);
        }
        if overlapped {
            overlap_count += 1;
        }
    }

    let last = trajectory.states.last().expect("nonempty trajectory");
    let goal_distances = (0..n)
        .map(|i| {
            let (p, _) = player_pose(last, i);
            (p - scenario.problem.weights[i].goal_position).norm()
        })
        .collect();

    Metrics {
        occluded_fraction: trajectory.occluded_fraction(),
        min_pairwise_distance: min_dist,
        overlap_count,
        max_lane_deviation: max_lane_dev,
        goal_distances,
    }
}

impl RunReport {
    pub fn from_metrics(
        scenario: &PreparedScenario,
        metrics: &Metrics,
        converged: bool,
        iterations: usize,
        occluded_flags: Vec<bool>,
        wall_clock_seconds: f64,
    ) -> Self {
        Self {
            mode: scenario.mode.to_string(),
            seed: scenario.seed,
            converged,
            iterations,
            occluded_flags,
            occluded_fraction: metrics.occluded_fraction,
            min_pairwise_distance: metrics.min_pairwise_distance,
            overlap_count: metrics.overlap_count,
            max_lane_deviation: metrics.max_lane_deviation,
            goal_distances: metrics.goal_distances.clone(),
            wall_clock_seconds,
            error: None,
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "mode={} converged={} iters={} occluded={:.1}% min_dist={:.2} overlaps={} lane_dev={:.2}",
            self.mode,
            self.converged,
            self.iterations,
            100.0 * self.occluded_fraction,
            self.min_pairwise_distance,
            self.overlap_count,
            self.max_lane_deviation
        )
    }
}
