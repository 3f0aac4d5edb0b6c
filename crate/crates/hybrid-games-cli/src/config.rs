//! Scenario files: TOML schema, defaults, validation, and conversion into
//! solver inputs.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use hybrid_games::solver::{
    CostWeights, LaneGeometry, ScheduleSource, SolverSettings, UnicycleProblem,
};
use hybrid_games::game::{InformationSchedule, PeriodMode};
use hybrid_games::visibility::{BodyTemplate, OccluderSet, OrientedRectangle};

/// Information structure the run is solved under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InformationMode {
    /// Occlusions re-detected from the iterate every iteration.
    Hybrid,
    /// One open-loop period over the whole horizon.
    Openloop,
    /// One feedback period over the whole horizon (information leaked).
    Feedback,
}

impl std::str::FromStr for InformationMode {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" => Ok(Self::Hybrid),
            "openloop" => Ok(Self::Openloop),
            "feedback" => Ok(Self::Feedback),
            other => bail!("unknown mode {other:?} (expected hybrid, openloop, or feedback)"),
        }
    }
}

impl std::fmt::Display for InformationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Hybrid => "hybrid",
            Self::Openloop => "openloop",
            Self::Feedback => "feedback",
        };
        write!(f, "{s}")
    }
}

fn default_lane_half_width() -> f64 {
    3.75
}
fn default_proximity_threshold() -> f64 {
    3.0
}
fn default_eta() -> f64 {
    0.1
}
fn default_tolerance() -> f64 {
    1e-2
}
fn default_samples_per_edge() -> usize {
    3
}
fn default_max_iterations() -> usize {
    200
}
fn default_regularization() -> f64 {
    1e-3
}
fn default_max_backoffs() -> usize {
    10
}
fn default_speed_max() -> f64 {
    f64::INFINITY
}
fn default_mode() -> InformationMode {
    InformationMode::Hybrid
}
fn default_control_weights() -> [f64; 2] {
    [1.0, 1.0]
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub horizon: usize,
    pub dt: f64,
    #[serde(default = "default_mode")]
    pub mode: InformationMode,
    #[serde(default)]
    pub seed: u64,
    /// Uniform jitter half-ranges on each player's initial x and y.
    #[serde(default)]
    pub jitter_position: [f64; 2],
    /// Uniform jitter half-range on each player's initial speed.
    #[serde(default)]
    pub jitter_speed: f64,
    /// 1-based player index pairs tested for mutual visibility.
    /// Defaults to every pair.
    #[serde(default)]
    pub interacting_pairs: Option<Vec<[usize; 2]>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSection {
    /// Initial `(x, y, speed, heading)`.
    pub start: [f64; 4],
    /// Body length along the heading, meters.
    pub length: f64,
    /// Body width, meters.
    pub width: f64,
    pub goal: [f64; 2],
    pub goal_weight: f64,
    pub nominal_speed: f64,
    pub speed_weight: f64,
    /// Diagonal control cost (turn rate, acceleration).
    #[serde(default = "default_control_weights")]
    pub control_weights: [f64; 2],
    pub lane_point: [f64; 2],
    pub lane_direction: [f64; 2],
    #[serde(default)]
    pub lane_center_weight: f64,
    #[serde(default)]
    pub lane_crossing_weight: f64,
    #[serde(default = "default_lane_half_width")]
    pub lane_half_width: f64,
    #[serde(default)]
    pub proximity_weight: f64,
    #[serde(default = "default_proximity_threshold")]
    pub proximity_threshold: f64,
    #[serde(default)]
    pub speed_bound_weight: f64,
    #[serde(default = "default_speed_max")]
    pub speed_max: f64,
    #[serde(default)]
    pub speed_min: f64,
    /// Whether this body occludes other pairs' sight lines.
    #[serde(default)]
    pub occludes: bool,
    /// Constant control played by the initial strategy.
    #[serde(default)]
    pub initial_control: [f64; 2],
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OccluderSection {
    pub center: [f64; 2],
    pub length: f64,
    pub width: f64,
    #[serde(default)]
    pub heading: f64,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub eta: Option<f64>,
    pub max_iterations: Option<usize>,
    pub state_tolerance: Option<f64>,
    pub control_tolerance: Option<f64>,
    pub control_regularization: Option<f64>,
    pub psd_floor: Option<f64>,
    pub max_backoffs: Option<usize>,
    pub samples_per_edge: Option<usize>,
}

/// A parsed and validated scenario file.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub game: GameSection,
    pub players: Vec<PlayerSection>,
    #[serde(default)]
    pub occluders: Vec<OccluderSection>,
    #[serde(default)]
    pub solver: SolverSection,
}

impl ScenarioConfig {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    /// 0-based interacting pairs (defaults to all pairs).
    pub fn interacting_pairs(&self) -> Vec<(usize, usize)> {
        match &self.game.interacting_pairs {
            Some(pairs) => pairs.iter().map(|p| (p[0] - 1, p[1] - 1)).collect(),
            None => {
                let n = self.players.len();
                let mut all = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        all.push((i, j));
                    }
                }
                all
            }
        }
    }

    pub fn solver_settings(&self) -> SolverSettings {
        let d = SolverSettings::default();
        SolverSettings {
            step_size: self.solver.eta.unwrap_or(default_eta()),
            max_iterations: self.solver.max_iterations.unwrap_or(default_max_iterations()),
            state_tolerance: self.solver.state_tolerance.unwrap_or(default_tolerance()),
            control_tolerance: self.solver.control_tolerance.unwrap_or(default_tolerance()),
            control_regularization: self
                .solver
                .control_regularization
                .unwrap_or(default_regularization()),
            psd_floor: self.solver.psd_floor.unwrap_or(d.psd_floor),
            max_backoffs: self.solver.max_backoffs.unwrap_or(default_max_backoffs()),
        }
    }

    pub fn samples_per_edge(&self) -> usize {
        self.solver.samples_per_edge.unwrap_or(default_samples_per_edge())
    }

    fn validate(&self) -> Result<()> {
        if self.game.dt <= 0.0 {
            bail!("[game].dt must be positive, got {}", self.game.dt);
        }
        if self.game.horizon < 2 {
            bail!("[game].horizon must be at least 2, got {}", self.game.horizon);
        }
        if self.players.is_empty() {
            bail!("[[players]] must list at least one player");
        }
        if let Some(pairs) = &self.game.interacting_pairs {
            for (k, p) in pairs.iter().enumerate() {
                for &idx in p {
                    if idx < 1 || idx > self.players.len() {
                        bail!(
                            "[game].interacting_pairs[{k}] references player {idx}, valid range is 1..={}",
                            self.players.len()
                        );
                    }
                }
                if p[0] == p[1] {
                    bail!("[game].interacting_pairs[{k}] pairs player {} with itself", p[0]);
                }
            }
        }
        for (k, p) in self.players.iter().enumerate() {
            let at = |field: &str| format!("[[players]][{k}].{field}");
            if p.length <= 0.0 || p.width <= 0.0 {
                bail!("{} must be positive", at("length/width"));
            }
            if p.control_weights[0] <= 0.0 || p.control_weights[1] <= 0.0 {
                bail!("{} must be positive (control cost must be positive definite)", at("control_weights"));
            }
            let dir = Vector2::new(p.lane_direction[0], p.lane_direction[1]);
            if dir.norm() == 0.0 {
                bail!("{} must be a nonzero vector", at("lane_direction"));
            }
            if p.lane_half_width <= 0.0 {
                bail!("{} must be positive", at("lane_half_width"));
            }
            if p.proximity_threshold <= 0.0 {
                bail!("{} must be positive", at("proximity_threshold"));
            }
            if p.speed_min >= p.speed_max {
                bail!("{} must satisfy speed_min < speed_max", at("speed_min"));
            }
            for (w, name) in [
                (p.goal_weight, "goal_weight"),
                (p.speed_weight, "speed_weight"),
                (p.lane_center_weight, "lane_center_weight"),
                (p.lane_crossing_weight, "lane_crossing_weight"),
                (p.proximity_weight, "proximity_weight"),
                (p.speed_bound_weight, "speed_bound_weight"),
            ] {
                if w < 0.0 {
                    bail!("{} must be nonnegative", at(name));
                }
            }
        }
        for (k, o) in self.occluders.iter().enumerate() {
            if o.length <= 0.0 || o.width <= 0.0 {
                bail!("[[occluders]][{k}].length/width must be positive");
            }
        }
        if let Some(eta) = self.solver.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                bail!("[solver].eta must lie in (0, 1], got {eta}");
            }
        }
        for (v, name) in [
            (self.solver.state_tolerance, "state_tolerance"),
            (self.solver.control_tolerance, "control_tolerance"),
        ] {
            if let Some(v) = v {
                if v <= 0.0 {
                    bail!("[solver].{name} must be positive, got {v}");
                }
            }
        }
        Ok(())
    }
}

/// Parse and validate a scenario file. Parse errors carry the TOML line
/// and column; semantic errors carry the offending field path.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    let config: ScenarioConfig = toml::from_str(&text)
        .with_context(|| format!("parse error in {}", path.display()))?;
    config
        .validate()
        .with_context(|| format!("invalid scenario {}", path.display()))?;
    Ok(config)
}

/// Everything the solver needs for one run, with jitter applied.
#[derive(Clone, Debug)]
pub struct PreparedScenario {
    pub problem: UnicycleProblem,
    pub geometry: Vec<BodyTemplate>,
    pub occluders: OccluderSet,
    pub interacting_pairs: Vec<(usize, usize)>,
    pub settings: SolverSettings,
    pub initial_controls: Vec<Vec<DVector<f64>>>,
    pub mode: InformationMode,
    pub samples_per_edge: usize,
    pub seed: u64,
}

impl PreparedScenario {
    /// The schedule source matching the run mode. Forced modes never
    /// consult the visibility machinery.
    pub fn schedule_source(&self) -> ScheduleSource {
        match self.mode {
            InformationMode::Hybrid => ScheduleSource::Detected {
                geometry: self.geometry.clone(),
                occluders: self.occluders.clone(),
                interacting_pairs: self.interacting_pairs.clone(),
                samples_per_edge: self.samples_per_edge,
            },
            InformationMode::Openloop => ScheduleSource::Fixed(InformationSchedule::single(
                PeriodMode::OpenLoop,
                self.problem.horizon,
            )),
            InformationMode::Feedback => ScheduleSource::Fixed(InformationSchedule::single(
                PeriodMode::Feedback,
                self.problem.horizon,
            )),
        }
    }
}

/// Instantiate a run from a config: applies the seeded uniform jitter to
/// initial positions and speeds and assembles the solver inputs.
pub fn prepare_scenario(config: &ScenarioConfig, seed: u64, mode: InformationMode) -> PreparedScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.players.len();

    let mut initial_state = DVector::zeros(4 * n);
    for (i, p) in config.players.iter().enumerate() {
        let jitter = |rng: &mut ChaCha8Rng, half: f64| {
            if half > 0.0 {
                rng.gen_range(-half..half)
            } else {
                0.0
            }
        };
        initial_state[4 * i] = p.start[0] + jitter(&mut rng, config.game.jitter_position[0]);
        initial_state[4 * i + 1] = p.start[1] + jitter(&mut rng, config.game.jitter_position[1]);
        initial_state[4 * i + 2] = p.start[2] + jitter(&mut rng, config.game.jitter_speed);
        initial_state[4 * i + 3] = p.start[3];
    }

    let weights = config
        .players
        .iter()
        .map(|p| CostWeights {
            goal_position: Vector2::new(p.goal[0], p.goal[1]),
            goal_weight: p.goal_weight,
            nominal_speed: p.nominal_speed,
            speed_weight: p.speed_weight,
            control_weights: Vector2::new(p.control_weights[0], p.control_weights[1]),
            lane: LaneGeometry::new(
                Vector2::new(p.lane_point[0], p.lane_point[1]),
                Vector2::new(p.lane_direction[0], p.lane_direction[1]),
            ),
            lane_center_weight: p.lane_center_weight,
            lane_crossing_weight: p.lane_crossing_weight,
            lane_half_width: p.lane_half_width,
            proximity_weight: p.proximity_weight,
            proximity_threshold: p.proximity_threshold,
            speed_bound_weight: p.speed_bound_weight,
            speed_max: p.speed_max,
            speed_min: p.speed_min,
        })
        .collect();

    let problem = UnicycleProblem {
        horizon: config.game.horizon,
        dt: config.game.dt,
        initial_state,
        weights,
    };

    let geometry = config
        .players
        .iter()
        .map(|p| BodyTemplate { length: p.length, width: p.width })
        .collect();

    let occluders = OccluderSet {
        static_rects: config
            .occluders
            .iter()
            .map(|o| {
                OrientedRectangle::new(
                    Vector2::new(o.center[0], o.center[1]),
                    o.length,
                    o.width,
                    o.heading,
                )
            })
            .collect(),
        attached_players: config
            .players
            .iter()
            .enumerate()
            .filter(|(_, p)| p.occludes)
            .map(|(i, _)| i)
            .collect(),
    };

    let initial_controls = (0..config.game.horizon)
        .map(|_| {
            config
                .players
                .iter()
                .map(|p| DVector::from_vec(vec![p.initial_control[0], p.initial_control[1]]))
                .collect()
        })
        .collect();

    PreparedScenario {
        problem,
        geometry,
        occluders,
        interacting_pairs: config.interacting_pairs(),
        settings: config.solver_settings(),
        initial_controls,
        mode,
        samples_per_edge: config.samples_per_edge(),
        seed,
    }
}
