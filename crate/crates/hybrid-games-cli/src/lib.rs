//! Scenario tooling around the hybrid-games solver: TOML scenario files,
//! run reports with trajectory metrics, CSV/JSON/SVG export, an
//! information-structure comparison, and a complexity benchmark.

pub mod bench;
pub mod config;
pub mod export;
pub mod plot;
pub mod report;
pub mod run;

pub use config::{load_scenario, prepare_scenario, InformationMode, PreparedScenario, ScenarioConfig};
pub use export::{export_trajectory, import_trajectory, write_report_json};
pub use plot::emit_plot;
pub use report::{compute_metrics, RunReport};
pub use run::{compare_structures, run_prepared, run_scenario, StructureComparison};
