//! Evaluation harness: simulated subjects per phase, aggregation of effort
//! metrics and the Kruskal-Wallis comparison across phases.

pub mod report;
pub mod setup;
pub mod simulate;
pub mod stats;

pub use report::{aggregate_report, render_table, Metric, RunReport};
pub use setup::{SimulationSetup, SimulationFile};
pub use simulate::{run_phase_simulation, PhaseConfig, SimulationRow, TaskSpec};
pub use stats::{kruskal_wallis, KruskalWallis};
