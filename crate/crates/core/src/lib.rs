//! Planning stack for a row-crop weeding gantry: field modeling, per-axis
//! target assignment, feasibility-scored open-path route planning with
//! segment or rolling observation, bio-diversity-aware trajectory selection,
//! and a deterministic execution simulator with run metrics.

pub mod assignment;
pub mod error;
pub mod experiment;
pub mod field;
pub mod kinematics;
pub mod oracle;
pub mod planner;
pub mod report;
pub mod simulator;

pub use error::{Error, Result};
pub use field::{
    generate_field, load_field, reach_probability, save_field, FieldModel, FieldSpec, Plant,
    PlantKind, Priority, SpeciesSpec,
};
pub use kinematics::{displacement, entry_time, Displacement, ToolConfig};
pub use planner::{
    build_graph, enumerate_notsp, favorability, feasibility, harmfulness, plan_rolling_view,
    plan_segment_view, score_trajectory, select_trajectory, HarmfulnessContext, ObservationMode,
    PlannerConfig, RollingPlanner, RowPlan, TrajectoryCandidate,
};
pub use simulator::{
    aggregate_metrics, classify_hit, simulate_run, withhold_weeds, HitClass, MetricsSummary,
    RunMetrics, SimConfig,
};
