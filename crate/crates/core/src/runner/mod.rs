//! Scenario files, launch construction and the run, sweep and mask pipelines.

pub mod batch;
pub mod beam;
pub mod pipelines;
pub mod presets;
pub mod run;
pub mod scenario;
pub mod sweep;

pub use batch::{run_set, Fig3Comparison};
pub use beam::{build_launch, maximal_width, solve_kt_for_width, Launch};
pub use pipelines::{run_mask_pipeline, solve_profiles, MaskJob, ProfileSetSpec};
pub use run::{prepare, run_scenario, RunOutcome, RunSummary};
pub use sweep::{run_sweep, SweepPoint, SweepResult};
pub use scenario::{InitialKind, Scenario, SCHEMA_VERSION};
