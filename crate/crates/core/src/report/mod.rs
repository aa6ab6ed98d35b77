//! File formats, the report document, the simulation config schema and the
//! command flows built on them.

mod commands;
mod config;
mod doc;
mod tables;

pub use commands::{
    analyze, run_workload, simulate_config, simulate_run, Analysis, ConfigSummary, Prediction, RunOutcome, RunSpec,
    SimOverrides, Simulation, WorkloadKind, WorkloadRun,
};
pub use config::{parse_device, AssignmentName, DependencyName, RunConfig, SimConfig, DEFAULT_MAX_STREAMS};
pub use doc::{Report, Section};
pub use tables::{
    fmt_time, read_cdf, read_tasks, read_timeline, read_trace, write_cdf, write_tasks, write_timeline, write_trace,
    CDF_HEADER, TASKS_HEADER, TIMELINE_HEADER, TRACE_HEADER,
};
