//! Decide whether a host/accelerator application is worth streaming,
//! classify it by task dependency, partition it accordingly, and predict its
//! multi-stream pipelined execution against a single-stream baseline.

pub mod error;
pub mod model;
pub mod partition;
pub mod ratio;
pub mod report;
pub mod sim;
pub mod workloads;

pub use error::{Error, Result};
pub use model::{
    validate_task_set, Assignment, Category, DecisionBand, DepKind, DependencyDescriptor, DeviceSpec, RatioReport,
    Resource, RunMeta, Stage, StageInterval, StageProfile, StreamConfig, TaskSpec, Timeline, Violation,
};
pub use partition::{
    partition_halo, partition_independent, partition_wavefront, plan, relayout_wavefront, BlockedLayout, CostModel,
    Domain, HaloPartition, Plan, PlanLayout, StreamPlan, WavefrontSchedule,
};
pub use ratio::{aggregate_runs, build_cdf, classify, classify_all, compute_ratio, decide_streamworthy, CdfCurve, Verdict, VerdictKind};
pub use report::{Report, Section};
pub use sim::{improvement, lower_bound, simulate, simulate_serial, simulate_streams, sweep_streams, SimResult, Sweep};
