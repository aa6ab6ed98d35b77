use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("inconsistent runs: {0}")]
    InconsistentRuns(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible partition: {n_tasks} tasks over {n_elements} elements")]
    InfeasiblePartition { n_elements: usize, n_tasks: usize },

    #[error("degenerate halo: radius {radius} covers the whole domain of {n_elements} elements")]
    DegenerateHalo { n_elements: usize, radius: usize },

    #[error("block {block:?} does not divide matrix {matrix:?}")]
    NonConformingBlock { matrix: (usize, usize), block: (usize, usize) },

    #[error("invalid task set: {}", format_violations(.0))]
    InvalidTaskSet(Vec<Violation>),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
