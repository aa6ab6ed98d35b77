//! Shared instance builders for the benchmarks.

use streamwise_core::{partition_halo, partition_independent, partition_wavefront, CostModel, StageProfile, TaskSpec};

/// `n` independent tasks with identical stage costs.
pub fn uniform_tasks(n: usize, h: f64, k: f64, d: f64) -> Vec<TaskSpec> {
    partition_independent(n, n).expect("n >= 1").into_iter().map(|t| t.with_costs(h, k, d)).collect()
}

/// A `grid x grid` wavefront over a `64 grid` square matrix, priced per element.
pub fn wavefront_tasks(grid: usize) -> Vec<TaskSpec> {
    let side = 64 * grid;
    let mut tasks = partition_wavefront((side, side), (64, 64)).expect("conforming").tasks;
    CostModel::from_profile(&StageProfile::new(1.0, 4.0, 1.0), side * side).apply(&mut tasks);
    tasks
}

/// Halo split of a unit profile over `elements`.
pub fn halo_tasks(elements: usize, n_tasks: usize, radius: usize) -> Vec<TaskSpec> {
    let mut tasks = partition_halo(elements, n_tasks, radius).expect("valid halo").tasks;
    CostModel::from_profile(&StageProfile::new(1.0, 1.0, 0.5), elements).apply(&mut tasks);
    tasks
}
