//! Category-specific task decomposition: uniform split, halo replication for
//! read-only sharing, and wavefront blocking for read-after-write grids.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{Assignment, Category, DepKind, DependencyDescriptor, StageProfile, StreamConfig, TaskSpec};
use crate::ratio::{classify, classify_all};

fn split_ranges(n_elements: usize, n_tasks: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if n_tasks == 0 || n_tasks > n_elements {
        return Err(Error::InfeasiblePartition { n_elements, n_tasks });
    }
    let base = n_elements / n_tasks;
    let rem = n_elements % n_tasks;
    let mut start = 0;
    Ok((0..n_tasks)
        .map(|i| {
            let len = base + usize::from(i < rem);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

/// Contiguous near-equal split; the first `n % tasks` tasks get one extra element.
pub fn partition_independent(n_elements: usize, n_tasks: usize) -> Result<Vec<TaskSpec>> {
    Ok(split_ranges(n_elements, n_tasks)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| TaskSpec::new(i, r))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaloPartition {
    pub tasks: Vec<TaskSpec>,
    pub radius: usize,
    /// Transferred elements over owned elements, summed across tasks.
    pub inflation: f64,
}

impl HaloPartition {
    /// Largest per-task transfer/owned ratio, i.e. that of an interior task.
    pub fn max_task_inflation(&self) -> f64 {
        self.tasks
            .iter()
            .map(|t| t.transfer_len() as f64 / t.owned_len() as f64)
            .fold(1.0, f64::max)
    }
}

/// Inflation of a task owning `owned` elements that must also upload
/// `boundary` replicated neighbours.
pub fn task_inflation(owned: usize, boundary: usize) -> f64 {
    (owned + boundary) as f64 / owned as f64
}

/// Independent split whose transfer ranges are widened by `radius` on each
/// side (clipped to the domain), removing the read-only dependency.
pub fn partition_halo(n_elements: usize, n_tasks: usize, radius: usize) -> Result<HaloPartition> {
    if radius >= n_elements && n_elements > 0 {
        return Err(Error::DegenerateHalo { n_elements, radius });
    }
    let mut tasks = partition_independent(n_elements, n_tasks)?;
    for t in &mut tasks {
        t.transfer = t.owned.start.saturating_sub(radius)..(t.owned.end + radius).min(n_elements);
    }
    let moved: usize = tasks.iter().map(TaskSpec::transfer_len).sum();
    let owned: usize = tasks.iter().map(TaskSpec::owned_len).sum();
    Ok(HaloPartition { tasks, radius, inflation: moved as f64 / owned as f64 })
}

/// Block grid processed anti-diagonal by anti-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefrontSchedule {
    /// Block grid as (rows, cols).
    pub block_dims: (usize, usize),
    /// Elements per block as (h, w).
    pub block_size: (usize, usize),
    /// Block ids per diagonal; ids are numbered in this order.
    pub diagonals: Vec<Vec<usize>>,
    pub tasks: Vec<TaskSpec>,
    pub layout: BlockedLayout,
}

impl WavefrontSchedule {
    pub fn widths(&self) -> Vec<usize> {
        self.diagonals.iter().map(Vec::len).collect()
    }

    /// Grid coordinates of a block id.
    pub fn coords(&self, id: usize) -> (usize, usize) {
        self.layout.block_order[id]
    }

    pub fn block_id(&self, row: usize, col: usize) -> usize {
        self.layout.block_index(row, col)
    }

    /// Position of each block within its diagonal, used to put concurrent
    /// blocks on distinct streams.
    pub fn lanes(&self) -> Vec<usize> {
        let mut lanes = vec![0; self.tasks.len()];
        for diag in &self.diagonals {
            for (pos, &id) in diag.iter().enumerate() {
                lanes[id] = pos;
            }
        }
        lanes
    }

    pub fn stream_config(&self, n_streams: usize) -> StreamConfig {
        StreamConfig::new(n_streams).with_assignment(Assignment::Lanes(self.lanes()))
    }
}

/// Storage order in which every block is contiguous and blocks follow
/// (diagonal, row) order. Row-major inside a block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockedLayout {
    pub matrix: (usize, usize),
    pub block: (usize, usize),
    pub grid: (usize, usize),
    /// Grid coordinates in storage order.
    pub block_order: Vec<(usize, usize)>,
    /// Storage position of each block, indexed row-major over the grid.
    rank: Vec<usize>,
}

impl BlockedLayout {
    pub fn len(&self) -> usize {
        self.matrix.0 * self.matrix.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block_len(&self) -> usize {
        self.block.0 * self.block.1
    }

    fn block_index(&self, row: usize, col: usize) -> usize {
        self.rank[row * self.grid.1 + col]
    }

    /// First linear index of the block at grid position (row, col).
    pub fn block_offset(&self, row: usize, col: usize) -> usize {
        self.block_index(row, col) * self.block_len()
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        let (h, w) = self.block;
        self.block_offset(row / h, col / w) + (row % h) * w + col % w
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        let (h, w) = self.block;
        let (bi, bj) = self.block_order[index / self.block_len()];
        let local = index % self.block_len();
        (bi * h + local / w, bj * w + local % w)
    }

    /// `perm[row * cols + col]` is the blocked index of that element.
    pub fn permutation(&self) -> Vec<usize> {
        let (rows, cols) = self.matrix;
        (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).map(|(r, c)| self.index(r, c)).collect()
    }

    /// Rearranges a row-major matrix into blocked order.
    pub fn to_blocked<T: Copy>(&self, row_major: &[T]) -> Vec<T> {
        (0..self.len()).map(|i| {
            let (r, c) = self.coords(i);
            row_major[r * self.matrix.1 + c]
        }).collect()
    }

    /// Inverse of [`to_blocked`](Self::to_blocked).
    pub fn to_row_major<T: Copy>(&self, blocked: &[T]) -> Vec<T> {
        self.permutation().into_iter().map(|i| blocked[i]).collect()
    }
}

fn check_blocking(matrix: (usize, usize), block: (usize, usize)) -> Result<(usize, usize)> {
    let (rows, cols) = matrix;
    let (h, w) = block;
    if rows == 0 || cols == 0 || h == 0 || w == 0 || rows % h != 0 || cols % w != 0 {
        return Err(Error::NonConformingBlock { matrix, block });
    }
    Ok((rows / h, cols / w))
}

fn diagonal_order(grid: (usize, usize)) -> Vec<Vec<(usize, usize)>> {
    let (gr, gc) = grid;
    (0..gr + gc - 1)
        .map(|d| {
            let lo = d.saturating_sub(gc - 1);
            let hi = d.min(gr - 1);
            (lo..=hi).map(|i| (i, d - i)).collect()
        })
        .collect()
}

pub fn relayout_wavefront(matrix: (usize, usize), block: (usize, usize)) -> Result<BlockedLayout> {
    let grid = check_blocking(matrix, block)?;
    let block_order: Vec<(usize, usize)> = diagonal_order(grid).into_iter().flatten().collect();
    let mut rank = vec![0; grid.0 * grid.1];
    for (pos, &(i, j)) in block_order.iter().enumerate() {
        rank[i * grid.1 + j] = pos;
    }
    Ok(BlockedLayout { matrix, block, grid, block_order, rank })
}

/// Blocks numbered in diagonal order; each block depends on its north and
/// west neighbours (the north-west one is reached transitively). A block's
/// owned range is its span in the blocked layout.
pub fn partition_wavefront(matrix: (usize, usize), block: (usize, usize)) -> Result<WavefrontSchedule> {
    let layout = relayout_wavefront(matrix, block)?;
    let grid = layout.grid;
    let mut diagonals = Vec::new();
    let mut next = 0;
    for diag in diagonal_order(grid) {
        diagonals.push((next..next + diag.len()).collect());
        next += diag.len();
    }
    let bl = layout.block_len();
    let tasks = layout
        .block_order
        .iter()
        .enumerate()
        .map(|(id, &(i, j))| {
            let mut deps = BTreeSet::new();
            if i > 0 {
                deps.insert(layout.block_index(i - 1, j));
            }
            if j > 0 {
                deps.insert(layout.block_index(i, j - 1));
            }
            let mut t = TaskSpec::new(id, id * bl..(id + 1) * bl);
            t.deps = deps;
            t
        })
        .collect();
    Ok(WavefrontSchedule { block_dims: grid, block_size: block, diagonals, tasks, layout })
}

/// Problem extent handed to [`plan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Linear(usize),
    Matrix(usize, usize),
}

impl Domain {
    pub fn len(&self) -> usize {
        match *self {
            Domain::Linear(n) => n,
            Domain::Matrix(r, c) => r * c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanLayout {
    Independent,
    Halo { radius: usize, inflation: f64 },
    Wavefront(WavefrontSchedule),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamPlan {
    pub category: Category,
    pub labels: Vec<Category>,
    pub tasks: Vec<TaskSpec>,
    pub layout: PlanLayout,
    pub domain: Domain,
}

impl StreamPlan {
    /// Stream mapping suited to the layout: per-diagonal lanes for
    /// wavefronts, round-robin otherwise.
    pub fn stream_config(&self, n_streams: usize) -> StreamConfig {
        match &self.layout {
            PlanLayout::Wavefront(w) => w.stream_config(n_streams),
            _ => StreamConfig::new(n_streams),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Streamable(StreamPlan),
    NotStreamable { category: Category, labels: Vec<Category> },
}

/// Classifies the descriptor and runs the matching partitioner.
/// `n_tasks` is ignored for wavefront plans, whose grid comes from the descriptor.
pub fn plan(descriptor: &DependencyDescriptor, domain: Domain, n_tasks: usize) -> Result<Plan> {
    let category = classify(descriptor);
    let labels = classify_all(descriptor);
    if !category.is_streamable() {
        return Ok(Plan::NotStreamable { category, labels });
    }
    let (tasks, layout) = match descriptor.dep {
        DepKind::None => (partition_independent(domain.len(), n_tasks)?, PlanLayout::Independent),
        DepKind::ReadOnly { halo_radius } => {
            let h = partition_halo(domain.len(), n_tasks, halo_radius)?;
            (h.tasks, PlanLayout::Halo { radius: h.radius, inflation: h.inflation })
        }
        DepKind::ReadAfterWrite { blocks: (gr, gc) } => {
            let Domain::Matrix(rows, cols) = domain else {
                return Err(Error::Domain("wavefront plans need a matrix domain".into()));
            };
            if gr == 0 || gc == 0 || rows % gr != 0 || cols % gc != 0 {
                return Err(Error::NonConformingBlock { matrix: (rows, cols), block: (gr, gc) });
            }
            let w = partition_wavefront((rows, cols), (rows / gr, cols / gc))?;
            (w.tasks.clone(), PlanLayout::Wavefront(w))
        }
    };
    Ok(Plan::Streamable(StreamPlan { category, labels, tasks, layout, domain }))
}

/// Per-element stage costs used to price a task set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub h2d_per_element: f64,
    pub kex_per_element: f64,
    pub d2h_per_element: f64,
    /// Prices each upload as `owned x inflation` instead of by the transfer
    /// range, for replication extents the 1D halo geometry does not capture.
    pub h2d_inflation: Option<f64>,
}

impl CostModel {
    /// Spreads a whole-domain single-stream profile evenly over its elements.
    pub fn from_profile(p: &StageProfile, domain_len: usize) -> Self {
        let n = domain_len.max(1) as f64;
        Self { h2d_per_element: p.h2d / n, kex_per_element: p.kex / n, d2h_per_element: p.d2h / n, h2d_inflation: None }
    }

    pub fn with_h2d_inflation(mut self, inflation: f64) -> Self {
        self.h2d_inflation = Some(inflation);
        self
    }

    /// Kernels and downloads are priced on the owned range.
    pub fn apply(&self, tasks: &mut [TaskSpec]) {
        for t in tasks {
            let uploaded = match self.h2d_inflation {
                Some(f) => t.owned_len() as f64 * f,
                None => t.transfer_len() as f64,
            };
            t.h2d_cost = uploaded * self.h2d_per_element;
            t.kex_cost = t.owned_len() as f64 * self.kex_per_element;
            t.d2h_cost = t.owned_len() as f64 * self.d2h_per_element;
        }
    }

    /// The same tasks without any replication: what a single stream over the
    /// unpartitioned domain would move.
    pub fn baseline(&self, tasks: &[TaskSpec]) -> Vec<TaskSpec> {
        let plain = Self { h2d_inflation: None, ..*self };
        let mut out: Vec<TaskSpec> = tasks
            .iter()
            .map(|t| TaskSpec { transfer: t.owned.clone(), ..t.clone() })
            .collect();
        plain.apply(&mut out);
        out
    }
}
