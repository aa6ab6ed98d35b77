//! Domain types shared by every module.
//!
//! All of these are plain value objects. Durations are `f64` seconds and
//! element ranges are half-open `Range<usize>`; bytes are derived from an
//! element count times a per-workload element size.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies which configuration a profile belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RunMeta {
    pub app: String,
    pub variant: String,
    pub dataset: String,
    pub platform: String,
    /// `None` once runs have been aggregated.
    pub run: Option<u32>,
}

impl RunMeta {
    pub fn new(app: &str, variant: &str, dataset: &str, platform: &str) -> Self {
        Self {
            app: app.to_owned(),
            variant: variant.to_owned(),
            dataset: dataset.to_owned(),
            platform: platform.to_owned(),
            run: None,
        }
    }

    pub fn with_run(mut self, run: u32) -> Self {
        self.run = Some(run);
        self
    }

    /// The grouping key: everything except the run index.
    pub fn config_key(&self) -> (&str, &str, &str, &str) {
        (&self.app, &self.variant, &self.dataset, &self.platform)
    }
}

/// H2D / KEX / D2H durations of one run of one configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageProfile {
    pub h2d: f64,
    pub kex: f64,
    pub d2h: f64,
    pub meta: RunMeta,
}

impl StageProfile {
    pub fn new(h2d: f64, kex: f64, d2h: f64) -> Self {
        Self { h2d, kex, d2h, meta: RunMeta::default() }
    }

    pub fn with_meta(mut self, meta: RunMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn total(&self) -> f64 {
        self.h2d + self.kex + self.d2h
    }

    /// Checks the non-negativity invariant.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("h2d", self.h2d), ("kex", self.kex), ("d2h", self.d2h)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidProfile(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Fractions of total stage time spent in transfers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioReport {
    pub r_h2d: f64,
    pub r_d2h: f64,
    pub r_transfer: f64,
}

/// The range of R for which streaming is considered worthwhile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionBand {
    pub low: f64,
    pub high: f64,
}

impl DecisionBand {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low >= high {
            return Err(Error::Domain(format!("band requires 0 <= low < high <= 1, got [{low}, {high}]")));
        }
        Ok(Self { low, high })
    }
}

impl Default for DecisionBand {
    fn default() -> Self {
        Self { low: 0.10, high: 0.90 }
    }
}

/// Kind of data dependency between tasks. The halo radius and the wavefront
/// block grid only exist for the kinds that need them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepKind {
    None,
    /// Read-after-read: tasks share read-only boundary elements.
    ReadOnly { halo_radius: usize },
    /// Read-after-write: tasks consume each other's outputs.
    ReadAfterWrite { blocks: (usize, usize) },
}

/// Dependency facts declared by the user about an application.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DependencyDescriptor {
    pub shared_input_by_all: bool,
    pub iterative_kernel: bool,
    pub iteration_count: u64,
    pub dep: DepKind,
    pub kernel_dominated: bool,
}

impl DependencyDescriptor {
    pub fn independent() -> Self {
        Self {
            shared_input_by_all: false,
            iterative_kernel: false,
            iteration_count: 0,
            dep: DepKind::None,
            kernel_dominated: false,
        }
    }

    pub fn read_only(halo_radius: usize) -> Self {
        Self { dep: DepKind::ReadOnly { halo_radius }, ..Self::independent() }
    }

    pub fn read_after_write(rows: usize, cols: usize) -> Self {
        Self { dep: DepKind::ReadAfterWrite { blocks: (rows, cols) }, ..Self::independent() }
    }

    pub fn sync() -> Self {
        Self { shared_input_by_all: true, ..Self::independent() }
    }

    pub fn iterative(iteration_count: u64) -> Self {
        Self { iterative_kernel: true, iteration_count, ..Self::independent() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Sync,
    Iterative,
    Independent,
    FalseDependent,
    TrueDependent,
    NotWorthKernelBound,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Sync,
        Category::Iterative,
        Category::Independent,
        Category::FalseDependent,
        Category::TrueDependent,
        Category::NotWorthKernelBound,
    ];

    pub fn is_streamable(self) -> bool {
        matches!(self, Category::Independent | Category::FalseDependent | Category::TrueDependent)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Sync => "SYNC",
            Category::Iterative => "Iterative",
            Category::Independent => "Independent",
            Category::FalseDependent => "FalseDependent",
            Category::TrueDependent => "TrueDependent",
            Category::NotWorthKernelBound => "NotWorthKernelBound",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown category `{s}`")))
    }
}

/// One pipeline task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub id: usize,
    /// Elements this task is responsible for producing.
    pub owned: Range<usize>,
    /// Elements this task uploads; a superset of `owned` when halos are replicated.
    pub transfer: Range<usize>,
    pub h2d_cost: f64,
    pub kex_cost: f64,
    pub d2h_cost: f64,
    /// Tasks whose kernel must complete before this task's kernel starts.
    pub deps: BTreeSet<usize>,
}

impl TaskSpec {
    pub fn new(id: usize, owned: Range<usize>) -> Self {
        Self {
            id,
            transfer: owned.clone(),
            owned,
            h2d_cost: 0.0,
            kex_cost: 0.0,
            d2h_cost: 0.0,
            deps: BTreeSet::new(),
        }
    }

    pub fn with_costs(mut self, h2d: f64, kex: f64, d2h: f64) -> Self {
        self.h2d_cost = h2d;
        self.kex_cost = kex;
        self.d2h_cost = d2h;
        self
    }

    pub fn with_deps(mut self, deps: impl IntoIterator<Item = usize>) -> Self {
        self.deps = deps.into_iter().collect();
        self
    }

    pub fn owned_len(&self) -> usize {
        self.owned.len()
    }

    pub fn transfer_len(&self) -> usize {
        self.transfer.len()
    }
}

/// A violated task-set invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    DuplicateId { id: usize },
    OwnedOutsideTransfer { task: usize },
    OutOfDomain { task: usize },
    Overlap { first: usize, second: usize, range: Range<usize> },
    Gap { range: Range<usize> },
    UnknownDependency { task: usize, dep: usize },
    NegativeCost { task: usize },
    Cycle { tasks: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "task set is empty"),
            Violation::DuplicateId { id } => write!(f, "duplicate task id {id}"),
            Violation::OwnedOutsideTransfer { task } => write!(f, "task {task}: owned range not inside transfer range"),
            Violation::OutOfDomain { task } => write!(f, "task {task}: range exceeds domain"),
            Violation::Overlap { first, second, range } => {
                write!(f, "tasks {first} and {second} overlap at [{}, {})", range.start, range.end)
            }
            Violation::Gap { range } => write!(f, "elements [{}, {}) are not owned by any task", range.start, range.end),
            Violation::UnknownDependency { task, dep } => write!(f, "task {task} depends on unknown task {dep}"),
            Violation::NegativeCost { task } => write!(f, "task {task}: negative or non-finite stage cost"),
            Violation::Cycle { tasks } => write!(f, "dependency cycle among tasks {tasks:?}"),
        }
    }
}

/// Returns every violated invariant of `tasks` over `[0, domain_len)`.
/// An empty vector means the set is valid.
pub fn validate_task_set(tasks: &[TaskSpec], domain_len: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    if tasks.is_empty() {
        out.push(Violation::Empty);
        return out;
    }

    let mut ids = BTreeSet::new();
    for t in tasks {
        if !ids.insert(t.id) {
            out.push(Violation::DuplicateId { id: t.id });
        }
        if t.owned.start < t.transfer.start || t.owned.end > t.transfer.end {
            out.push(Violation::OwnedOutsideTransfer { task: t.id });
        }
        if t.transfer.end > domain_len || t.owned.end > domain_len {
            out.push(Violation::OutOfDomain { task: t.id });
        }
        if [t.h2d_cost, t.kex_cost, t.d2h_cost].iter().any(|c| !c.is_finite() || *c < 0.0) {
            out.push(Violation::NegativeCost { task: t.id });
        }
    }

    // Coverage: walk owned ranges in start order.
    let mut by_start: Vec<&TaskSpec> = tasks.iter().filter(|t| !t.owned.is_empty()).collect();
    by_start.sort_by_key(|t| (t.owned.start, t.owned.end, t.id));
    let mut covered_to = 0usize;
    let mut last_owner: Option<&TaskSpec> = None;
    for t in by_start {
        if t.owned.start > covered_to {
            out.push(Violation::Gap { range: covered_to..t.owned.start });
        } else if t.owned.start < covered_to {
            let prev = last_owner.expect("covered_to > 0 implies a previous owner");
            out.push(Violation::Overlap {
                first: prev.id,
                second: t.id,
                range: t.owned.start..covered_to.min(t.owned.end),
            });
        }
        if t.owned.end >= covered_to {
            covered_to = t.owned.end;
            last_owner = Some(t);
        }
    }
    if covered_to < domain_len {
        out.push(Violation::Gap { range: covered_to..domain_len });
    }

    for t in tasks {
        for &d in &t.deps {
            if !ids.contains(&d) {
                out.push(Violation::UnknownDependency { task: t.id, dep: d });
            }
        }
    }
    if let Err(cyclic) = topological_order(tasks) {
        out.push(Violation::Cycle { tasks: cyclic });
    }
    out
}

/// Kahn's algorithm with the smallest ready id first. On a cycle, returns the
/// ids that could not be ordered. Dependencies on unknown ids are ignored.
pub fn topological_order(tasks: &[TaskSpec]) -> std::result::Result<Vec<usize>, Vec<usize>> {
    let index: BTreeMap<usize, usize> = tasks.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
    let mut indegree = vec![0usize; tasks.len()];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); tasks.len()];
    for (i, t) in tasks.iter().enumerate() {
        for d in &t.deps {
            if let Some(&j) = index.get(d) {
                indegree[i] += 1;
                dependents[j].push(i);
            }
        }
    }
    let mut ready: BTreeSet<(usize, usize)> =
        (0..tasks.len()).filter(|&i| indegree[i] == 0).map(|i| (tasks[i].id, i)).collect();
    let mut order = Vec::with_capacity(tasks.len());
    while let Some((id, i)) = ready.pop_first() {
        order.push(id);
        for &k in &dependents[i] {
            indegree[k] -= 1;
            if indegree[k] == 0 {
                ready.insert((tasks[k].id, k));
            }
        }
    }
    if order.len() == tasks.len() {
        Ok(order)
    } else {
        let done: BTreeSet<usize> = order.into_iter().collect();
        Err(tasks.iter().map(|t| t.id).filter(|id| !done.contains(id)).collect())
    }
}

fn default_bandwidth() -> f64 {
    6.0e9
}

fn default_true() -> bool {
    true
}

fn default_slots() -> usize {
    1
}

/// Copy-engine and compute-slot model of an accelerator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    /// Host to device bytes per second.
    #[serde(default = "default_bandwidth")]
    pub upload_bandwidth: f64,
    /// Device to host bytes per second.
    #[serde(default = "default_bandwidth")]
    pub download_bandwidth: f64,
    /// Independent upload and download engines.
    #[serde(default = "default_true")]
    pub duplex: bool,
    /// Kernels that may execute concurrently.
    #[serde(default = "default_slots")]
    pub compute_slots: usize,
    /// Lazy-allocation cost, charged once on the first upload of a run.
    #[serde(default)]
    pub alloc_latency: f64,
    /// Fixed cost added to every issued stage.
    #[serde(default)]
    pub issue_latency: f64,
}

impl Default for DeviceSpec {
    fn default() -> Self {
        Self {
            upload_bandwidth: default_bandwidth(),
            download_bandwidth: default_bandwidth(),
            duplex: true,
            compute_slots: 1,
            alloc_latency: 0.0,
            issue_latency: 0.0,
        }
    }
}

impl DeviceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.upload_bandwidth > 0.0 && self.download_bandwidth > 0.0) {
            return Err(Error::Domain("bandwidths must be > 0".into()));
        }
        if self.compute_slots == 0 {
            return Err(Error::Domain("compute_slots must be >= 1".into()));
        }
        if !(self.alloc_latency >= 0.0 && self.issue_latency >= 0.0) {
            return Err(Error::Domain("latencies must be >= 0".into()));
        }
        Ok(())
    }

    pub fn upload_seconds(&self, bytes: u64) -> f64 {
        bytes as f64 / self.upload_bandwidth
    }

    pub fn download_seconds(&self, bytes: u64) -> f64 {
        bytes as f64 / self.download_bandwidth
    }
}

/// How tasks are mapped onto streams.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Assignment {
    /// k-th task in dependency order goes to stream `k % n`.
    #[default]
    RoundRobin,
    /// Contiguous chunks of `ceil(tasks / n)` tasks per stream.
    Block,
    /// Explicit lane per task (indexed like the task slice); stream = `lane % n`.
    Lanes(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamConfig {
    pub n_streams: usize,
    pub assignment: Assignment,
}

impl StreamConfig {
    pub fn new(n_streams: usize) -> Self {
        Self { n_streams, assignment: Assignment::RoundRobin }
    }

    pub fn with_assignment(mut self, assignment: Assignment) -> Self {
        self.assignment = assignment;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    H2D,
    Kex,
    D2H,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::H2D => "H2D",
            Stage::Kex => "KEX",
            Stage::D2H => "D2H",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H2D" => Ok(Stage::H2D),
            "KEX" => Ok(Stage::Kex),
            "D2H" => Ok(Stage::D2H),
            _ => Err(Error::Domain(format!("unknown stage `{s}`"))),
        }
    }
}

/// A device resource that executes stages one at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Resource {
    Upload,
    Download,
    /// Single shared copy engine of a half-duplex device.
    Copy,
    Compute(usize),
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resource::Upload => f.write_str("upload"),
            Resource::Download => f.write_str("download"),
            Resource::Copy => f.write_str("copy"),
            Resource::Compute(i) => write!(f, "compute{i}"),
        }
    }
}

impl std::str::FromStr for Resource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upload" => Ok(Resource::Upload),
            "download" => Ok(Resource::Download),
            "copy" => Ok(Resource::Copy),
            _ => s
                .strip_prefix("compute")
                .and_then(|n| n.parse().ok())
                .map(Resource::Compute)
                .ok_or_else(|| Error::Domain(format!("unknown resource `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageInterval {
    pub task: usize,
    pub stream: usize,
    pub stage: Stage,
    pub start: f64,
    pub end: f64,
    pub resource: Resource,
}

/// A simulated schedule.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timeline {
    pub entries: Vec<StageInterval>,
    pub makespan: f64,
}

impl Timeline {
    pub fn from_entries(entries: Vec<StageInterval>) -> Self {
        let makespan = entries.iter().map(|e| e.end).fold(0.0, f64::max);
        Self { entries, makespan }
    }

    pub fn interval(&self, task: usize, stage: Stage) -> Option<&StageInterval> {
        self.entries.iter().find(|e| e.task == task && e.stage == stage)
    }

    /// Highest number of simultaneously running (non-empty) intervals of `stage`.
    pub fn peak_concurrency(&self, stage: Stage) -> usize {
        let mut events: Vec<(f64, i32)> = self
            .entries
            .iter()
            .filter(|e| e.stage == stage && e.end > e.start)
            .flat_map(|e| [(e.start, 1), (e.end, -1)])
            .collect();
        // Ends sort before starts at the same instant.
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut live = 0i32;
        let mut peak = 0i32;
        for (_, delta) in events {
            live += delta;
            peak = peak.max(live);
        }
        peak as usize
    }

    /// Pairs of intervals that overlap on the same resource.
    pub fn resource_conflicts(&self) -> Vec<(usize, usize)> {
        let mut by_res: BTreeMap<Resource, Vec<usize>> = BTreeMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            by_res.entry(e.resource).or_default().push(i);
        }
        let mut out = Vec::new();
        for idx in by_res.values_mut() {
            idx.sort_by(|&a, &b| self.entries[a].start.total_cmp(&self.entries[b].start));
            for w in idx.windows(2) {
                let (a, b) = (&self.entries[w[0]], &self.entries[w[1]]);
                if b.start < a.end - 1e-12 {
                    out.push((w[0], w[1]));
                }
            }
        }
        out
    }

    /// Tasks whose stages run out of H2D -> KEX -> D2H order.
    pub fn stage_order_faults(&self) -> Vec<usize> {
        let mut per_task: BTreeMap<usize, [Option<&StageInterval>; 3]> = BTreeMap::new();
        for e in &self.entries {
            let slot = match e.stage {
                Stage::H2D => 0,
                Stage::Kex => 1,
                Stage::D2H => 2,
            };
            per_task.entry(e.task).or_default()[slot] = Some(e);
        }
        per_task
            .into_iter()
            .filter(|(_, s)| match s {
                [Some(h), Some(k), Some(d)] => !(h.start <= h.end && h.end <= k.start && k.end <= d.start),
                _ => true,
            })
            .map(|(t, _)| t)
            .collect()
    }
}

/// Slice indices of `tasks` in dependency order (smallest ready id first).
pub(crate) fn dependency_ordered_indices(tasks: &[TaskSpec]) -> Result<Vec<usize>> {
    let order = topological_order(tasks).map_err(|c| Error::InvalidTaskSet(vec![Violation::Cycle { tasks: c }]))?;
    let index: BTreeMap<usize, usize> = tasks.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
    Ok(order.into_iter().map(|id| index[&id]).collect())
}
