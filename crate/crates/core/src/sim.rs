//! Deterministic discrete-event simulation of single-stream and multi-stream
//! execution.
//!
//! Each stream issues its stages in FIFO order and a stage waits for the
//! previous stage of the same stream to finish. Uploads compete for the
//! upload engine, downloads for the download engine (one shared copy engine
//! on a half-duplex device), kernels for the compute slots. A kernel also
//! waits for the kernels of its dependency tasks. When several stages could
//! start at the same instant the tie is broken by `(ready time, stream, task)`.

use crate::error::{Error, Result};
use crate::model::{
    dependency_ordered_indices, validate_task_set, Assignment, DeviceSpec, Resource, Stage, StageInterval,
    StreamConfig, TaskSpec, Timeline,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub serial_makespan: f64,
    pub streamed_makespan: f64,
    /// `1 - streamed / serial`; negative when streaming hurts.
    pub improvement: f64,
    pub timeline: Timeline,
}

pub fn improvement(serial: f64, streamed: f64) -> Result<f64> {
    if !(serial > 0.0) {
        return Err(Error::Domain(format!("serial makespan must be > 0, got {serial}")));
    }
    Ok(1.0 - streamed / serial)
}

fn domain_of(tasks: &[TaskSpec]) -> usize {
    tasks.iter().map(|t| t.owned.end.max(t.transfer.end)).max().unwrap_or(0)
}

fn check_tasks(tasks: &[TaskSpec], device: &DeviceSpec) -> Result<()> {
    device.validate()?;
    let violations = validate_task_set(tasks, domain_of(tasks));
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidTaskSet(violations))
    }
}

fn stage_cost(t: &TaskSpec, stage: Stage) -> f64 {
    match stage {
        Stage::H2D => t.h2d_cost,
        Stage::Kex => t.kex_cost,
        Stage::D2H => t.d2h_cost,
    }
}

const STAGES: [Stage; 3] = [Stage::H2D, Stage::Kex, Stage::D2H];

/// Strictly stage-by-stage execution in dependency order.
pub fn simulate_serial(tasks: &[TaskSpec], device: &DeviceSpec) -> Result<Timeline> {
    check_tasks(tasks, device)?;
    let mut clock = 0.0;
    let mut alloc_pending = true;
    let mut entries = Vec::with_capacity(tasks.len() * 3);
    for i in dependency_ordered_indices(tasks)? {
        let t = &tasks[i];
        for stage in STAGES {
            let mut dur = stage_cost(t, stage) + device.issue_latency;
            if stage == Stage::H2D && alloc_pending {
                dur += device.alloc_latency;
                alloc_pending = false;
            }
            let resource = match stage {
                Stage::H2D if device.duplex => Resource::Upload,
                Stage::D2H if device.duplex => Resource::Download,
                Stage::Kex => Resource::Compute(0),
                _ => Resource::Copy,
            };
            entries.push(StageInterval { task: t.id, stream: 0, stage, start: clock, end: clock + dur, resource });
            clock += dur;
        }
    }
    Ok(Timeline::from_entries(entries))
}

/// Free-at times for each unit of one resource class.
struct Pool {
    free_at: Vec<f64>,
    /// Copy engines are single named units; compute slots are numbered.
    fixed: Option<Resource>,
}

impl Pool {
    fn engine(r: Resource) -> Self {
        Self { free_at: vec![0.0], fixed: Some(r) }
    }

    fn compute(slots: usize) -> Self {
        Self { free_at: vec![0.0; slots], fixed: None }
    }

    fn resource(&self, unit: usize) -> Resource {
        self.fixed.unwrap_or(Resource::Compute(unit))
    }

    /// Earliest-free unit, lowest index on ties.
    fn earliest(&self) -> (usize, f64) {
        self.free_at
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, t)| if t < best.1 { (i, t) } else { best })
    }
}

fn stream_of_each(order: &[usize], cfg: &StreamConfig) -> Result<Vec<usize>> {
    let n = cfg.n_streams;
    if n == 0 {
        return Err(Error::Domain("n_streams must be >= 1".into()));
    }
    let mut stream = vec![0; order.len()];
    let chunk = order.len().div_ceil(n).max(1);
    for (k, &i) in order.iter().enumerate() {
        stream[i] = match &cfg.assignment {
            Assignment::RoundRobin => k % n,
            Assignment::Block => k / chunk,
            Assignment::Lanes(lanes) => {
                let lane = lanes
                    .get(i)
                    .ok_or_else(|| Error::Domain(format!("no lane given for task index {i}")))?;
                lane % n
            }
        };
    }
    Ok(stream)
}

pub fn simulate_streams(tasks: &[TaskSpec], device: &DeviceSpec, cfg: &StreamConfig) -> Result<Timeline> {
    check_tasks(tasks, device)?;
    let order = dependency_ordered_indices(tasks)?;
    let stream_of = stream_of_each(&order, cfg)?;

    // Per-stream FIFO of (task index, stage), in dependency order.
    let mut queues: Vec<Vec<(usize, Stage)>> = vec![Vec::new(); cfg.n_streams];
    for &i in &order {
        queues[stream_of[i]].extend(STAGES.iter().map(|&s| (i, s)));
    }
    let index_of: std::collections::HashMap<usize, usize> =
        tasks.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
    let deps: Vec<Vec<usize>> = tasks.iter().map(|t| t.deps.iter().map(|d| index_of[d]).collect()).collect();

    // Pools: uploads, downloads, kernels. A half-duplex device routes both
    // copy directions to pool 0.
    let mut pools = if device.duplex {
        vec![Pool::engine(Resource::Upload), Pool::engine(Resource::Download), Pool::compute(device.compute_slots)]
    } else {
        vec![Pool::engine(Resource::Copy), Pool::engine(Resource::Copy), Pool::compute(device.compute_slots)]
    };
    let pool_of = |stage: Stage| match stage {
        Stage::H2D => 0,
        Stage::D2H if device.duplex => 1,
        Stage::D2H => 0,
        Stage::Kex => 2,
    };

    let mut head = vec![0usize; cfg.n_streams];
    let mut stream_free = vec![0.0f64; cfg.n_streams];
    let mut kex_end: Vec<Option<f64>> = vec![None; tasks.len()];
    let mut alloc_pending = true;
    let total: usize = queues.iter().map(Vec::len).sum();
    let mut entries = Vec::with_capacity(total);

    while entries.len() < total {
        // (start, ready, stream, task index, stage, unit)
        let mut best: Option<(f64, f64, usize, usize, Stage, usize)> = None;
        for s in 0..cfg.n_streams {
            let Some(&(i, stage)) = queues[s].get(head[s]) else { continue };
            let mut ready = stream_free[s];
            if stage == Stage::Kex {
                let mut blocked = false;
                for &d in &deps[i] {
                    match kex_end[d] {
                        Some(e) => ready = ready.max(e),
                        None => blocked = true,
                    }
                }
                if blocked {
                    continue;
                }
            }
            let (unit, free) = pools[pool_of(stage)].earliest();
            let start = ready.max(free);
            // Streams are scanned in id order and offer one stage each, so a
            // strict comparison on (start, ready) leaves the lowest stream on ties.
            let better = match best {
                None => true,
                Some((bs, br, ..)) => start < bs || (start == bs && ready < br),
            };
            if better {
                best = Some((start, ready, s, i, stage, unit));
            }
        }
        let Some((start, _, s, i, stage, unit)) = best else {
            return Err(Error::Domain("stream schedule deadlocked".into()));
        };

        let mut dur = stage_cost(&tasks[i], stage) + device.issue_latency;
        if stage == Stage::H2D && alloc_pending {
            dur += device.alloc_latency;
            alloc_pending = false;
        }
        let end = start + dur;
        let pool = &mut pools[pool_of(stage)];
        pool.free_at[unit] = end;
        let resource = pool.resource(unit);
        if stage == Stage::Kex {
            kex_end[i] = Some(end);
        }
        stream_free[s] = end;
        head[s] += 1;
        entries.push(StageInterval { task: tasks[i].id, stream: s, stage, start, end, resource });
    }
    Ok(Timeline::from_entries(entries))
}

/// Resource-capacity and critical-path lower bound on any streamed makespan.
pub fn lower_bound(tasks: &[TaskSpec], device: &DeviceSpec) -> f64 {
    let issue = device.issue_latency;
    let n = tasks.len() as f64;
    let up: f64 = tasks.iter().map(|t| t.h2d_cost).sum::<f64>() + n * issue + device.alloc_latency;
    let down: f64 = tasks.iter().map(|t| t.d2h_cost).sum::<f64>() + n * issue;
    let kex: f64 = (tasks.iter().map(|t| t.kex_cost).sum::<f64>() + n * issue) / device.compute_slots as f64;
    let copy = if device.duplex { up.max(down) } else { up + down };

    // Longest chain: upload, then kernel after all dependency kernels, then download.
    let mut chain = 0.0f64;
    if let Ok(order) = dependency_ordered_indices(tasks) {
        let index_of: std::collections::HashMap<usize, usize> =
            tasks.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
        let mut kex_done = vec![0.0f64; tasks.len()];
        for i in order {
            let t = &tasks[i];
            let after_deps = t.deps.iter().filter_map(|d| index_of.get(d)).map(|&j| kex_done[j]).fold(0.0, f64::max);
            kex_done[i] = (t.h2d_cost + issue).max(after_deps) + t.kex_cost + issue;
            chain = chain.max(kex_done[i] + t.d2h_cost + issue);
        }
    }
    copy.max(kex).max(chain)
}

/// Streams `tasks` and compares against a single stream over `baseline`
/// (the same work without halo replication).
pub fn simulate(tasks: &[TaskSpec], baseline: &[TaskSpec], device: &DeviceSpec, cfg: &StreamConfig) -> Result<SimResult> {
    let serial = simulate_serial(baseline, device)?.makespan;
    let timeline = simulate_streams(tasks, device, cfg)?;
    let streamed = timeline.makespan;
    Ok(SimResult { serial_makespan: serial, streamed_makespan: streamed, improvement: improvement(serial, streamed)?, timeline })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub points: Vec<(usize, f64)>,
    /// Fewest streams achieving the minimum makespan.
    pub best: (usize, f64),
}

pub fn sweep_streams(tasks: &[TaskSpec], device: &DeviceSpec, assignment: &Assignment, max_streams: usize) -> Result<Sweep> {
    if max_streams == 0 {
        return Err(Error::Domain("max_streams must be >= 1".into()));
    }
    let mut points = Vec::with_capacity(max_streams);
    for n in 1..=max_streams {
        let cfg = StreamConfig { n_streams: n, assignment: assignment.clone() };
        points.push((n, simulate_streams(tasks, device, &cfg)?.makespan));
    }
    let best = points.iter().copied().fold(points[0], |b, p| if p.1 < b.1 { p } else { b });
    Ok(Sweep { points, best })
}
