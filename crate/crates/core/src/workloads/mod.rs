//! Reference kernels, one per streamable category, each with a serial
//! oracle and a streamed decomposition running on a worker pool.
//!
//! Kernel time is measured on the host. Transfers are modeled from byte
//! counts and the emulated device's bandwidths.

mod conv;
mod exec;
mod nn;
mod nw;

pub use conv::{conv1d_serial, conv1d_streamed, Conv1dWorkload};
pub use exec::{ExecRecord, Executor, Streamed};
pub use nn::{nn_serial, nn_streamed, Neighbor, NnWorkload};
pub use nw::{nw_serial, nw_streamed, NwWorkload, ScoreMatrix};

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{DeviceSpec, RunMeta, StageProfile};
use crate::partition::partition_halo;

const F64: u64 = 8;
const POINT: u64 = 16;
const NEIGHBOR: u64 = 16;
const SCORE: u64 = 4;

/// A workload together with its streamed decomposition.
#[derive(Debug, Clone, PartialEq)]
pub enum Workload {
    Nn { w: NnWorkload, n_tasks: usize },
    Conv1d { w: Conv1dWorkload, n_tasks: usize },
    Nw { w: NwWorkload, grid: (usize, usize) },
}

/// Serial and streamed outputs compared.
#[derive(Debug, Clone, PartialEq)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Human-readable description of the first mismatch.
    pub detail: Option<String>,
}

impl Workload {
    pub fn name(&self) -> &'static str {
        match self {
            Workload::Nn { .. } => "nn",
            Workload::Conv1d { .. } => "conv1d",
            Workload::Nw { .. } => "nw",
        }
    }

    pub fn dataset(&self) -> String {
        match self {
            Workload::Nn { w, n_tasks } => format!("n{}-k{}-t{n_tasks}", w.records.len(), w.k),
            Workload::Conv1d { w, n_tasks } => format!("n{}-r{}-t{n_tasks}", w.input.len(), w.radius()),
            Workload::Nw { w, grid } => format!("{}x{}-g{}x{}", w.seq_a.len(), w.seq_b.len(), grid.0, grid.1),
        }
    }

    /// Runs both variants and compares them: exactly for nn and nw, within
    /// 1e-12 per element for conv1d.
    pub fn check_equivalence(&self, exec: &Executor) -> Result<Equivalence> {
        let mismatch = |detail: String| Equivalence { equivalent: false, detail: Some(detail) };
        let ok = Equivalence { equivalent: true, detail: None };
        Ok(match self {
            Workload::Nn { w, n_tasks } => {
                let serial = nn_serial(w)?;
                let streamed = nn_streamed(w, *n_tasks, exec)?.output;
                match serial.iter().zip(&streamed).position(|(a, b)| a != b) {
                    _ if serial.len() != streamed.len() => {
                        mismatch(format!("{} neighbours vs {}", serial.len(), streamed.len()))
                    }
                    Some(i) => mismatch(format!("rank {i}: serial {:?}, streamed {:?}", serial[i], streamed[i])),
                    None => ok,
                }
            }
            Workload::Conv1d { w, n_tasks } => {
                let serial = conv1d_serial(w)?;
                let streamed = conv1d_streamed(w, *n_tasks, exec)?.output;
                match serial.iter().zip(&streamed).position(|(a, b)| (a - b).abs() > 1e-12) {
                    Some(i) => mismatch(format!("element {i}: serial {}, streamed {}", serial[i], streamed[i])),
                    None => ok,
                }
            }
            Workload::Nw { w, grid } => {
                let serial = nw_serial(w);
                let streamed = nw_streamed(w, *grid, exec)?.output;
                match serial.first_difference(&streamed) {
                    Some((i, j)) => mismatch(format!(
                        "cell ({i}, {j}): serial {}, streamed {}",
                        serial.get(i, j),
                        streamed.get(i, j)
                    )),
                    None => ok,
                }
            }
        })
    }

    /// Bytes uploaded and downloaded by each streamed task.
    fn task_bytes(&self) -> Result<Vec<(u64, u64)>> {
        Ok(match self {
            Workload::Nn { w, n_tasks } => crate::partition::partition_independent(w.records.len(), *n_tasks)?
                .iter()
                .map(|t| (t.transfer_len() as u64 * POINT, t.owned_len().min(w.k) as u64 * NEIGHBOR))
                .collect(),
            Workload::Conv1d { w, n_tasks } => partition_halo(w.input.len(), *n_tasks, w.radius())?
                .tasks
                .iter()
                .map(|t| (t.transfer_len() as u64 * F64, t.owned_len() as u64 * F64))
                .collect(),
            Workload::Nw { w, grid } => {
                let (a, b) = (w.seq_a.len(), w.seq_b.len());
                if a == 0 || b == 0 {
                    return Ok(Vec::new());
                }
                let block = (a.div_ceil(grid.0) * b.div_ceil(grid.1)) as u64 * SCORE;
                vec![(block, block); grid.0 * grid.1]
            }
        })
    }

    fn serial_bytes(&self) -> (u64, u64) {
        match self {
            Workload::Nn { w, .. } => (w.records.len() as u64 * POINT, w.k as u64 * NEIGHBOR),
            Workload::Conv1d { w, .. } => (w.input.len() as u64 * F64, w.input.len() as u64 * F64),
            Workload::Nw { w, .. } => {
                let cells = (w.seq_a.len() * w.seq_b.len()) as u64 * SCORE;
                (cells, cells)
            }
        }
    }

    fn meta(&self, variant: &str, dataset: String, run: u32) -> RunMeta {
        RunMeta::new(self.name(), variant, &dataset, "emulated").with_run(run)
    }
}

/// Stage-by-stage profile of every streamed task: modeled H2D (plus the
/// allocation latency on the first task), measured KEX, modeled D2H.
pub fn measure_stages(workload: &Workload, device: &DeviceSpec, run: u32) -> Result<Vec<StageProfile>> {
    device.validate()?;
    let exec = Executor::new(1);
    let trace = match workload {
        Workload::Nn { w, n_tasks } => nn_streamed(w, *n_tasks, &exec)?.trace,
        Workload::Conv1d { w, n_tasks } => conv1d_streamed(w, *n_tasks, &exec)?.trace,
        Workload::Nw { w, grid } => nw_streamed(w, *grid, &exec)?.trace,
    };
    let bytes = workload.task_bytes()?;
    if bytes.len() != trace.len() {
        return Err(Error::Domain(format!("{} task byte counts for {} kernels", bytes.len(), trace.len())));
    }
    let mut by_task: Vec<_> = trace.iter().collect();
    by_task.sort_by_key(|r| r.task);
    Ok(by_task
        .into_iter()
        .zip(bytes)
        .enumerate()
        .map(|(pos, (rec, (up, down)))| {
            let alloc = if pos == 0 { device.alloc_latency } else { 0.0 };
            StageProfile {
                h2d: device.upload_seconds(up) + alloc,
                kex: rec.kernel_time().as_secs_f64(),
                d2h: device.download_seconds(down),
                meta: workload.meta("streamed", format!("{}/task{}", workload.dataset(), rec.task), run),
            }
        })
        .collect())
}

/// Stage profile of the unpartitioned serial kernel.
pub fn measure_serial(workload: &Workload, device: &DeviceSpec, run: u32) -> Result<StageProfile> {
    device.validate()?;
    let start = Instant::now();
    match workload {
        Workload::Nn { w, .. } => drop(nn_serial(w)?),
        Workload::Conv1d { w, .. } => drop(conv1d_serial(w)?),
        Workload::Nw { w, .. } => drop(nw_serial(w)),
    }
    let kex = start.elapsed().as_secs_f64();
    let (up, down) = workload.serial_bytes();
    Ok(StageProfile {
        h2d: device.upload_seconds(up) + device.alloc_latency,
        kex,
        d2h: device.download_seconds(down),
        meta: workload.meta("serial", workload.dataset(), run),
    })
}
