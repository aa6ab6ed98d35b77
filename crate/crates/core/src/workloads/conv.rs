//! Zero-padded 1D stencil. Neighbouring tasks share read-only input, so each
//! task uploads its owned block plus a halo of `radius` elements per side.

use rand::Rng;

use super::exec::{Executor, Streamed};
use crate::error::{Error, Result};
use crate::partition::partition_halo;

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dWorkload {
    pub input: Vec<f64>,
    /// Odd length `2r + 1`, centred on the output element.
    pub weights: Vec<f64>,
}

impl Conv1dWorkload {
    pub fn random<R: Rng>(rng: &mut R, n: usize, radius: usize) -> Self {
        Self {
            input: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            weights: (0..2 * radius + 1).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    pub fn radius(&self) -> usize {
        self.weights.len() / 2
    }

    fn check(&self) -> Result<()> {
        if self.weights.len().is_multiple_of(2) {
            return Err(Error::Domain(format!("weights must have odd length, got {}", self.weights.len())));
        }
        Ok(())
    }
}

/// Output element `i` computed from `window`, which holds input elements
/// starting at global index `offset`. Out-of-domain taps contribute nothing.
fn output_at(weights: &[f64], window: &[f64], offset: usize, n: usize, i: usize) -> f64 {
    let r = weights.len() / 2;
    let lo = i.saturating_sub(r);
    let hi = (i + r).min(n - 1);
    let mut acc = 0.0;
    for x in lo..=hi {
        acc += weights[x + r - i] * window[x - offset];
    }
    acc
}

pub fn conv1d_serial(w: &Conv1dWorkload) -> Result<Vec<f64>> {
    w.check()?;
    let n = w.input.len();
    Ok((0..n).map(|i| output_at(&w.weights, &w.input, 0, n, i)).collect())
}

/// Each task copies its halo-extended input range, as an upload would, and
/// produces only its owned output range.
pub fn conv1d_streamed(w: &Conv1dWorkload, n_tasks: usize, exec: &Executor) -> Result<Streamed<Vec<f64>>> {
    w.check()?;
    let n = w.input.len();
    let halo = partition_halo(n, n_tasks, w.radius())?;
    let items = halo
        .tasks
        .iter()
        .map(|t| (t.id, t.owned.clone(), (t.owned.clone(), t.transfer.start, w.input[t.transfer.clone()].to_vec())))
        .collect();
    let (parts, trace) = exec.run_batch(0, items, |(owned, offset, device_copy): (std::ops::Range<usize>, usize, Vec<f64>)| {
        owned.map(|i| output_at(&w.weights, &device_copy, offset, n, i)).collect::<Vec<f64>>()
    });
    let mut output = vec![0.0; n];
    for (rec, part) in trace.iter().zip(parts) {
        output[rec.wrote.clone()].copy_from_slice(&part);
    }
    Ok(Streamed { output, trace })
}
