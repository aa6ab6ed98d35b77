//! k-nearest neighbours of a target point: independent chunks, local top-k,
//! global merge.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use super::exec::{Executor, Streamed};
use crate::error::{Error, Result};
use crate::partition::partition_independent;

#[derive(Debug, Clone, PartialEq)]
pub struct NnWorkload {
    /// (latitude, longitude) records.
    pub records: Vec<(f64, f64)>,
    pub target: (f64, f64),
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance.total_cmp(&other.distance).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl NnWorkload {
    pub fn random<R: Rng>(rng: &mut R, n: usize, k: usize) -> Self {
        let records = (0..n).map(|_| (rng.gen_range(-90.0..90.0), rng.gen_range(-180.0..180.0))).collect();
        let target = (rng.gen_range(-90.0..90.0), rng.gen_range(-180.0..180.0));
        Self { records, target, k }
    }

    fn check(&self) -> Result<()> {
        if self.k > self.records.len() {
            return Err(Error::Domain(format!("k = {} exceeds {} records", self.k, self.records.len())));
        }
        Ok(())
    }

    pub fn distance(&self, index: usize) -> f64 {
        let (lat, lon) = self.records[index];
        let (dlat, dlon) = (lat - self.target.0, lon - self.target.1);
        (dlat * dlat + dlon * dlon).sqrt()
    }

    /// Bounded max-heap scan over `range`; result sorted by (distance, index).
    fn top_k(&self, range: std::ops::Range<usize>) -> Vec<Neighbor> {
        let mut heap = BinaryHeap::with_capacity(self.k + 1);
        for index in range {
            let n = Neighbor { index, distance: self.distance(index) };
            if heap.len() < self.k {
                heap.push(n);
            } else if heap.peek().is_some_and(|worst| n < *worst) {
                heap.pop();
                heap.push(n);
            }
        }
        heap.into_sorted_vec()
    }
}

pub fn nn_serial(w: &NnWorkload) -> Result<Vec<Neighbor>> {
    w.check()?;
    Ok(w.top_k(0..w.records.len()))
}

/// One task per contiguous chunk; each keeps its local top-k and the host
/// merges the candidates.
pub fn nn_streamed(w: &NnWorkload, n_tasks: usize, exec: &Executor) -> Result<Streamed<Vec<Neighbor>>> {
    w.check()?;
    let tasks = partition_independent(w.records.len(), n_tasks)?;
    let items = tasks.iter().map(|t| (t.id, t.owned.clone(), t.owned.clone())).collect();
    let (locals, trace) = exec.run_batch(0, items, |range| w.top_k(range));
    let mut merged: Vec<Neighbor> = locals.into_iter().flatten().collect();
    merged.sort();
    merged.truncate(w.k);
    Ok(Streamed { output: merged, trace })
}
