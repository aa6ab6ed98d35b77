use std::ops::Range;
use std::time::{Duration, Instant};

/// What one task did on the worker pool.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecRecord {
    pub task: usize,
    pub stream: usize,
    /// Barrier-separated batch (a wavefront diagonal; 0 for independent runs).
    pub batch: usize,
    /// Output elements the task wrote.
    pub wrote: Range<usize>,
    /// Kernel start and end, relative to the executor's creation.
    pub start: Duration,
    pub end: Duration,
}

impl ExecRecord {
    pub fn kernel_time(&self) -> Duration {
        self.end - self.start
    }
}

/// Output of a streamed run together with its execution trace.
#[derive(Debug, Clone)]
pub struct Streamed<T> {
    pub output: T,
    pub trace: Vec<ExecRecord>,
}

impl<T> Streamed<T> {
    /// Largest number of distinct streams used within any batch.
    pub fn peak_concurrency(&self) -> usize {
        let mut per_batch: std::collections::BTreeMap<usize, std::collections::BTreeSet<usize>> = Default::default();
        for r in &self.trace {
            per_batch.entry(r.batch).or_default().insert(r.stream);
        }
        per_batch.values().map(|s| s.len()).max().unwrap_or(0)
    }
}

/// Pool of stream workers. Items of a batch are dealt round-robin onto
/// streams; each stream runs its items in FIFO order on its own thread, and
/// the call returns only when every stream has drained.
#[derive(Debug, Clone)]
pub struct Executor {
    n_streams: usize,
    epoch: Instant,
}

impl Executor {
    pub fn new(n_streams: usize) -> Self {
        Self { n_streams: n_streams.max(1), epoch: Instant::now() }
    }

    pub fn n_streams(&self) -> usize {
        self.n_streams
    }

    /// Runs `kernel(item)` for every `(task, wrote, item)` triple and returns
    /// outputs in input order along with one record per item.
    pub fn run_batch<I, T, F>(&self, batch: usize, items: Vec<(usize, Range<usize>, I)>, kernel: F) -> (Vec<T>, Vec<ExecRecord>)
    where
        I: Send,
        T: Send,
        F: Fn(I) -> T + Sync,
    {
        let n = self.n_streams.min(items.len()).max(1);
        let total = items.len();
        let mut lanes: Vec<Vec<(usize, usize, Range<usize>, I)>> = (0..n).map(|_| Vec::new()).collect();
        for (pos, (task, wrote, item)) in items.into_iter().enumerate() {
            lanes[pos % n].push((pos, task, wrote, item));
        }
        let kernel = &kernel;
        let epoch = self.epoch;
        let mut done: Vec<(usize, T, ExecRecord)> = std::thread::scope(|scope| {
            let handles: Vec<_> = lanes
                .into_iter()
                .enumerate()
                .map(|(stream, lane)| {
                    scope.spawn(move || {
                        lane.into_iter()
                            .map(|(pos, task, wrote, item)| {
                                let start = epoch.elapsed();
                                let out = kernel(item);
                                let end = epoch.elapsed();
                                (pos, out, ExecRecord { task, stream, batch, wrote, start, end })
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("stream worker panicked")).collect()
        });
        debug_assert_eq!(done.len(), total);
        done.sort_by_key(|(pos, ..)| *pos);
        let mut outputs = Vec::with_capacity(total);
        let mut records = Vec::with_capacity(total);
        for (_, out, rec) in done {
            outputs.push(out);
            records.push(rec);
        }
        (outputs, records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_robin_fifo_per_stream() {
        let ex = Executor::new(3);
        let items: Vec<_> = (0..7).map(|i| (i, i..i + 1, i * 10)).collect();
        let (out, recs) = ex.run_batch(0, items, |x| x + 1);
        assert_eq!(out, vec![1, 11, 21, 31, 41, 51, 61]);
        let streams: Vec<_> = recs.iter().map(|r| r.stream).collect();
        assert_eq!(streams, vec![0, 1, 2, 0, 1, 2, 0]);
        for s in 0..3 {
            let mine: Vec<_> = recs.iter().filter(|r| r.stream == s).collect();
            assert!(mine.windows(2).all(|w| w[0].end <= w[1].start));
        }
    }

    #[test]
    fn fewer_items_than_streams() {
        let ex = Executor::new(8);
        let (out, recs) = ex.run_batch(2, vec![(5, 0..1, ())], |()| 42);
        assert_eq!(out, vec![42]);
        assert_eq!(recs[0].batch, 2);
        assert_eq!(recs[0].task, 5);
        let (empty, none): (Vec<i32>, _) = ex.run_batch(0, Vec::<(usize, Range<usize>, ())>::new(), |()| 0);
        assert!(empty.is_empty() && none.is_empty());
    }
}
