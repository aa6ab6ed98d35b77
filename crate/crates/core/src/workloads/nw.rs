//! Needleman-Wunsch score fill with linear gap penalties, serial and as a
//! blocked wavefront.
//!
//! The streamed version pads both sequences up to whole blocks, keeps the
//! inner score matrix in [`BlockedLayout`] order and fills one anti-diagonal
//! of blocks per batch. Because every diagonal occupies a contiguous span of
//! that layout, each block gets an exclusive `&mut` slice while earlier
//! diagonals are shared read-only. Padding lies to the bottom and right of
//! the real cells, so it never feeds them and is dropped from the output.

use rand::Rng;

use super::exec::{Executor, Streamed};
use crate::error::{Error, Result};
use crate::partition::{partition_wavefront, BlockedLayout, WavefrontSchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct NwWorkload {
    pub seq_a: Vec<u8>,
    pub seq_b: Vec<u8>,
    pub match_score: i32,
    pub mismatch_score: i32,
    /// Added per gap; normally negative.
    pub gap: i32,
}

impl NwWorkload {
    pub fn new(seq_a: &[u8], seq_b: &[u8]) -> Self {
        Self { seq_a: seq_a.to_vec(), seq_b: seq_b.to_vec(), match_score: 1, mismatch_score: -1, gap: -1 }
    }

    pub fn random_dna<R: Rng>(rng: &mut R, len_a: usize, len_b: usize) -> Self {
        const DNA: &[u8] = b"ACGT";
        let mut seq = |n| (0..n).map(|_| DNA[rng.gen_range(0..4)]).collect::<Vec<u8>>();
        let (a, b) = (seq(len_a), seq(len_b));
        Self { seq_a: a, seq_b: b, match_score: 2, mismatch_score: -1, gap: -2 }
    }

    fn score(&self, a: u8, b: u8) -> i32 {
        if a == b {
            self.match_score
        } else {
            self.mismatch_score
        }
    }
}

/// Row-major `(|a| + 1) x (|b| + 1)` score matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i32>,
}

impl ScoreMatrix {
    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.data[i * self.cols + j]
    }

    /// Global alignment score.
    pub fn final_score(&self) -> i32 {
        self.data[self.data.len() - 1]
    }

    /// First cell where two matrices differ.
    pub fn first_difference(&self, other: &ScoreMatrix) -> Option<(usize, usize)> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Some((self.rows.min(other.rows), self.cols.min(other.cols)));
        }
        self.data.iter().zip(&other.data).position(|(a, b)| a != b).map(|p| (p / self.cols, p % self.cols))
    }
}

pub fn nw_serial(w: &NwWorkload) -> ScoreMatrix {
    let rows = w.seq_a.len() + 1;
    let cols = w.seq_b.len() + 1;
    let mut data = vec![0i32; rows * cols];
    for j in 0..cols {
        data[j] = j as i32 * w.gap;
    }
    for i in 1..rows {
        data[i * cols] = i as i32 * w.gap;
        for j in 1..cols {
            let diag = data[(i - 1) * cols + j - 1] + w.score(w.seq_a[i - 1], w.seq_b[j - 1]);
            let up = data[(i - 1) * cols + j] + w.gap;
            let left = data[i * cols + j - 1] + w.gap;
            data[i * cols + j] = diag.max(up).max(left);
        }
    }
    ScoreMatrix { rows, cols, data }
}

/// Fills the padded tail of both sequences; padded cells are never read by real ones.
const PAD: u8 = 0;

struct BlockJob<'a> {
    row: usize,
    col: usize,
    cells: &'a mut [i32],
}

/// Fills `block` (grid position `row`, `col`) reading north/west boundaries
/// from `done`, the already completed prefix of the blocked matrix.
fn fill_block(w: &NwWorkload, a: &[u8], b: &[u8], layout: &BlockedLayout, done: &[i32], job: BlockJob<'_>) {
    let (h, bw) = layout.block;
    let (r0, c0) = (job.row * h, job.col * bw);
    // Inner coordinates; row/col -1 is the initialized border.
    let outside = |r: isize, c: isize| -> i32 {
        if r < 0 {
            (c + 1) as i32 * w.gap
        } else if c < 0 {
            (r + 1) as i32 * w.gap
        } else {
            done[layout.index(r as usize, c as usize)]
        }
    };
    for lr in 0..h {
        for lc in 0..bw {
            let (r, c) = (r0 + lr, c0 + lc);
            let (ri, ci) = (r as isize, c as isize);
            let north = if lr > 0 { job.cells[(lr - 1) * bw + lc] } else { outside(ri - 1, ci) };
            let west = if lc > 0 { job.cells[lr * bw + lc - 1] } else { outside(ri, ci - 1) };
            let nw = if lr > 0 && lc > 0 { job.cells[(lr - 1) * bw + lc - 1] } else { outside(ri - 1, ci - 1) };
            let v = (nw + w.score(a[r], b[c])).max(north + w.gap).max(west + w.gap);
            job.cells[lr * bw + lc] = v;
        }
    }
}

/// Block side length when splitting `len` into `parts` blocks.
fn block_len(len: usize, parts: usize) -> usize {
    len.div_ceil(parts).max(1)
}

/// Fills the matrix as a `grid.0 x grid.1` block wavefront. Blocks on one
/// anti-diagonal run concurrently on the executor's streams; diagonals are
/// separated by a barrier.
pub fn nw_streamed(w: &NwWorkload, grid: (usize, usize), exec: &Executor) -> Result<Streamed<ScoreMatrix>> {
    if grid.0 == 0 || grid.1 == 0 {
        return Err(Error::NonConformingBlock { matrix: (w.seq_a.len(), w.seq_b.len()), block: grid });
    }
    if w.seq_a.is_empty() || w.seq_b.is_empty() {
        return Ok(Streamed { output: nw_serial(w), trace: Vec::new() });
    }
    let block = (block_len(w.seq_a.len(), grid.0), block_len(w.seq_b.len(), grid.1));
    let schedule = partition_wavefront((block.0 * grid.0, block.1 * grid.1), block)?;
    let mut a = w.seq_a.clone();
    a.resize(schedule.layout.matrix.0, PAD);
    let mut b = w.seq_b.clone();
    b.resize(schedule.layout.matrix.1, PAD);

    let (blocked, trace) = fill_wavefront(w, &a, &b, &schedule, exec);
    let layout = &schedule.layout;
    let mut out = nw_border(w);
    for i in 1..out.rows {
        for j in 1..out.cols {
            out.data[i * out.cols + j] = blocked[layout.index(i - 1, j - 1)];
        }
    }
    Ok(Streamed { output: out, trace })
}

fn nw_border(w: &NwWorkload) -> ScoreMatrix {
    let rows = w.seq_a.len() + 1;
    let cols = w.seq_b.len() + 1;
    let mut data = vec![0i32; rows * cols];
    for j in 0..cols {
        data[j] = j as i32 * w.gap;
    }
    for i in 0..rows {
        data[i * cols] = i as i32 * w.gap;
    }
    ScoreMatrix { rows, cols, data }
}

fn fill_wavefront(
    w: &NwWorkload,
    a: &[u8],
    b: &[u8],
    schedule: &WavefrontSchedule,
    exec: &Executor,
) -> (Vec<i32>, Vec<super::exec::ExecRecord>) {
    let layout = &schedule.layout;
    let bl = layout.block_len();
    let mut cells = vec![0i32; layout.len()];
    let mut trace = Vec::with_capacity(schedule.tasks.len());
    for (d, ids) in schedule.diagonals.iter().enumerate() {
        let first = ids[0];
        let (done, rest) = cells.split_at_mut(first * bl);
        let done: &[i32] = done;
        let jobs: Vec<_> = rest[..ids.len() * bl]
            .chunks_mut(bl)
            .zip(ids)
            .map(|(slice, &id)| {
                let (row, col) = schedule.coords(id);
                (id, schedule.tasks[id].owned.clone(), BlockJob { row, col, cells: slice })
            })
            .collect();
        let (_, records) = exec.run_batch(d, jobs, |job| fill_block(w, a, b, layout, done, job));
        trace.extend(records);
    }
    (cells, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Memoized recursion over the recurrence, written independently of the
    /// row-sweep fill.
    fn recursive_oracle(w: &NwWorkload) -> Vec<Vec<i32>> {
        fn cell(w: &NwWorkload, memo: &mut Vec<Vec<Option<i32>>>, i: usize, j: usize) -> i32 {
            if let Some(v) = memo[i][j] {
                return v;
            }
            let v = match (i, j) {
                (0, j) => j as i32 * w.gap,
                (i, 0) => i as i32 * w.gap,
                _ => {
                    let s = if w.seq_a[i - 1] == w.seq_b[j - 1] { w.match_score } else { w.mismatch_score };
                    *[cell(w, memo, i - 1, j - 1) + s, cell(w, memo, i - 1, j) + w.gap, cell(w, memo, i, j - 1) + w.gap]
                        .iter()
                        .max()
                        .unwrap()
                }
            };
            memo[i][j] = Some(v);
            v
        }
        let (n, m) = (w.seq_a.len(), w.seq_b.len());
        let mut memo = vec![vec![None; m + 1]; n + 1];
        // Fill in anti-diagonal order to keep recursion depth small.
        for s in 0..=n + m {
            for i in s.saturating_sub(m)..=s.min(n) {
                cell(w, &mut memo, i, s - i);
            }
        }
        memo.into_iter().map(|r| r.into_iter().map(Option::unwrap).collect()).collect()
    }

    fn as_rows(m: &ScoreMatrix) -> Vec<Vec<i32>> {
        m.data.chunks(m.cols).map(<[i32]>::to_vec).collect()
    }

    #[test]
    fn empty_sequences() {
        let m = nw_serial(&NwWorkload::new(b"", b""));
        assert_eq!((m.rows, m.cols, m.data.clone()), (1, 1, vec![0]));
        assert_eq!(nw_streamed(&NwWorkload::new(b"", b"ACG"), (2, 2), &Executor::new(2)).unwrap().output.data, vec![0, -1, -2, -3]);
    }

    #[test]
    fn single_match() {
        let m = nw_serial(&NwWorkload::new(b"A", b"A"));
        assert_eq!(m.get(1, 1), 1);
        assert_eq!(m.data, vec![0, -1, -1, 1]);
    }

    #[test]
    fn serial_matches_recursive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let w = NwWorkload::random_dna(&mut rng, 64, 64);
        assert_eq!(as_rows(&nw_serial(&w)), recursive_oracle(&w));
        let w = NwWorkload::random_dna(&mut rng, 17, 40);
        assert_eq!(as_rows(&nw_serial(&w)), recursive_oracle(&w));
    }

    #[test]
    fn single_block_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = NwWorkload::random_dna(&mut rng, 30, 22);
        assert_eq!(nw_streamed(&w, (1, 1), &Executor::new(1)).unwrap().output, nw_serial(&w));
    }

    #[test]
    fn four_by_four_grid_matches_and_respects_diagonals() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = NwWorkload::random_dna(&mut rng, 64, 64);
        let s = nw_streamed(&w, (4, 4), &Executor::new(4)).unwrap();
        assert_eq!(s.output, nw_serial(&w));
        assert_eq!(s.peak_concurrency(), 4);

        let schedule = partition_wavefront((64, 64), (16, 16)).unwrap();
        let rec = |id: usize| s.trace.iter().find(|r| r.task == id).unwrap();
        for t in &schedule.tasks {
            for &dep in &t.deps {
                assert!(rec(dep).end <= rec(t.id).start, "block {} started before dep {dep}", t.id);
                assert!(rec(dep).batch < rec(t.id).batch);
            }
        }
        let widths: Vec<_> = (0..7).map(|d| s.trace.iter().filter(|r| r.batch == d).count()).collect();
        assert_eq!(widths, vec![1, 2, 3, 4, 3, 2, 1]);
    }

    #[test]
    fn ragged_sizes_are_padded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (la, lb, grid) in [(13, 29, (3, 5)), (5, 5, (4, 2)), (1, 9, (1, 3)), (7, 3, (7, 3))] {
            let w = NwWorkload::random_dna(&mut rng, la, lb);
            let s = nw_streamed(&w, grid, &Executor::new(3)).unwrap();
            assert_eq!(s.output.first_difference(&nw_serial(&w)), None, "{la}x{lb} in {grid:?}");
        }
        assert!(nw_streamed(&NwWorkload::new(b"A", b"A"), (0, 1), &Executor::new(1)).is_err());
    }

    #[test]
    fn random_64_instances_match() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let w = NwWorkload::random_dna(&mut rng, 64, 64);
            let grid = [(4, 4), (2, 8), (8, 8), (3, 5)][seed as usize % 4];
            assert_eq!(nw_streamed(&w, grid, &Executor::new(4)).unwrap().output, nw_serial(&w), "seed {seed}");
        }
    }
}
