//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamwise_core::report::{analyze, read_trace};
use streamwise_core::workloads::{
    conv1d_serial, conv1d_streamed, nn_serial, nn_streamed, nw_serial, nw_streamed, Conv1dWorkload, Executor,
    NnWorkload, NwWorkload,
};
use streamwise_core::{
    compute_ratio, decide_streamworthy, lower_bound, partition_halo, partition_independent, partition_wavefront,
    simulate, simulate_serial, simulate_streams, sweep_streams, Assignment, CostModel, DecisionBand, DeviceSpec,
    Stage, StageProfile, StreamConfig, TaskSpec, Timeline, VerdictKind,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:?}, limit {limit:?}"))
}

fn uniform(n: usize, h: f64, k: f64, d: f64) -> Vec<TaskSpec> {
    partition_independent(n, n).unwrap().into_iter().map(|t| t.with_costs(h, k, d)).collect()
}

fn c1_closed_form() -> Outcome {
    let start = Instant::now();
    let tasks = uniform(4, 1.0, 1.0, 0.0);
    let dev = DeviceSpec::default();
    for n in [2, 3, 4, 8] {
        let r = simulate(&tasks, &tasks, &dev, &StreamConfig::new(n)).map_err(|e| e.to_string())?;
        ensure(r.streamed_makespan == 5.0, format!("{n} streams: makespan {}", r.streamed_makespan))?;
        ensure(r.serial_makespan == 8.0, format!("serial {}", r.serial_makespan))?;
        ensure(r.improvement == 0.375, format!("improvement {}", r.improvement))?;
    }
    within(Duration::from_secs(1), start)?;
    Ok("makespan 5.0, serial 8.0, improvement 0.375 for 2..8 streams".into())
}

const LAVA: (f64, f64, f64) = (0.3476, 0.3380, 0.0);

/// The single-stream profile spread over 4 tasks with uploads inflated per task.
fn lavamd_tasks(inflation: f64) -> (Vec<TaskSpec>, Vec<TaskSpec>) {
    let cost = CostModel::from_profile(&StageProfile::new(LAVA.0, LAVA.1, LAVA.2), 1000).with_h2d_inflation(inflation);
    let mut tasks = partition_independent(1000, 4).unwrap();
    cost.apply(&mut tasks);
    let baseline = cost.baseline(&tasks);
    (tasks, baseline)
}

fn c2_lavamd() -> Outcome {
    let start = Instant::now();
    let (tasks, baseline) = lavamd_tasks(472.0 / 250.0);
    let r = simulate(&tasks, &baseline, &DeviceSpec::default(), &StreamConfig::new(4)).map_err(|e| e.to_string())?;
    ensure((r.serial_makespan - 0.6856).abs() < 1e-9, format!("serial {}", r.serial_makespan))?;
    ensure(r.streamed_makespan >= 0.6856, format!("makespan {} below 0.6856", r.streamed_makespan))?;
    let rel = (r.streamed_makespan - 0.7242).abs() / 0.7242;
    ensure(rel <= 0.15, format!("makespan {} is {:.1}% from 0.7242", r.streamed_makespan, rel * 100.0))?;
    ensure(r.improvement < 0.0, format!("improvement {} not negative", r.improvement))?;
    within(Duration::from_secs(1), start)?;
    Ok(format!(
        "makespan {:.4} s ({:+.1}% vs 0.7242), improvement {:.4}",
        r.streamed_makespan,
        (r.streamed_makespan / 0.7242 - 1.0) * 100.0,
        r.improvement
    ))
}

fn c3_ratio() -> Outcome {
    let r = compute_ratio(&StageProfile::new(LAVA.0, LAVA.1, LAVA.2)).map_err(|e| e.to_string())?;
    ensure((r.r_h2d - 0.5070).abs() <= 1e-4, format!("R = {}", r.r_h2d))?;
    let band = DecisionBand::default();
    let kinds = [r.r_h2d, 0.05, 0.95].map(|x| decide_streamworthy(x, band).kind);
    ensure(
        kinds == [VerdictKind::Worth, VerdictKind::NotWorthLowR, VerdictKind::NotWorthHighR],
        format!("verdicts {kinds:?}"),
    )?;
    Ok(format!("R = {:.4}; verdicts {} / {} / {}", r.r_h2d, kinds[0], kinds[1], kinds[2]))
}

fn c4_cdf_fixture() -> Outcome {
    let start = Instant::now();
    let rows = read_trace(include_str!("../fixtures/cdf_223.csv")).map_err(|e| e.to_string())?;
    let a = analyze(&rows, DecisionBand::default()).map_err(|e| e.to_string())?;
    ensure(a.configs.len() == 223, format!("{} configurations", a.configs.len()))?;
    let below = a.configs.iter().filter(|c| c.ratio.r_h2d < 0.1).count();
    ensure(below == 112, format!("{below} configurations below 0.1"))?;
    let reported: f64 = a
        .report()
        .section("analysis")
        .and_then(|s| s.get("cdf_h2d_at_band_low"))
        .ok_or("report lacks cdf_h2d_at_band_low")?
        .parse()
        .map_err(|_| "unparsable CDF value")?;
    ensure(reported >= 0.50, format!("CDF(0.1) = {reported}"))?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("CDF(0.1) = {reported:.6} over {} configurations", a.configs.len()))
}

fn c5_wavefront() -> Outcome {
    let w = partition_wavefront((64, 64), (16, 16)).map_err(|e| e.to_string())?;
    ensure(w.widths() == [1, 2, 3, 4, 3, 2, 1], format!("widths {:?}", w.widths()))?;
    let mut tasks = w.tasks.clone();
    for t in &mut tasks {
        t.h2d_cost = 0.01;
        t.kex_cost = 1.0;
        t.d2h_cost = 0.01;
    }
    let dev = DeviceSpec { compute_slots: 8, ..DeviceSpec::default() };
    let assignment = Assignment::Lanes(w.lanes());
    let sweep = sweep_streams(&tasks, &dev, &assignment, 8).map_err(|e| e.to_string())?;
    let at4 = sweep.points[3].1;
    for &(n, m) in &sweep.points[4..] {
        ensure(m >= at4 - 1e-12, format!("{n} streams: {m} beats 4 streams: {at4}"))?;
    }
    let mut peak = 0;
    for n in 1..=8 {
        let t = simulate_streams(&tasks, &dev, &w.stream_config(n)).map_err(|e| e.to_string())?;
        peak = peak.max(t.peak_concurrency(Stage::Kex));
    }
    ensure(peak == 4, format!("peak kernel concurrency {peak}"))?;
    Ok(format!("7 diagonals [1,2,3,4,3,2,1], peak concurrency {peak}, best {} streams", sweep.best.0))
}

fn c6_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let exec = Executor::new(4);
    for case in 0..100 {
        let n = rng.gen_range(1..400);
        let k = rng.gen_range(1..=n.min(16));
        let w = NnWorkload::random(&mut rng, n, k);
        let tasks = rng.gen_range(1..=n.min(8));
        let got = nn_streamed(&w, tasks, &exec).map_err(|e| e.to_string())?.output;
        ensure(got == nn_serial(&w).map_err(|e| e.to_string())?, format!("nn case {case} differs"))?;
    }
    let grids = [(1, 1), (2, 2), (4, 4), (3, 5), (8, 8)];
    for seed in 0..100u64 {
        let mut r = ChaCha8Rng::seed_from_u64(1000 + seed);
        let w = NwWorkload::random_dna(&mut r, 64, 64);
        let grid = grids[seed as usize % grids.len()];
        let got = nw_streamed(&w, grid, &exec).map_err(|e| e.to_string())?.output;
        ensure(nw_serial(&w).first_difference(&got).is_none(), format!("nw seed {seed} grid {grid:?} differs"))?;
    }
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let radius = rng.gen_range(0..8);
        let n = rng.gen_range(radius + 1..2000);
        let w = Conv1dWorkload::random(&mut rng, n, radius);
        let tasks = rng.gen_range(1..=n.min(16));
        let got = conv1d_streamed(&w, tasks, &exec).map_err(|e| e.to_string())?.output;
        let want = conv1d_serial(&w).map_err(|e| e.to_string())?;
        worst = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    ensure(worst <= 1e-12, format!("conv1d max abs error {worst}"))?;
    within(Duration::from_secs(30), start)?;
    Ok(format!("nn 100 exact, nw 100 exact at 64x64, conv1d max error {worst:e} ({:?})", start.elapsed()))
}

fn random_tasks(rng: &mut ChaCha8Rng) -> (Vec<TaskSpec>, bool) {
    let kind = rng.gen_range(0..3);
    let n_tasks = rng.gen_range(1..10);
    let mut tasks = match kind {
        0 => partition_independent(100, n_tasks).unwrap(),
        1 => partition_halo(100, n_tasks, rng.gen_range(1..20)).unwrap().tasks,
        _ => {
            let (gr, gc) = (rng.gen_range(1..5), rng.gen_range(1..5));
            partition_wavefront((gr * 4, gc * 4), (4, 4)).unwrap().tasks
        }
    };
    for t in &mut tasks {
        t.h2d_cost = rng.gen_range(0.0..2.0);
        t.kex_cost = rng.gen_range(0.0..2.0);
        t.d2h_cost = rng.gen_range(0.0..2.0);
    }
    (tasks, kind == 0)
}

fn bits(t: &Timeline) -> Vec<(usize, usize, Stage, u64, u64)> {
    t.entries.iter().map(|e| (e.task, e.stream, e.stage, e.start.to_bits(), e.end.to_bits())).collect()
}

/// Permutation flow-shop optimum over (upload, compute, download). For three
/// machines some permutation schedule is optimal, so no schedule beats it.
fn flow_shop_optimum(tasks: &[TaskSpec]) -> f64 {
    fn permute(rest: &mut Vec<usize>, chosen: &mut Vec<usize>, tasks: &[TaskSpec], best: &mut f64) {
        if rest.is_empty() {
            let mut done = [0.0f64; 3];
            for &i in chosen.iter() {
                let t = &tasks[i];
                done[0] += t.h2d_cost;
                done[1] = done[1].max(done[0]) + t.kex_cost;
                done[2] = done[2].max(done[1]) + t.d2h_cost;
            }
            *best = best.min(done[2]);
            return;
        }
        for k in 0..rest.len() {
            let i = rest.remove(k);
            chosen.push(i);
            permute(rest, chosen, tasks, best);
            chosen.pop();
            rest.insert(k, i);
        }
    }
    let mut best = f64::INFINITY;
    permute(&mut (0..tasks.len()).collect(), &mut Vec::new(), tasks, &mut best);
    best
}

fn c7_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..500 {
        let (tasks, independent) = random_tasks(&mut rng);
        let dev = DeviceSpec {
            duplex: rng.gen_bool(0.7),
            compute_slots: rng.gen_range(1..4),
            alloc_latency: if rng.gen_bool(0.3) { rng.gen_range(0.0..0.5) } else { 0.0 },
            issue_latency: if rng.gen_bool(0.3) { rng.gen_range(0.0..0.05) } else { 0.0 },
            ..DeviceSpec::default()
        };
        let n = rng.gen_range(1..7);
        let cfg = StreamConfig::new(n).with_assignment(if rng.gen_bool(0.5) { Assignment::RoundRobin } else { Assignment::Block });
        let t = simulate_streams(&tasks, &dev, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        let lb = lower_bound(&tasks, &dev);
        ensure(t.makespan >= lb - 1e-9, format!("case {case}: makespan {} below bound {lb}", t.makespan))?;
        ensure(t.resource_conflicts().is_empty(), format!("case {case}: overlapping resource intervals"))?;
        ensure(t.stage_order_faults().is_empty(), format!("case {case}: stage order violated"))?;
        for task in &tasks {
            let kex = t.interval(task.id, Stage::Kex).ok_or("missing kernel interval")?;
            for d in &task.deps {
                let dep = t.interval(*d, Stage::Kex).ok_or("missing dependency interval")?;
                ensure(kex.start >= dep.end, format!("case {case}: task {} starts before dep {d}", task.id))?;
            }
        }
        if independent {
            let serial = simulate_serial(&tasks, &dev).map_err(|e| e.to_string())?.makespan;
            ensure(t.makespan <= serial + 1e-9, format!("case {case}: streamed {} > serial {serial}", t.makespan))?;
        }
        let again = simulate_streams(&tasks, &dev, &cfg).map_err(|e| e.to_string())?;
        ensure(bits(&t) == bits(&again) && t.makespan.to_bits() == again.makespan.to_bits(), format!("case {case}: replay differs"))?;
    }

    // Small independent sets against the flow-shop optimum: every set of up
    // to three tasks with stage costs in {0, 1, 2}, plus sampled 4-task sets.
    let dev = DeviceSpec::default();
    let decode = |mut code: usize, n: usize| -> Vec<TaskSpec> {
        (0..n)
            .map(|i| {
                let mut c = [0.0; 3];
                for v in &mut c {
                    *v = (code % 3) as f64;
                    code /= 3;
                }
                TaskSpec::new(i, i..i + 1).with_costs(c[0], c[1], c[2])
            })
            .collect()
    };
    let mut sets: Vec<Vec<TaskSpec>> = Vec::new();
    for n in 1..=3 {
        sets.extend((0..27usize.pow(n as u32)).map(|code| decode(code, n)));
    }
    sets.extend((0..3000).map(|_| decode(rng.gen_range(0..27usize.pow(4)), 4)));
    for tasks in &sets {
        let opt = flow_shop_optimum(tasks);
        let serial = simulate_serial(tasks, &dev).map_err(|e| e.to_string())?.makespan;
        for n in [2, 4] {
            let m = simulate_streams(tasks, &dev, &StreamConfig::new(n)).map_err(|e| e.to_string())?.makespan;
            ensure(m >= opt - 1e-12, format!("{n} streams beat the flow-shop optimum {opt}: {m}"))?;
            ensure(m <= serial, format!("{n} streams slower than serial: {m} > {serial}"))?;
        }
    }
    Ok(format!("500 fuzzed sets sound; {} small sets within [optimum, serial]", sets.len()))
}

fn c8_monotone() -> Outcome {
    let dev = DeviceSpec::default();
    let mut prev = f64::NEG_INFINITY;
    let mut seen = Vec::new();
    for step in 1..=10 {
        let h = step as f64 / 10.0;
        let tasks = uniform(8, h, 1.0, 0.0);
        let r = simulate(&tasks, &tasks, &dev, &StreamConfig::new(8)).map_err(|e| e.to_string())?;
        ensure(r.improvement >= prev - 1e-12, format!("h = {h}: improvement {} after {prev}", r.improvement))?;
        prev = r.improvement;
        seen.push(r.improvement);
    }
    Ok(format!("improvement rises from {:.4} to {:.4}", seen[0], seen[9]))
}

fn c9_break_even() -> Outcome {
    let dev = DeviceSpec::default();
    let cfg = StreamConfig::new(4);
    let (fwt, fwt_base) = lavamd_tasks(1.000242);
    let (lava, lava_base) = lavamd_tasks(1.888);
    let good = simulate(&fwt, &fwt_base, &dev, &cfg).map_err(|e| e.to_string())?.improvement;
    let bad = simulate(&lava, &lava_base, &dev, &cfg).map_err(|e| e.to_string())?.improvement;
    ensure(good > 0.0, format!("inflation 1.000242: improvement {good}"))?;
    ensure(bad <= 0.0, format!("inflation 1.888: improvement {bad}"))?;
    Ok(format!("1.000242 -> {good:+.4}, 1.888 -> {bad:+.4}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("pipeline closed form", c1_closed_form),
        ("lavaMD reconstruction", c2_lavamd),
        ("ratio pipeline", c3_ratio),
        ("CDF fixture", c4_cdf_fixture),
        ("wavefront structure", c5_wavefront),
        ("oracle equivalence", c6_oracles),
        ("simulator soundness", c7_soundness),
        ("monotone overlap benefit", c8_monotone),
        ("halo break-even", c9_break_even),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
