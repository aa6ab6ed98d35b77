//! `streamwise`: analyze stage traces, simulate multi-stream execution, and
//! run the reference workloads.
//!
//! Exit codes: 0 success, 1 validation, parse or usage error, 2 streamed
//! output differs from serial.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use streamwise_core::report::{
    analyze, parse_device, read_trace, run_workload, simulate_config, write_cdf, write_tasks, write_trace, RunSpec,
    SimConfig, SimOverrides, WorkloadKind,
};
use streamwise_core::{
    partition_halo, partition_independent, partition_wavefront, DecisionBand, DeviceSpec, Report,
};

#[derive(Parser)]
#[command(name = "streamwise", version, about = "Decide, plan and predict multi-stream offload pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate a stage trace, compute transfer ratios and verdicts.
    Analyze {
        trace: PathBuf,
        #[arg(long, default_value_t = 0.10)]
        band_low: f64,
        #[arg(long, default_value_t = 0.90)]
        band_high: f64,
        /// Write report.txt, aggregated.csv and the CDF tables here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the empirical CDF of a trace's transfer ratios.
    Cdf {
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = RatioKind::H2d)]
        stage: RatioKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan and simulate every run of a config file.
    Simulate {
        config: PathBuf,
        /// Device file overriding the config's [device] table.
        #[arg(long)]
        device: Option<PathBuf>,
        #[arg(long)]
        streams: Option<usize>,
        #[arg(long)]
        tasks: Option<usize>,
        /// Write report.txt and one timeline CSV per streamable run here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the task set produced by a partitioner.
    Partition {
        #[arg(long, value_enum)]
        kind: PartitionKind,
        #[arg(long)]
        elements: Option<usize>,
        #[arg(long, default_value_t = 4)]
        tasks: usize,
        #[arg(long, default_value_t = 0)]
        radius: usize,
        /// Matrix size as ROWSxCOLS (wavefront).
        #[arg(long, value_parser = parse_dims)]
        matrix: Option<(usize, usize)>,
        /// Block grid as ROWSxCOLS (wavefront).
        #[arg(long, value_parser = parse_dims)]
        blocks: Option<(usize, usize)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a workload serially and streamed, check equivalence, emit a trace.
    Run {
        #[arg(value_parser = parse_workload)]
        workload: WorkloadKind,
        /// Records (nn), elements (conv1d) or sequence length (nw).
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 4)]
        tasks: usize,
        #[arg(long, default_value_t = 4)]
        streams: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 11)]
        runs: u32,
        /// Neighbours to keep (nn).
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Stencil radius (conv1d).
        #[arg(long, default_value_t = 4)]
        radius: usize,
        /// Block grid as ROWSxCOLS (nw).
        #[arg(long, value_parser = parse_dims, default_value = "4x4")]
        blocks: (usize, usize),
        #[arg(long)]
        device: Option<PathBuf>,
        /// Write trace.csv here instead of printing it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RatioKind {
    H2d,
    D2h,
}

#[derive(Clone, Copy, ValueEnum)]
enum PartitionKind {
    Independent,
    Halo,
    Wavefront,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once('x').ok_or_else(|| format!("expected ROWSxCOLS, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad dimension `{v}`"));
    Ok((num(r)?, num(c)?))
}

fn parse_workload(s: &str) -> Result<WorkloadKind, String> {
    s.parse().map_err(|e: streamwise_core::Error| e.to_string())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn device(path: Option<&Path>) -> Result<Option<DeviceSpec>> {
    path.map(|p| parse_device(&read(p)?).with_context(|| format!("device file {}", p.display()))).transpose()
}

/// Writes `files` into `dir`, or prints the first one when there is no dir.
fn emit(out: Option<&Path>, files: &[(String, String)]) -> Result<()> {
    match out {
        None => print!("{}", files[0].1),
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, body) in files {
                let path = dir.join(name);
                fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn stamped(mut report: Report, command: &str) -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    report.comments = vec![format!("streamwise {command}"), format!("generated-unix {secs}")];
    report.render()
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze { trace, band_low, band_high, out } => {
            let rows = read_trace(&read(&trace)?).with_context(|| trace.display().to_string())?;
            let a = analyze(&rows, DecisionBand::new(band_low, band_high)?)?;
            emit(
                out.as_deref(),
                &[
                    ("report.txt".into(), stamped(a.report(), "analyze")),
                    ("aggregated.csv".into(), write_trace(&a.aggregated())),
                    ("cdf_h2d.csv".into(), write_cdf(&a.cdf_h2d)),
                    ("cdf_d2h.csv".into(), write_cdf(&a.cdf_d2h)),
                ],
            )?;
        }
        Command::Cdf { trace, stage, out } => {
            let rows = read_trace(&read(&trace)?).with_context(|| trace.display().to_string())?;
            let a = analyze(&rows, DecisionBand::default())?;
            let (name, curve) = match stage {
                RatioKind::H2d => ("cdf_h2d.csv", a.cdf_h2d),
                RatioKind::D2h => ("cdf_d2h.csv", a.cdf_d2h),
            };
            emit(out.as_deref(), &[(name.into(), write_cdf(&curve))])?;
        }
        Command::Simulate { config, device: dev, streams, tasks, out } => {
            let mut cfg = SimConfig::parse(&read(&config)?).with_context(|| config.display().to_string())?;
            if let Some(d) = device(dev.as_deref())? {
                cfg.device = d;
            }
            let sim = simulate_config(&cfg, SimOverrides { tasks, streams })?;
            let mut files = vec![("report.txt".to_owned(), stamped(sim.report(), "simulate"))];
            files.extend(sim.timelines());
            emit(out.as_deref(), &files)?;
        }
        Command::Partition { kind, elements, tasks, radius, matrix, blocks, out } => {
            let need_elements = || elements.context("--elements is required for this partition kind");
            let (set, summary) = match kind {
                PartitionKind::Independent => (partition_independent(need_elements()?, tasks)?, String::new()),
                PartitionKind::Halo => {
                    let h = partition_halo(need_elements()?, tasks, radius)?;
                    let s = format!("inflation {:.6}, max per task {:.6}", h.inflation, h.max_task_inflation());
                    (h.tasks, s)
                }
                PartitionKind::Wavefront => {
                    let (rows, cols) = matrix.context("--matrix is required for wavefront")?;
                    let (gr, gc) = blocks.context("--blocks is required for wavefront")?;
                    if gr == 0 || gc == 0 || rows % gr != 0 || cols % gc != 0 {
                        anyhow::bail!(streamwise_core::Error::NonConformingBlock {
                            matrix: (rows, cols),
                            block: (gr, gc)
                        });
                    }
                    let w = partition_wavefront((rows, cols), (rows / gr, cols / gc))?;
                    let s = format!("diagonal widths {:?}", w.widths());
                    (w.tasks, s)
                }
            };
            if !summary.is_empty() {
                eprintln!("{summary}");
            }
            emit(out.as_deref(), &[("tasks.csv".into(), write_tasks(&set))])?;
        }
        Command::Run { workload, size, tasks, streams, seed, runs, k, radius, blocks, device: dev, out } => {
            let mut spec = RunSpec::new(workload);
            if let Some(n) = size {
                spec.size = n;
            }
            spec = RunSpec { tasks, streams, seed, runs, k, radius, grid: blocks, ..spec };
            let device = device(dev.as_deref())?.unwrap_or_default();
            let result = run_workload(&spec, &device)?;
            if !result.equivalence.equivalent {
                eprintln!("NOT EQUIVALENT: {}", result.equivalence.detail.as_deref().unwrap_or("outputs differ"));
                return Ok(ExitCode::from(2));
            }
            eprintln!("EQUIVALENT");
            emit(out.as_deref(), &[("trace.csv".into(), write_trace(&result.profiles))])?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
