//! The analyze, simulate and run flows, returning typed results that render
//! to reports and CSV tables.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{RunConfig, SimConfig};
use super::doc::{Report, Section};
use super::tables::{fmt_time, write_timeline};
use crate::error::{Error, Result};
use crate::model::{Category, DecisionBand, DeviceSpec, RatioReport, StageProfile, TaskSpec, Timeline};
use crate::partition::{plan, CostModel, Plan, PlanLayout};
use crate::ratio::{aggregate_runs, build_cdf, compute_ratio, decide_streamworthy, CdfCurve, Verdict, VerdictKind};
use crate::sim::{lower_bound, simulate, sweep_streams, Sweep};
use crate::workloads::{
    measure_serial, measure_stages, Conv1dWorkload, Equivalence, Executor, NnWorkload, NwWorkload, Workload,
};

fn fmt_ratio(r: &RatioReport, s: &mut Section) {
    s.push("r_h2d", fmt_time(r.r_h2d)).push("r_d2h", fmt_time(r.r_d2h)).push("r_transfer", fmt_time(r.r_transfer));
}

fn labels(cats: &[Category]) -> String {
    cats.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(" ")
}

/// One aggregated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSummary {
    /// Per-stage medians; `meta.run` is `None`.
    pub profile: StageProfile,
    pub runs: usize,
    pub ratio: RatioReport,
    /// Decided on `r_h2d`.
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub band: DecisionBand,
    pub rows: usize,
    /// In order of first appearance in the trace.
    pub configs: Vec<ConfigSummary>,
    pub cdf_h2d: CdfCurve,
    pub cdf_d2h: CdfCurve,
}

impl Analysis {
    pub fn count(&self, kind: VerdictKind) -> usize {
        self.configs.iter().filter(|c| c.verdict.kind == kind).count()
    }

    pub fn report(&self) -> Report {
        let mut summary = Section::new("analysis");
        summary
            .push("rows", self.rows)
            .push("configurations", self.configs.len())
            .push("band_low", fmt_time(self.band.low))
            .push("band_high", fmt_time(self.band.high))
            .push("cdf_h2d_at_band_low", fmt_time(self.cdf_h2d.eval(self.band.low)))
            .push("cdf_d2h_at_band_low", fmt_time(self.cdf_d2h.eval(self.band.low)));
        for kind in [VerdictKind::Worth, VerdictKind::NotWorthLowR, VerdictKind::NotWorthHighR] {
            summary.push(&kind.as_str().replace('-', "_"), self.count(kind));
        }
        let mut sections = vec![summary];
        for c in &self.configs {
            let m = &c.profile.meta;
            let mut s = Section::new("config");
            s.push("app", &m.app)
                .push("variant", &m.variant)
                .push("dataset", &m.dataset)
                .push("platform", &m.platform)
                .push("runs", c.runs)
                .push("h2d_s", fmt_time(c.profile.h2d))
                .push("kex_s", fmt_time(c.profile.kex))
                .push("d2h_s", fmt_time(c.profile.d2h));
            fmt_ratio(&c.ratio, &mut s);
            s.push("verdict", c.verdict.kind);
            sections.push(s);
        }
        Report { comments: Vec::new(), sections }
    }

    /// Aggregated profiles in trace format.
    pub fn aggregated(&self) -> Vec<StageProfile> {
        self.configs.iter().map(|c| c.profile.clone()).collect()
    }
}

/// Groups rows by configuration, takes per-stage medians, then computes R,
/// verdicts and the CDFs over all configurations.
pub fn analyze(rows: &[StageProfile], band: DecisionBand) -> Result<Analysis> {
    if rows.is_empty() {
        return Err(Error::Domain("no trace rows".into()));
    }
    let mut order: Vec<&StageProfile> = Vec::new();
    let mut groups: BTreeMap<_, Vec<StageProfile>> = BTreeMap::new();
    for r in rows {
        let runs = groups.entry(r.meta.config_key()).or_default();
        if runs.is_empty() {
            order.push(r);
        }
        runs.push(r.clone());
    }
    let configs = order
        .into_iter()
        .map(|first| {
            let runs = &groups[&first.meta.config_key()];
            let profile = aggregate_runs(runs)?;
            let ratio = compute_ratio(&profile).map_err(|e| {
                let (a, v, d, p) = profile.meta.config_key();
                Error::InvalidProfile(format!("{a}/{v}/{d}/{p}: {e}"))
            })?;
            let verdict = decide_streamworthy(ratio.r_h2d, band);
            Ok(ConfigSummary { profile, runs: runs.len(), ratio, verdict })
        })
        .collect::<Result<Vec<_>>>()?;
    let cdf_h2d = build_cdf(&configs.iter().map(|c| c.ratio.r_h2d).collect::<Vec<_>>())?;
    let cdf_d2h = build_cdf(&configs.iter().map(|c| c.ratio.r_d2h).collect::<Vec<_>>())?;
    Ok(Analysis { band, rows: rows.len(), configs, cdf_h2d, cdf_d2h })
}

/// Prediction for one simulated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub n_tasks: usize,
    pub n_streams: usize,
    /// Transferred over owned elements, as priced on the uploads.
    pub inflation: f64,
    pub serial_makespan: f64,
    pub streamed_makespan: f64,
    pub improvement: f64,
    pub lower_bound: f64,
    pub sweep: Sweep,
    pub tasks: Vec<TaskSpec>,
    pub timeline: Timeline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub name: String,
    pub category: Category,
    pub labels: Vec<Category>,
    pub ratio: RatioReport,
    pub verdict: Verdict,
    /// `None` for non-streamable categories.
    pub prediction: Option<Prediction>,
}

impl RunOutcome {
    pub fn status(&self) -> String {
        match self.prediction {
            Some(_) => "streamable".into(),
            None => format!("non-streamable: {}", self.category),
        }
    }

    pub fn section(&self) -> Section {
        let mut s = Section::new("run");
        s.push("name", &self.name)
            .push("status", self.status())
            .push("category", self.category)
            .push("labels", labels(&self.labels));
        fmt_ratio(&self.ratio, &mut s);
        s.push("verdict", self.verdict.kind);
        if let Some(p) = &self.prediction {
            let sweep: Vec<String> = p.sweep.points.iter().map(|(n, m)| format!("{n}:{}", fmt_time(*m))).collect();
            s.push("tasks", p.n_tasks)
                .push("streams", p.n_streams)
                .push("inflation", fmt_time(p.inflation))
                .push("serial_makespan_s", fmt_time(p.serial_makespan))
                .push("streamed_makespan_s", fmt_time(p.streamed_makespan))
                .push("lower_bound_s", fmt_time(p.lower_bound))
                .push("improvement", fmt_time(p.improvement))
                .push("sweep", sweep.join(" "))
                .push("best_streams", p.sweep.best.0)
                .push("best_makespan_s", fmt_time(p.sweep.best.1))
                .push("flag", if p.improvement > 0.0 { "ok" } else { "streaming-hurts" });
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub runs: Vec<RunOutcome>,
}

impl Simulation {
    pub fn report(&self) -> Report {
        Report { comments: Vec::new(), sections: self.runs.iter().map(RunOutcome::section).collect() }
    }

    /// `(file name, contents)` of each streamable run's timeline.
    pub fn timelines(&self) -> Vec<(String, String)> {
        self.runs
            .iter()
            .filter_map(|r| r.prediction.as_ref().map(|p| (format!("timeline_{}.csv", r.name), write_timeline(&p.timeline))))
            .collect()
    }
}

/// Command-line overrides applied to every run of a config.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimOverrides {
    pub tasks: Option<usize>,
    pub streams: Option<usize>,
}

pub fn simulate_run(run: &RunConfig, device: &DeviceSpec, ov: SimOverrides) -> Result<RunOutcome> {
    run.validate()?;
    let descriptor = run.descriptor()?;
    let profile = run.profile()?;
    let ratio = compute_ratio(&profile)?;
    let verdict = decide_streamworthy(ratio.r_h2d, DecisionBand::default());
    let domain = run.domain();
    let n_tasks = ov.tasks.or(run.tasks).unwrap_or(1);
    let planned = match domain {
        Ok(d) => plan(&descriptor, d, n_tasks)?,
        // Non-streamable runs need no domain.
        Err(e) => match plan(&descriptor, crate::partition::Domain::Linear(1), 1)? {
            p @ Plan::NotStreamable { .. } => p,
            Plan::Streamable(_) => return Err(e),
        },
    };
    let (sp, prediction) = match planned {
        Plan::NotStreamable { category, labels } => {
            return Ok(RunOutcome { name: run.name.clone(), category, labels, ratio, verdict, prediction: None });
        }
        Plan::Streamable(sp) => {
            let mut cost = CostModel::from_profile(&profile, sp.domain.len());
            if let Some(f) = run.h2d_inflation {
                cost = cost.with_h2d_inflation(f);
            }
            let mut tasks = sp.tasks.clone();
            cost.apply(&mut tasks);
            let baseline = cost.baseline(&tasks);
            let inflation = match (run.h2d_inflation, &sp.layout) {
                (Some(f), _) => f,
                (None, PlanLayout::Halo { inflation, .. }) => *inflation,
                _ => 1.0,
            };
            let n_streams = ov.streams.or(run.streams).unwrap_or(tasks.len().min(run.max_streams()));
            let mut cfg = sp.stream_config(n_streams);
            if let Some(a) = run.assignment() {
                cfg.assignment = a;
            }
            let result = simulate(&tasks, &baseline, device, &cfg)?;
            let sweep = sweep_streams(&tasks, device, &cfg.assignment, run.max_streams())?;
            let p = Prediction {
                n_tasks: tasks.len(),
                n_streams,
                inflation,
                serial_makespan: result.serial_makespan,
                streamed_makespan: result.streamed_makespan,
                improvement: result.improvement,
                lower_bound: lower_bound(&tasks, device),
                sweep,
                tasks,
                timeline: result.timeline,
            };
            (sp, p)
        }
    };
    Ok(RunOutcome {
        name: run.name.clone(),
        category: sp.category,
        labels: sp.labels,
        ratio,
        verdict,
        prediction: Some(prediction),
    })
}

/// Plans and simulates every run. Non-streamable runs are reported, not
/// treated as failures.
pub fn simulate_config(cfg: &SimConfig, ov: SimOverrides) -> Result<Simulation> {
    let runs = cfg.runs.iter().map(|r| simulate_run(r, &cfg.device, ov)).collect::<Result<Vec<_>>>()?;
    Ok(Simulation { runs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadKind {
    Nn,
    Conv1d,
    Nw,
}

impl std::str::FromStr for WorkloadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nn" => Ok(Self::Nn),
            "conv1d" => Ok(Self::Conv1d),
            "nw" => Ok(Self::Nw),
            _ => Err(Error::Config(format!("unknown workload `{s}`, expected nn, conv1d or nw"))),
        }
    }
}

/// Parameters of a `run` invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSpec {
    pub kind: WorkloadKind,
    /// Records for nn, elements for conv1d, sequence length for nw.
    pub size: usize,
    pub tasks: usize,
    pub streams: usize,
    pub seed: u64,
    pub runs: u32,
    pub k: usize,
    pub radius: usize,
    /// Block grid for nw.
    pub grid: (usize, usize),
}

impl RunSpec {
    pub fn new(kind: WorkloadKind) -> Self {
        let size = match kind {
            WorkloadKind::Nn => 100_000,
            WorkloadKind::Conv1d => 100_000,
            WorkloadKind::Nw => 256,
        };
        Self { kind, size, tasks: 4, streams: 4, seed: 0, runs: 11, k: 4, radius: 4, grid: (4, 4) }
    }

    pub fn workload(&self) -> Workload {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match self.kind {
            WorkloadKind::Nn => {
                Workload::Nn { w: NnWorkload::random(&mut rng, self.size, self.k.min(self.size)), n_tasks: self.tasks }
            }
            WorkloadKind::Conv1d => {
                Workload::Conv1d { w: Conv1dWorkload::random(&mut rng, self.size, self.radius), n_tasks: self.tasks }
            }
            WorkloadKind::Nw => Workload::Nw { w: NwWorkload::random_dna(&mut rng, self.size, self.size), grid: self.grid },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadRun {
    pub equivalence: Equivalence,
    /// Serial profile followed by the streamed task profiles, per run.
    pub profiles: Vec<StageProfile>,
}

/// Checks streamed against serial, then profiles both variants `runs` times.
/// Profiles are skipped when the outputs differ.
pub fn run_workload(spec: &RunSpec, device: &DeviceSpec) -> Result<WorkloadRun> {
    if spec.streams == 0 {
        return Err(Error::Domain("streams must be >= 1".into()));
    }
    let w = spec.workload();
    let equivalence = w.check_equivalence(&Executor::new(spec.streams))?;
    let mut profiles = Vec::new();
    if equivalence.equivalent {
        for run in 0..spec.runs {
            profiles.push(measure_serial(&w, device, run)?);
            profiles.extend(measure_stages(&w, device, run)?);
        }
    }
    Ok(WorkloadRun { equivalence, profiles })
}
