//! CSV formats: stage traces, simulated timelines, task sets and CDF points.
//!
//! Times are decimal seconds with six fractional digits. Every parser
//! reports the 1-based line of the first bad record.

use std::collections::BTreeSet;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Resource, RunMeta, Stage, StageInterval, StageProfile, TaskSpec, Timeline};
use crate::ratio::CdfCurve;

pub const TRACE_HEADER: [&str; 8] = ["app", "variant", "dataset", "platform", "run", "h2d_s", "kex_s", "d2h_s"];
pub const TIMELINE_HEADER: [&str; 6] = ["task", "stream", "stage", "start_s", "end_s", "resource"];
pub const TASKS_HEADER: [&str; 9] =
    ["id", "owned_start", "owned_end", "transfer_start", "transfer_end", "h2d_s", "kex_s", "d2h_s", "deps"];
pub const CDF_HEADER: [&str; 2] = ["ratio", "cdf"];

pub fn fmt_time(v: f64) -> String {
    format!("{v:.6}")
}

fn write_table<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    // Writing to a Vec cannot fail.
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 fields")
}

/// One data record together with its line number.
struct Row {
    line: u64,
    rec: csv::StringRecord,
}

impl Row {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, message: message.into() }
    }

    fn get(&self, i: usize) -> &str {
        &self.rec[i]
    }

    fn parse<T: FromStr>(&self, i: usize, name: &str) -> Result<T> {
        self.get(i).parse().map_err(|_| self.err(format!("{name}: cannot parse `{}`", self.get(i))))
    }

    fn time(&self, i: usize, name: &str) -> Result<f64> {
        let v: f64 = self.parse(i, name)?;
        if !v.is_finite() || v < 0.0 {
            return Err(self.err(format!("{name} must be a finite non-negative time, got `{}`", self.get(i))));
        }
        Ok(v)
    }
}

fn read_table<const N: usize>(text: &str, header: [&str; N]) -> Result<Vec<Row>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = r.records();
    let first = match records.next() {
        None => return Err(Error::Parse { line: 1, message: "empty file, expected a header".into() }),
        Some(rec) => rec.map_err(|e| csv_error(e, 1))?,
    };
    if first.iter().ne(header.iter().copied()) {
        return Err(Error::Parse { line: 1, message: format!("expected header `{}`", header.join(",")) });
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_error(e, 0))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != N {
            return Err(Error::Parse { line, message: format!("expected {N} fields, found {}", rec.len()) });
        }
        rows.push(Row { line, rec });
    }
    Ok(rows)
}

fn csv_error(e: csv::Error, fallback: u64) -> Error {
    let line = e.position().map_or(fallback, |p| p.line());
    Error::Parse { line, message: e.to_string() }
}

pub fn write_trace(rows: &[StageProfile]) -> String {
    write_table(
        TRACE_HEADER,
        rows.iter().map(|p| {
            [
                p.meta.app.clone(),
                p.meta.variant.clone(),
                p.meta.dataset.clone(),
                p.meta.platform.clone(),
                p.meta.run.map(|r| r.to_string()).unwrap_or_default(),
                fmt_time(p.h2d),
                fmt_time(p.kex),
                fmt_time(p.d2h),
            ]
        }),
    )
}

/// Parses a trace; an empty `run` field means an already aggregated row.
pub fn read_trace(text: &str) -> Result<Vec<StageProfile>> {
    let rows = read_table(text, TRACE_HEADER)?;
    if rows.is_empty() {
        return Err(Error::Parse { line: 2, message: "trace has no data rows".into() });
    }
    rows.iter()
        .map(|row| {
            let run = match row.get(4) {
                "" => None,
                _ => Some(row.parse(4, "run")?),
            };
            Ok(StageProfile {
                h2d: row.time(5, "h2d_s")?,
                kex: row.time(6, "kex_s")?,
                d2h: row.time(7, "d2h_s")?,
                meta: RunMeta {
                    app: row.get(0).to_owned(),
                    variant: row.get(1).to_owned(),
                    dataset: row.get(2).to_owned(),
                    platform: row.get(3).to_owned(),
                    run,
                },
            })
        })
        .collect()
}

pub fn write_timeline(t: &Timeline) -> String {
    write_table(
        TIMELINE_HEADER,
        t.entries.iter().map(|e| {
            [
                e.task.to_string(),
                e.stream.to_string(),
                e.stage.to_string(),
                fmt_time(e.start),
                fmt_time(e.end),
                e.resource.to_string(),
            ]
        }),
    )
}

pub fn read_timeline(text: &str) -> Result<Timeline> {
    let entries = read_table(text, TIMELINE_HEADER)?
        .iter()
        .map(|row| {
            let stage: Stage = row.get(2).parse().map_err(|e: Error| row.err(e.to_string()))?;
            let resource: Resource = row.get(5).parse().map_err(|e: Error| row.err(e.to_string()))?;
            let (start, end) = (row.time(3, "start_s")?, row.time(4, "end_s")?);
            if end < start {
                return Err(row.err("end_s before start_s"));
            }
            Ok(StageInterval { task: row.parse(0, "task")?, stream: row.parse(1, "stream")?, stage, start, end, resource })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Timeline::from_entries(entries))
}

pub fn write_tasks(tasks: &[TaskSpec]) -> String {
    write_table(
        TASKS_HEADER,
        tasks.iter().map(|t| {
            [
                t.id.to_string(),
                t.owned.start.to_string(),
                t.owned.end.to_string(),
                t.transfer.start.to_string(),
                t.transfer.end.to_string(),
                fmt_time(t.h2d_cost),
                fmt_time(t.kex_cost),
                fmt_time(t.d2h_cost),
                t.deps.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
            ]
        }),
    )
}

/// Dependencies are a space-separated id list.
pub fn read_tasks(text: &str) -> Result<Vec<TaskSpec>> {
    read_table(text, TASKS_HEADER)?
        .iter()
        .map(|row| {
            let deps = row
                .get(8)
                .split_whitespace()
                .map(|d| d.parse().map_err(|_| row.err(format!("deps: cannot parse `{d}`"))))
                .collect::<Result<BTreeSet<usize>>>()?;
            let owned = row.parse(1, "owned_start")?..row.parse(2, "owned_end")?;
            let transfer = row.parse(3, "transfer_start")?..row.parse(4, "transfer_end")?;
            Ok(TaskSpec {
                id: row.parse(0, "id")?,
                owned,
                transfer,
                h2d_cost: row.time(5, "h2d_s")?,
                kex_cost: row.time(6, "kex_s")?,
                d2h_cost: row.time(7, "d2h_s")?,
                deps,
            })
        })
        .collect()
}

pub fn write_cdf(c: &CdfCurve) -> String {
    write_table(CDF_HEADER, c.points.iter().map(|&(v, f)| [fmt_time(v), fmt_time(f)]))
}

pub fn read_cdf(text: &str) -> Result<CdfCurve> {
    let points = read_table(text, CDF_HEADER)?
        .iter()
        .map(|row| {
            let (v, f): (f64, f64) = (row.parse(0, "ratio")?, row.parse(1, "cdf")?);
            if !(0.0..=1.0).contains(&v) || !(0.0..=1.0).contains(&f) {
                return Err(row.err("ratio and cdf must lie in [0, 1]"));
            }
            Ok((v, f))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CdfCurve { points })
}
