use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use streamwise_core::report::{read_tasks, read_timeline, read_trace};
use streamwise_core::{validate_task_set, Report};

fn streamwise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamwise")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn repo(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel).to_str().unwrap().to_owned()
}

fn body(report: &str) -> String {
    Report::parse(report).unwrap().body()
}

#[test]
fn analyze_fixture() {
    let o = streamwise(&["analyze", &repo("crates/core/fixtures/cdf_223.csv")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# streamwise analyze\n# generated-unix "));
    let r = Report::parse(&text).unwrap();
    let summary = r.section("analysis").unwrap();
    assert_eq!(summary.get("configurations"), Some("223"));
    assert!(summary.get("cdf_h2d_at_band_low").unwrap().parse::<f64>().unwrap() >= 0.5);
    // Only the header comment may differ between invocations.
    let again = streamwise(&["analyze", &repo("crates/core/fixtures/cdf_223.csv")]);
    assert_eq!(body(&text), body(&stdout(&again)));
}

#[test]
fn analyze_single_row_and_band_flags() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    fs::write(&trace, "app,variant,dataset,platform,run,h2d_s,kex_s,d2h_s\nlavaMD,serial,b,phi,0,0.3476,0.3380,0\n")
        .unwrap();
    let t = trace.to_str().unwrap();
    let r = Report::parse(&stdout(&streamwise(&["analyze", t]))).unwrap();
    let cfg = r.section("config").unwrap();
    assert_eq!(cfg.get("r_h2d"), Some("0.507001"));
    assert_eq!(cfg.get("verdict"), Some("worth"));
    let strict = Report::parse(&stdout(&streamwise(&["analyze", t, "--band-low", "0.6"]))).unwrap();
    assert_eq!(strict.section("config").unwrap().get("verdict"), Some("not-worth-low-r"));
    assert_eq!(streamwise(&["analyze", t, "--band-low", "0.9", "--band-high", "0.5"]).status.code(), Some(1));

    let out = dir.path().join("out");
    let o = streamwise(&["analyze", t, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["report.txt", "aggregated.csv", "cdf_h2d.csv", "cdf_d2h.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(out.join("cdf_h2d.csv")).unwrap(), "ratio,cdf\n0.507001,1.000000\n");
}

#[test]
fn parse_errors_exit_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "app,variant,dataset,platform,run,h2d_s,kex_s,d2h_s\na,b,c,d,0,1,1,1\na,b,c,d,1,-1,1,1\n").unwrap();
    let o = streamwise(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(streamwise(&["analyze", empty.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(streamwise(&["analyze", "/nonexistent/trace.csv"]).status.code(), Some(1));
}

#[test]
fn cdf_command() {
    let o = streamwise(&["cdf", &repo("crates/core/fixtures/cdf_223.csv")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("ratio,cdf\n"));
    assert!(text.ends_with(",1.000000\n"));
    let d2h = stdout(&streamwise(&["cdf", &repo("crates/core/fixtures/cdf_223.csv"), "--stage", "d2h"]));
    assert_ne!(text, d2h);
}

#[test]
fn simulate_bundled_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = streamwise(&["simulate", &repo("configs/simulate.toml"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = Report::parse(&fs::read_to_string(out.join("report.txt")).unwrap()).unwrap();
    let run = |name: &str| r.sections_named("run").find(|s| s.get("name") == Some(name)).unwrap();
    assert_eq!(run("uniform-4").get("improvement"), Some("0.375000"));
    assert_eq!(run("sync").get("status"), Some("non-streamable: SYNC"));
    assert_eq!(run("lavamd").get("flag"), Some("streaming-hurts"));
    let timeline = read_timeline(&fs::read_to_string(out.join("timeline_uniform-4.csv")).unwrap()).unwrap();
    assert_eq!(timeline.makespan, 5.0);
    assert!(!out.join("timeline_sync.csv").exists());

    let one = streamwise(&["simulate", &repo("configs/simulate.toml"), "--streams", "1"]);
    let r1 = Report::parse(&stdout(&one)).unwrap();
    let u = r1.sections_named("run").find(|s| s.get("name") == Some("uniform-4")).unwrap();
    assert_eq!(u.get("improvement"), Some("0.000000"));
}

#[test]
fn simulate_with_device_file() {
    let dir = tempfile::tempdir().unwrap();
    let dev = dir.path().join("half.toml");
    fs::write(&dev, "upload_bandwidth = 6e9\ndownload_bandwidth = 6e9\nduplex = false\n").unwrap();
    let o = streamwise(&["simulate", &repo("configs/simulate.toml"), "--device", dev.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    fs::write(&dev, "compute_slots = 0\n").unwrap();
    let o = streamwise(&["simulate", &repo("configs/simulate.toml"), "--device", dev.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = streamwise(&["simulate", &repo("configs/device.toml")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn partition_outputs_validate() {
    let o = streamwise(&["partition", "--kind", "halo", "--elements", "1000", "--tasks", "4", "--radius", "111"]);
    assert_eq!(o.status.code(), Some(0));
    let tasks = read_tasks(&stdout(&o)).unwrap();
    assert!(validate_task_set(&tasks, 1000).is_empty());
    assert!(stderr(&o).contains("max per task 1.888000"));
    let o = streamwise(&["partition", "--kind", "wavefront", "--matrix", "64x64", "--blocks", "4x4"]);
    assert_eq!(read_tasks(&stdout(&o)).unwrap().len(), 16);
    assert!(stderr(&o).contains("[1, 2, 3, 4, 3, 2, 1]"));
    let o = streamwise(&["partition", "--kind", "independent", "--elements", "3", "--tasks", "5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_workloads() {
    let o = streamwise(&["run", "nn", "--size", "16", "--tasks", "4", "--runs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("EQUIVALENT"));
    let rows = read_trace(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0].meta.variant, "serial");

    let dir = tempfile::tempdir().unwrap();
    let o = streamwise(&[
        "run", "nw", "--size", "64", "--blocks", "4x4", "--runs", "1", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("EQUIVALENT"));
    assert_eq!(read_trace(&fs::read_to_string(dir.path().join("trace.csv")).unwrap()).unwrap().len(), 17);

    let o = streamwise(&["run", "conv1d", "--size", "500", "--radius", "3", "--seed", "9", "--runs", "1"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let o = streamwise(&["run", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown workload"));
    assert_eq!(streamwise(&[]).status.code(), Some(1));
    assert_eq!(streamwise(&["simulate"]).status.code(), Some(1));
    assert_eq!(streamwise(&["--help"]).status.code(), Some(0));
}
