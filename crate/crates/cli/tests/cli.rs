use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bipsim"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn colliding_sorting() -> String {
    fs::read_to_string(scenario("sorting.scn"))
        .unwrap()
        .replace(
            "entry T4 port=2 period=8 phase=1",
            "entry T4 port=2 period=8 phase=0",
        )
}

#[test]
fn run_writes_trace_and_actuator_files() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("out.trace");
    let acts = dir.path().join("acts");
    fs::create_dir(&acts).unwrap();
    let o = run(&[
        "run",
        scenario("sorting.scn").to_str().unwrap(),
        "--seed",
        "7",
        "--trace-out",
        trace.to_str().unwrap(),
        "--actuator-dir",
        acts.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("seed 7: 10000 events"));
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.contains("# seed=7\n"));
    assert!(text.contains("# rng=chacha8-v1\n"));
    assert_eq!(
        text.lines().filter(|l| l.starts_with("step=")).count(),
        10_000
    );
    for name in ["pusher.status", "gate.status"] {
        let status = fs::read_to_string(acts.join(name)).unwrap();
        let ticks: Vec<u64> = status
            .lines()
            .map(|l| l.split(' ').next().unwrap().parse().unwrap())
            .collect();
        assert!(!ticks.is_empty(), "{name} empty");
        assert!(ticks.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn identical_seeds_give_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<PathBuf> = ["a", "b", "c"].iter().map(|n| dir.path().join(n)).collect();
    for (p, seed) in paths.iter().zip(["3", "3", "4"]) {
        let o = run(&[
            "run",
            scenario("sorting.scn").to_str().unwrap(),
            "--seed",
            seed,
            "--steps",
            "3000",
            "--trace-out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let read = |i: usize| fs::read(&paths[i]).unwrap();
    assert_eq!(read(0), read(1));
    assert_ne!(read(0), read(2));
}

#[test]
fn zero_steps_give_an_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t");
    let o = run(&[
        "run",
        scenario("sorting.scn").to_str().unwrap(),
        "--steps",
        "0",
        "--trace-out",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.lines().all(|l| l.starts_with('#')));
    assert!(text.contains("# steps=0\n"));
}

#[test]
fn invalid_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "bad.scn",
        "[topology]\nswitch S1\ntiss T1 at S9\n",
    );
    for cmd in ["run", "validate", "suggest"] {
        let o = run(&[cmd, p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(stderr(&o).contains("bad.scn: line 3"), "{}", stderr(&o));
    }
}

#[test]
fn missing_file_exits_2() {
    let o = run(&["run", "/nonexistent/x.scn"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["analyze", "/nonexistent/x.trace"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_reports_colliding_schedule() {
    let o = run(&["validate", scenario("sorting.scn").to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "ok\n");
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "collide.scn", &colliding_sorting());
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    assert!(
        out.contains("conflict tick=0 switch=S1 entries=T3:1,T4:2"),
        "{out}"
    );
    let o = run(&["run", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_rejects_long_route() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("sorting.scn"))
        .unwrap()
        .replace("route=S2,S4,S3 target=T3", "route=S2,S1,S3,S4 target=T5");
    let p = write(dir.path(), "long.scn", &text);
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stdout(&o).contains("route entry=T1:5 has 4 switches"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn suggest_fills_missing_phases() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("sorting.scn")).unwrap();
    let unphased: String = text
        .lines()
        .map(|l| {
            l.split(' ')
                .filter(|w| !w.starts_with("phase="))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n");
    let p = write(dir.path(), "draft.scn", &unphased);
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run suggest first"));
    let o = run(&["suggest", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let q = write(dir.path(), "done.scn", &stdout(&o));
    let o = run(&["validate", q.to_str().unwrap()]);
    assert_eq!(stdout(&o), "ok\n");
}

#[test]
fn analyze_flags_stale_samples() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t");
    let o = run(&[
        "run",
        scenario("sorting.scn").to_str().unwrap(),
        "--seed",
        "0",
        "--trace-out",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let o = run(&["analyze", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.contains("max_age=24\n"), "{out}");
    assert!(out.contains("VIOLATION age"));
    let o = run(&[
        "analyze",
        trace.to_str().unwrap(),
        "--max-age",
        "24",
        "--max-latency",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("no violations"));
}

#[test]
fn analyze_reads_synthetic_trace() {
    let dir = tempfile::tempdir().unwrap();
    let stamp: i64 = (2i64 << 32) | 7;
    let p = write(
        dir.path(),
        "t",
        &format!("# seed=1\nstep=4 tick=12 conn=deliver_ctl_4 ports=ctl.deliver_4 data=ctl.sample={stamp},ctl.sample.port=4\n"),
    );
    let o = run(&["analyze", p.to_str().unwrap(), "--max-age", "5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o)
        .contains("violation metric=age tick=12 step=4 channel=ctl.sample@4 value=10 limit=5"));
    let bad = write(dir.path(), "bad", "step=x\n");
    assert_eq!(
        run(&["analyze", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn seed_range_summarizes_violations() {
    let o = run(&[
        "run",
        scenario("sorting.scn").to_str().unwrap(),
        "--seed-range",
        "0..3",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.starts_with("seed=0 ticks="), "{out}");
    assert!(out.contains(" max_age=24 "));
    assert!(out.trim_end().ends_with("seeds=3 violating=3"), "{out}");
}
