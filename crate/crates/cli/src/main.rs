use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bipsim::analysis::{analyze_text, sweep, AnalyzeError, Limits};
use bipsim::host::ActuatorRecorder;
use bipsim::scenario::{
    build_scenario, parse_scenario, print_scenario, simulate, suggest_schedule, trace_header,
    validate_routes, validate_schedule, Scenario,
};
use clap::{Parser, Subcommand};

const EXIT_CONFIG: u8 = 2;
const EXIT_VIOLATIONS: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(
    name = "bipsim",
    version,
    about = "Simulate time-triggered systems on a chip"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its trace and actuator status files.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long)]
        actuator_dir: Option<PathBuf>,
        /// Run and analyze every seed in `A..B` instead of a single run.
        #[arg(long, value_parser = parse_range)]
        seed_range: Option<(u64, u64)>,
        #[arg(long)]
        max_age: Option<u64>,
        #[arg(long)]
        max_latency: Option<u64>,
    },
    /// Report sensor-data ages and actuator latencies of a trace.
    Analyze {
        trace: PathBuf,
        #[arg(long)]
        max_age: Option<u64>,
        #[arg(long)]
        max_latency: Option<u64>,
    },
    /// Check routes and the static schedule of a scenario.
    Validate { scenario: PathBuf },
    /// Fill in missing schedule phases and print the resulting scenario.
    Suggest { scenario: PathBuf },
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, found `{s}`"))?;
    let a: u64 = a.parse().map_err(|e| format!("{a}: {e}"))?;
    let b: u64 = b.parse().map_err(|e| format!("{b}: {e}"))?;
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok((a, b))
}

struct Failure {
    code: u8,
    message: String,
}

type Outcome = Result<u8, Failure>;

fn config(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|diags| {
        let lines: Vec<String> = diags
            .iter()
            .map(|d| format!("{}: {d}", path.display()))
            .collect();
        config(lines.join("\n"))
    })
}

/// Route and schedule problems, one per line; empty when clean.
fn check(s: &Scenario) -> Result<Vec<String>, Failure> {
    if let Err(errors) = validate_routes(s) {
        return Ok(errors.iter().map(|e| e.to_string()).collect());
    }
    match validate_schedule(s) {
        Ok(conflicts) => Ok(conflicts.iter().map(|c| c.to_string()).collect()),
        Err(e) => Err(config(e.to_string())),
    }
}

fn cmd_validate(path: &Path) -> Outcome {
    let s = load(path)?;
    let problems = check(&s)?;
    let mut out = io::stdout().lock();
    for p in &problems {
        let _ = writeln!(out, "{p}");
    }
    if problems.is_empty() {
        let _ = writeln!(out, "ok");
        Ok(0)
    } else {
        Ok(EXIT_CONFIG)
    }
}

fn cmd_suggest(path: &Path) -> Outcome {
    let s = load(path)?;
    let s = suggest_schedule(&s).map_err(|e| config(e.to_string()))?;
    print!("{}", print_scenario(&s));
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    path: &Path,
    seed: Option<u64>,
    steps: Option<u64>,
    trace_out: Option<&Path>,
    actuator_dir: Option<&Path>,
    seed_range: Option<(u64, u64)>,
    limits: Limits,
) -> Outcome {
    let s = load(path)?;
    let problems = check(&s)?;
    if !problems.is_empty() {
        return Err(config(problems.join("\n")));
    }
    let built = build_scenario(&s).map_err(|e| config(e.to_string()))?;
    let steps = steps.unwrap_or(s.run.max_steps);
    let limits = Limits {
        max_age: limits.max_age.or(s.run.max_age),
        max_latency: limits.max_latency.or(s.run.max_latency),
    };

    if let Some((a, b)) = seed_range {
        let rows = sweep(&built, a..b, steps, limits).map_err(|e| Failure {
            code: EXIT_IO,
            message: e.to_string(),
        })?;
        let mut out = io::stdout().lock();
        let mut violating = 0;
        for r in &rows {
            let opt = |v: Option<u64>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
            let _ = writeln!(
                out,
                "seed={} ticks={} max_age={} max_latency={} violations={} contentions={}",
                r.seed,
                r.ticks,
                opt(r.report.max_age()),
                opt(r.report.max_latency()),
                r.report.violations.len(),
                r.contentions
            );
            if !r.report.is_clean() {
                violating += 1;
            }
        }
        let _ = writeln!(out, "seeds={} violating={violating}", rows.len());
        return Ok(if violating > 0 { EXIT_VIOLATIONS } else { 0 });
    }

    let seed = seed.unwrap_or(s.run.seed);
    let mut recorder = match actuator_dir {
        Some(dir) => Some(
            ActuatorRecorder::create(dir, &built.actuators).map_err(|e| Failure {
                code: EXIT_IO,
                message: e.to_string(),
            })?,
        ),
        None => None,
    };
    let out = simulate(&built, seed, steps, |e| {
        if let Some(r) = recorder.as_mut() {
            r.record(e);
        }
    })
    .map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("simulation aborted: {e}"),
    })?;
    if let Some(r) = recorder {
        r.finish().map_err(|e| Failure {
            code: EXIT_IO,
            message: e.to_string(),
        })?;
    }
    if let Some(p) = trace_out {
        let text = out.trace.render(&trace_header(&built, seed, steps));
        fs::write(p, text).map_err(|e| io_failure(p, e))?;
    }
    let mut err = io::stderr().lock();
    let _ = writeln!(
        err,
        "seed {seed}: {} events, {} ticks, {:?}",
        out.trace.events.len(),
        out.ticks,
        out.trace.termination
    );
    for c in &out.contentions {
        let _ = writeln!(
            err,
            "contention tick={} holder={} blocked_by={}",
            c.tick, c.holder, c.blocked_by
        );
    }
    for w in &out.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(0)
}

fn cmd_analyze(path: &Path, limits: Limits) -> Outcome {
    let text = fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let report = analyze_text(&text, limits).map_err(|e| match e {
        AnalyzeError::Parse(p) => config(format!("{}: {p}", path.display())),
        other => config(format!("{}: {other}", path.display())),
    })?;
    let mut out = io::stdout().lock();
    let _ = write!(out, "{}", report.render_table());
    let _ = writeln!(out);
    let _ = write!(out, "{}", report.render_kv());
    Ok(if report.is_clean() {
        0
    } else {
        EXIT_VIOLATIONS
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            scenario,
            seed,
            steps,
            trace_out,
            actuator_dir,
            seed_range,
            max_age,
            max_latency,
        } => cmd_run(
            scenario,
            *seed,
            *steps,
            trace_out.as_deref(),
            actuator_dir.as_deref(),
            *seed_range,
            Limits {
                max_age: *max_age,
                max_latency: *max_latency,
            },
        ),
        Command::Analyze {
            trace,
            max_age,
            max_latency,
        } => cmd_analyze(
            trace,
            Limits {
                max_age: *max_age,
                max_latency: *max_latency,
            },
        ),
        Command::Validate { scenario } => cmd_validate(scenario),
        Command::Suggest { scenario } => cmd_suggest(scenario),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
