use crate::error::Result;
use crate::rng::RNG_ALGORITHM;
use crate::system::Simulation;
use crate::trace::{Termination, Trace, TraceEvent};
use crate::ttnoc::{Contention, FabricMonitor};

use super::build::BuiltScenario;

/// Result of one simulation run.
#[derive(Debug)]
pub struct RunOutput {
    pub trace: Trace,
    pub ticks: u64,
    pub contentions: Vec<Contention>,
    pub warnings: Vec<String>,
}

/// Header lines identifying a run.
pub fn trace_header(built: &BuiltScenario, seed: u64, steps: u64) -> Vec<(String, String)> {
    let mut h = vec![
        ("scenario_hash".to_string(), built.hash.clone()),
        ("seed".to_string(), seed.to_string()),
        ("steps".to_string(), steps.to_string()),
        ("rng".to_string(), RNG_ALGORITHM.to_string()),
    ];
    if let Some(a) = built.run.max_age {
        h.push(("max_age".into(), a.to_string()));
    }
    if let Some(l) = built.run.max_latency {
        h.push(("max_latency".into(), l.to_string()));
    }
    for app in &built.apps {
        let slices: Vec<String> = app.slices.iter().map(u32::to_string).collect();
        h.push((format!("slices.{}", app.name), slices.join(",")));
    }
    h
}

/// Runs `built` for at most `steps` steps, passing each event to `on_event`
/// and watching the fabric for contention.
pub fn simulate(
    built: &BuiltScenario,
    seed: u64,
    steps: u64,
    mut on_event: impl FnMut(&TraceEvent),
) -> Result<RunOutput> {
    let mut sim = Simulation::new(&built.system, seed);
    let mut monitor = FabricMonitor::new(built.run.high_water);
    let mut events = Vec::new();
    let mut termination = Termination::StepLimit;
    while (events.len() as u64) < steps {
        let Some(e) = sim.step()? else {
            termination = Termination::Quiescent;
            break;
        };
        monitor.observe(&built.layout, sim.state(), sim.ticks());
        on_event(&e);
        events.push(e);
    }
    Ok(RunOutput {
        trace: Trace {
            events,
            termination,
        },
        ticks: sim.ticks(),
        contentions: monitor.contentions().cloned().collect(),
        warnings: monitor.warnings().to_vec(),
    })
}
