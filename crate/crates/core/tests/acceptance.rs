use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use bipsim::analysis::{
    deliveries, parallel_ticks, sweep, switch_exclusivity, time_slice_violations, Limits,
};
use bipsim::atomic::PortId;
use bipsim::connector::ConnectorPort;
use bipsim::scenario::{
    build_scenario, parse_scenario, schedule_conflicts, simulate, trace_header, validate_routes,
    validate_schedule, BuiltScenario, Scenario,
};
use bipsim::ttnoc::{build_ttsoc, prefill, FabricMonitor, ScheduleEntry, Topology};
use bipsim::{
    apply_priority, enabled_interactions, AtomicBuilder, AtomicComponentDef, ConnectorDef,
    Interaction, PortKind, PortRef, PortSet, PriorityModel, SimRng, Simulation, SystemBuilder,
    TransitionDef,
};

const CONNECTOR_CASES: usize = 1000;
const MAX_PORTS: usize = 6;
const _: () = assert!(MAX_PORTS <= bipsim::connector::MAX_CONNECTOR_PORTS);
const PRIORITY_CASES: usize = 500;
const VALIDATOR_CASES: usize = 200;
const VALIDATOR_HYPERPERIOD: u64 = 64;
const EXCLUSIVITY_TICKS: u64 = 1000;
const DETERMINISM_PAIRS: u64 = 10;
const SWEEP_SEEDS: u64 = 100;
const REFERENCE_MAX_AGE: u64 = 16;
const HAZARD_SEED: u64 = 0;
const HAZARD_AGE: u64 = 24;
const CHECK_SEED: u64 = 0x5eed;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn scenario_text(name: &str) -> String {
    let path = format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn load(name: &str) -> Scenario {
    parse_scenario(&scenario_text(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

fn built(name: &str) -> BuiltScenario {
    build_scenario(&load(name)).unwrap()
}

fn switchable(name: &str, on: bool) -> AtomicComponentDef {
    let mut b = AtomicBuilder::new(name);
    let off = b.location("off");
    let l = b.location("on");
    let p = b.port("p", &[]);
    b.transition(TransitionDef::new(l, p, l));
    b.initial(if on { l } else { off });
    b.build().unwrap()
}

fn port(component: usize) -> PortRef {
    PortRef {
        component,
        port: PortId(0),
    }
}

fn brute_force(n: usize, triggers: &[bool], enabled: &[bool]) -> Vec<PortSet> {
    let mut out = Vec::new();
    for mask in 1u64..(1 << n) {
        let member = |i: usize| mask >> i & 1 == 1;
        if (0..n).any(|i| member(i) && !enabled[i]) {
            continue;
        }
        let full = (0..n).all(member);
        if full || (0..n).any(|i| member(i) && triggers[i]) {
            out.push(PortSet(mask));
        }
    }
    out
}

fn c1_enumeration() -> Outcome {
    let mut rng = SimRng::new(CHECK_SEED);
    let mut mismatches = 0;
    let mut compared = 0;
    for _ in 0..CONNECTOR_CASES {
        let n = 1 + rng.below(MAX_PORTS);
        let triggers: Vec<bool> = (0..n).map(|_| rng.below(2) == 1).collect();
        let enabled: Vec<bool> = (0..n).map(|_| rng.below(4) != 0).collect();
        let mut b = SystemBuilder::new();
        let ports: Vec<ConnectorPort> = (0..n)
            .map(|i| ConnectorPort {
                port: port(b.add_component(switchable(&format!("c{i}"), enabled[i]))),
                kind: if triggers[i] {
                    PortKind::Trigger
                } else {
                    PortKind::Synchron
                },
            })
            .collect();
        let conn = ConnectorDef::new("k", ports);
        let all = vec![true; n];
        if conn.feasible_interactions() != brute_force(n, &triggers, &all) {
            mismatches += 1;
        }
        b.add_connector(conn);
        let sys = b.build().unwrap();
        let got: Vec<PortSet> = enabled_interactions(&sys, &sys.initial_state())
            .unwrap()
            .into_iter()
            .map(|a| a.ports)
            .collect();
        if got != brute_force(n, &triggers, &enabled) {
            mismatches += 1;
        }
        compared += 2;
    }
    if mismatches == 0 {
        Ok(format!(
            "{CONNECTOR_CASES} connectors, {compared} enumerations, 0 mismatches"
        ))
    } else {
        Err(format!("{mismatches} of {compared} enumerations differ"))
    }
}

fn c2_rendezvous_broadcast() -> Outcome {
    let mut b = SystemBuilder::new();
    let s: Vec<PortRef> = (0..4)
        .map(|i| port(b.add_component(switchable(&format!("s{}", i + 1), true))))
        .collect();
    let rdv = ConnectorDef::rendezvous("rendezvous", &s);
    let bc = ConnectorDef::broadcast("broadcast", s[0], &s[1..]);
    b.add_connector(rdv.clone());
    b.add_connector(bc.clone());
    let sys = b.build().unwrap();
    let enabled = enabled_interactions(&sys, &sys.initial_state()).unwrap();
    let count = |c: usize| enabled.iter().filter(|a| a.connector == c).count();
    let all_have_s1 = bc.feasible_interactions().iter().all(|p| p.contains(0))
        && enabled
            .iter()
            .filter(|a| a.connector == 1)
            .all(|a| a.ports.contains(0));
    let r = (rdv.feasible_interactions().len(), count(0));
    let bcn = (bc.feasible_interactions().len(), count(1));
    let detail = format!(
        "rendezvous {} broadcast {} all contain s1: {all_have_s1}",
        r.0, bcn.0
    );
    if r == (1, 1) && bcn == (8, 8) && all_have_s1 {
        Ok(detail)
    } else {
        Err(format!("{detail} (enabled {} / {})", r.1, bcn.1))
    }
}

fn c3_priority() -> Outcome {
    let mut rng = SimRng::new(CHECK_SEED);
    let mut mismatches = 0;
    let mut disabled_dominators = 0;
    for _ in 0..PRIORITY_CASES {
        let m = 2 + rng.below(7);
        let ia: Vec<Interaction> = (0..m)
            .map(|i| Interaction {
                connector: i,
                ports: PortSet(1 + rng.below(3) as u64),
            })
            .collect();
        let mut rank: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            rank.swap(i, rng.below(i + 1));
        }
        let mut less = vec![vec![false; m]; m];
        let mut pairs = Vec::new();
        for a in 0..m {
            for b in 0..m {
                if rank[a] < rank[b] && rng.below(10) < 3 {
                    less[a][b] = true;
                    pairs.push((ia[a], ia[b]));
                }
            }
        }
        for k in 0..m {
            for a in 0..m {
                for b in 0..m {
                    less[a][b] |= less[a][k] && less[k][b];
                }
            }
        }
        let model = PriorityModel::new(pairs).unwrap();
        let on: Vec<bool> = (0..m).map(|_| rng.below(3) != 0).collect();
        let enabled: Vec<Interaction> = (0..m).filter(|&i| on[i]).map(|i| ia[i]).collect();
        let expected: Vec<Interaction> = (0..m)
            .filter(|&a| on[a] && !(0..m).any(|b| on[b] && less[a][b]))
            .map(|a| ia[a])
            .collect();
        disabled_dominators += (0..m)
            .filter(|&a| on[a] && (0..m).any(|b| !on[b] && less[a][b]))
            .filter(|&a| expected.contains(&ia[a]))
            .count();
        if apply_priority(&enabled, &model) != expected {
            mismatches += 1;
        }
    }
    if mismatches == 0 && disabled_dominators > 0 {
        Ok(format!(
            "{PRIORITY_CASES} cases, 0 mismatches, {disabled_dominators} survivors above only disabled dominators"
        ))
    } else {
        Err(format!(
            "{mismatches} mismatches, {disabled_dominators} disabled-dominator cases"
        ))
    }
}

fn entry(
    source: u16,
    port_id: u32,
    period: u32,
    phase: u32,
    route: &[u16],
    target: u16,
) -> ScheduleEntry {
    ScheduleEntry {
        source,
        port_id,
        period,
        phase,
        route: route.to_vec(),
        target,
    }
}

fn run_fabric(
    topo: &Topology,
    entries: &[ScheduleEntry],
    fill: usize,
    ticks: u64,
) -> (Vec<bipsim::TraceEvent>, usize) {
    let mut fabric = build_ttsoc(topo, entries).unwrap();
    for e in entries {
        let payloads: Vec<i64> = (0..fill as i64)
            .map(|k| 1000 * i64::from(e.port_id) + k)
            .collect();
        prefill(&mut fabric, e.source, e.port_id, &payloads).unwrap();
    }
    let layout = fabric.layout.clone();
    let sys = fabric.builder.build().unwrap();
    let mut sim = Simulation::new(&sys, CHECK_SEED);
    let mut monitor = FabricMonitor::new(usize::MAX);
    let mut events = Vec::new();
    while sim.ticks() <= ticks {
        let Some(e) = sim.step().unwrap() else { break };
        monitor.observe(&layout, sim.state(), sim.ticks());
        events.push(e);
    }
    (events, monitor.contentions().count())
}

fn c4_fabric_timing() -> Outcome {
    let mut problems = Vec::new();
    let mut checked = 0;
    type Case = (&'static str, Topology, Vec<(ScheduleEntry, i64)>);
    let cases: [Case; 2] = [
        (
            "minimal",
            Topology::minimal(),
            vec![(entry(0, 1, 2, 0, &[0], 1), 1)],
        ),
        (
            "reference",
            Topology::reference(),
            vec![
                (entry(0, 1, 4, 0, &[1], 3), 1),
                (entry(1, 2, 4, 1, &[0, 1], 0), 2),
                (entry(1, 3, 4, 2, &[0, 1, 3], 4), 3),
            ],
        ),
    ];
    for (name, topo, list) in &cases {
        let entries: Vec<ScheduleEntry> = list.iter().map(|(e, _)| e.clone()).collect();
        let (events, _) = run_fabric(topo, &entries, 3, 40);
        let check = deliveries(&events);
        for (e, k) in list {
            let got: Vec<_> = check
                .deliveries
                .iter()
                .filter(|d| d.port_id == i64::from(e.port_id))
                .collect();
            if got.len() != 3 {
                problems.push(format!("{name} k={k}: {} deliveries", got.len()));
            }
            for d in got {
                checked += 1;
                if d.delivered != d.injected || d.subtick > *k {
                    problems.push(format!(
                        "{name} k={k}: injected {} delivered {} at t{}",
                        d.injected, d.delivered, d.subtick
                    ));
                }
            }
        }
        if !check.lost.is_empty() || !check.unmatched.is_empty() {
            problems.push(format!(
                "{name}: lost {:?} unmatched {:?}",
                check.lost, check.unmatched
            ));
        }
    }
    let sorting = run_scenario(&built("sorting.scn"), CHECK_SEED, 10_000);
    let check = deliveries(&sorting);
    let late = check
        .deliveries
        .iter()
        .filter(|d| d.delivered != d.injected || d.subtick < 1 || d.subtick > 3)
        .count();
    if late > 0 {
        problems.push(format!(
            "sorting: {late} deliveries outside their injection tick"
        ));
    }
    let mut long = load("sorting.scn");
    long.schedule[4].route = vec![1, 0, 2, 3];
    long.schedule[4].target = 4;
    let rejected =
        validate_routes(&long).is_err_and(|e| e.iter().any(|e| e.message.contains("4 switches")));
    if !rejected {
        problems.push("length-4 route accepted".into());
    }
    if problems.is_empty() {
        Ok(format!(
            "{checked} fabric and {} scenario deliveries by t_k, length-4 route rejected",
            check.deliveries.len()
        ))
    } else {
        Err(problems.join("; "))
    }
}

fn run_scenario(b: &BuiltScenario, seed: u64, steps: u64) -> Vec<bipsim::TraceEvent> {
    simulate(b, seed, steps, |_| {}).unwrap().trace.events
}

fn c5_exclusivity() -> Outcome {
    let b = built("sorting.scn");
    let out = simulate(&b, CHECK_SEED, 30 * EXCLUSIVITY_TICKS, |_| {}).unwrap();
    if out.ticks < EXCLUSIVITY_TICKS {
        return Err(format!("run reached only {} ticks", out.ticks));
    }
    let events: Vec<_> = out
        .trace
        .events
        .into_iter()
        .filter(|e| e.tick <= EXCLUSIVITY_TICKS)
        .collect();
    let violations = switch_exclusivity(&events);
    let mut bad = load("sorting.scn");
    bad.schedule[1].phase = bad.schedule[0].phase;
    let static_conflicts = validate_schedule(&bad).unwrap().len();
    let colliding = build_scenario(&bad).unwrap();
    let flagged = simulate(&colliding, CHECK_SEED, 10_000, |_| {})
        .unwrap()
        .contentions;
    let detail = format!(
        "{EXCLUSIVITY_TICKS} ticks: {} exclusivity violations, {} contentions; colliding schedule: {static_conflicts} static conflicts, {} runtime contentions",
        violations.len(),
        out.contentions.len(),
        flagged.len()
    );
    if violations.is_empty()
        && out.contentions.is_empty()
        && static_conflicts > 0
        && !flagged.is_empty()
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c6_parallel() -> Outcome {
    let b = built("parallel.scn");
    let clean = validate_schedule(&load("parallel.scn")).unwrap().is_empty();
    let events = run_scenario(&b, b.run.seed, b.run.max_steps);
    let ticks = parallel_ticks(
        &deliveries(&events),
        &[("T1", "T4"), ("T5", "T6"), ("T2", "T3")],
    );
    match ticks.first() {
        Some(t) if clean => Ok(format!(
            "T1->T4, T5->T6, T2->T3 all delivered in tick {t} ({} such ticks)",
            ticks.len()
        )),
        _ => Err(format!("clean schedule {clean}, parallel ticks {ticks:?}")),
    }
}

fn render(b: &BuiltScenario, seed: u64) -> String {
    let out = simulate(b, seed, b.run.max_steps, |_| {}).unwrap();
    out.trace.render(&trace_header(b, seed, b.run.max_steps))
}

fn c7_determinism() -> Outcome {
    let b = built("sorting.scn");
    let mut problems = Vec::new();
    for s in 0..DETERMINISM_PAIRS {
        let a = render(&b, s);
        if a != render(&b, s) {
            problems.push(format!("seed {s} not reproducible"));
        }
        if a == render(&b, s + DETERMINISM_PAIRS) {
            problems.push(format!("seeds {s} and {} agree", s + DETERMINISM_PAIRS));
        }
    }
    if problems.is_empty() {
        Ok(format!("{DETERMINISM_PAIRS} identical pairs byte-equal, {DETERMINISM_PAIRS} differing pairs differ"))
    } else {
        Err(problems.join("; "))
    }
}

fn random_entries(topo: &Topology, rng: &mut SimRng) -> Vec<ScheduleEntry> {
    const PERIODS: [u32; 6] = [1, 2, 3, 4, 8, 16];
    let n = 2 + rng.below(3);
    let mut sources: Vec<u16> = (0..topo.tiss.len() as u16).collect();
    let mut out = Vec::new();
    while out.len() < n && !sources.is_empty() {
        let source = sources.swap_remove(rng.below(sources.len()));
        for _ in 0..20 {
            let len = 1 + rng.below(3);
            let mut route = vec![topo.attach[source as usize]];
            while route.len() < len {
                let next: Vec<u16> = topo
                    .neighbors(*route.last().unwrap())
                    .into_iter()
                    .filter(|s| !route.contains(s))
                    .collect();
                if next.is_empty() {
                    break;
                }
                route.push(next[rng.below(next.len())]);
            }
            let targets: Vec<u16> = topo
                .attached_tiss(*route.last().unwrap())
                .into_iter()
                .filter(|&t| t != source)
                .collect();
            if targets.is_empty() {
                continue;
            }
            let period = PERIODS[rng.below(PERIODS.len())];
            out.push(entry(
                source,
                out.len() as u32 + 1,
                period,
                rng.below(period as usize) as u32,
                &route,
                targets[rng.below(targets.len())],
            ));
            break;
        }
    }
    out
}

fn c8_validator() -> Outcome {
    let topo = Topology::reference();
    let mut rng = SimRng::new(CHECK_SEED);
    let mut mismatches = Vec::new();
    let mut colliding = 0;
    for case in 0..VALIDATOR_CASES {
        let entries = random_entries(&topo, &mut rng);
        let labels: Vec<String> = entries.iter().map(|e| e.port_id.to_string()).collect();
        let conflicts =
            schedule_conflicts(&topo, &entries, &labels, VALIDATOR_HYPERPERIOD).unwrap();
        let h = bipsim::scenario::hyperperiod(entries.iter().map(|e| e.period)).unwrap();
        let fill = (h / u64::from(entries.iter().map(|e| e.period).min().unwrap())) as usize + 1;
        let (events, contentions) = run_fabric(&topo, &entries, fill, h + 1);
        let collided = contentions > 0 || !switch_exclusivity(&events).is_empty();
        colliding += usize::from(collided);
        if collided != !conflicts.is_empty() {
            mismatches.push(format!(
                "case {case}: sim {collided} validator {}",
                conflicts.len()
            ));
        }
    }
    if mismatches.is_empty() {
        Ok(format!(
            "{VALIDATOR_CASES} schedules, {colliding} colliding, 0 mismatches"
        ))
    } else {
        Err(format!(
            "{} mismatches: {}",
            mismatches.len(),
            mismatches.join("; ")
        ))
    }
}

fn c9_hazard() -> Outcome {
    let b = built("sorting.scn");
    if b.run.max_age != Some(REFERENCE_MAX_AGE) {
        return Err(format!(
            "scenario max_age {:?}, expected {REFERENCE_MAX_AGE}",
            b.run.max_age
        ));
    }
    let limits = Limits {
        max_age: Some(REFERENCE_MAX_AGE),
        max_latency: None,
    };
    let rows = sweep(&b, 0..SWEEP_SEEDS, b.run.max_steps, limits).unwrap();
    let age = |r: &bipsim::analysis::SweepRow| r.report.max_age().unwrap_or(0);
    let witnesses: Vec<u64> = rows
        .iter()
        .filter(|r| age(r) > REFERENCE_MAX_AGE)
        .map(|r| r.seed)
        .collect();
    let pinned = age(&rows[HAZARD_SEED as usize]);
    let p = built("sorting-priority.scn");
    let fixed = sweep(&p, HAZARD_SEED..HAZARD_SEED + 1, p.run.max_steps, limits).unwrap();
    let fixed_age = age(&fixed[0]);
    let detail = format!(
        "{} of {SWEEP_SEEDS} seeds exceed max_age {REFERENCE_MAX_AGE}; seed {HAZARD_SEED}: {pinned} without priority, {fixed_age} with",
        witnesses.len()
    );
    if !witnesses.is_empty() && pinned == HAZARD_AGE && fixed_age <= pinned {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c10_time_slices() -> Outcome {
    let mut flushes = 0;
    let mut problems = Vec::new();
    for name in ["sorting.scn", "sorting-priority.scn"] {
        let b = built(name);
        let slices: BTreeMap<String, Vec<u32>> = b
            .apps
            .iter()
            .map(|a| (a.name.clone(), a.slices.clone()))
            .collect();
        for seed in 0..SWEEP_SEEDS {
            let events = run_scenario(&b, seed, b.run.max_steps);
            flushes += events
                .iter()
                .filter(|e| e.connector.starts_with("flush_"))
                .count();
            match time_slice_violations(&events, &slices) {
                Ok(v) if v.is_empty() => {}
                Ok(v) => problems.push(format!("{name} seed {seed}: {v:?}")),
                Err(e) => problems.push(format!("{name} seed {seed}: {e}")),
            }
        }
    }
    if problems.is_empty() && flushes > 0 {
        Ok(format!(
            "{flushes} flushes over {} traces, none early",
            2 * SWEEP_SEEDS
        ))
    } else {
        Err(format!("{flushes} flushes; {}", problems.join("; ")))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("interaction enumeration", c1_enumeration),
        ("rendezvous and broadcast", c2_rendezvous_broadcast),
        ("priority filter", c3_priority),
        ("fabric timing", c4_fabric_timing),
        ("switch exclusivity", c5_exclusivity),
        ("parallel slots", c6_parallel),
        ("determinism", c7_determinism),
        ("validator completeness", c8_validator),
        ("stale-data hazard", c9_hazard),
        ("time-slice honesty", c10_time_slices),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (status, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{status} criterion {:>2} {name}: {detail} [{:.1}s]",
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
