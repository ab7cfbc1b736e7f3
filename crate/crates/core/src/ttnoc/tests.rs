use super::*;
use crate::system::Simulation;
use crate::trace::TraceEvent;

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

fn simulate(fabric: Fabric, steps: u64) -> (Vec<TraceEvent>, FabricMonitor, FabricLayout) {
    let layout = fabric.layout.clone();
    let sys = fabric.builder.build().unwrap();
    let mut sim = Simulation::new(&sys, 7);
    let mut monitor = FabricMonitor::new(16);
    let mut events = Vec::new();
    for _ in 0..steps {
        match sim.step().unwrap() {
            Some(e) => events.push(e),
            None => break,
        }
        monitor.observe(&layout, sim.state(), sim.ticks());
    }
    (events, monitor, layout)
}

#[test]
fn minimal_fabric_delivers_in_slot_order() {
    let topo = Topology::minimal();
    let mut fabric = build_ttsoc(&topo, &[entry(0, 7, 2, 0, &[0], 1)]).unwrap();
    prefill(&mut fabric, 0, 7, &[10, 20, 30]).unwrap();
    let (events, monitor, _) = simulate(fabric, 400);
    let delivered: Vec<(u64, i64)> = events
        .iter()
        .filter(|e| e.connector == "deliver_S1_T2")
        .map(|e| (e.tick, e.value("T2.link").unwrap()))
        .collect();
    assert_eq!(delivered, vec![(2, 10), (4, 20), (6, 30)]);
    let injected: Vec<u64> = events
        .iter()
        .filter(|e| e.connector == "inject_T1_S1")
        .map(|e| e.tick)
        .collect();
    assert_eq!(injected, vec![2, 4, 6]);
    assert_eq!(monitor.contentions().count(), 0);
}

#[test]
fn subticks_follow_each_tick_in_order() {
    let (events, _, _) = simulate(build_ttsoc(&Topology::minimal(), &[]).unwrap(), 40);
    let names: Vec<&str> = events
        .iter()
        .filter(|e| ["tick", "t1", "t2", "t3"].contains(&e.connector.as_str()))
        .map(|e| e.connector.as_str())
        .collect();
    for chunk in names.chunks(4).filter(|c| c.len() == 4) {
        assert_eq!(chunk, ["tick", "t1", "t2", "t3"]);
    }
    assert!(events.iter().any(|e| e.connector == "idle_T1"));
}

#[test]
fn three_hop_route_arrives_within_the_tick() {
    let topo = Topology::reference();
    // T2 at S1 to T5 at S4 through S2
    let e = entry(1, 3, 4, 1, &[0, 1, 3], 4);
    let mut fabric = build_ttsoc(&topo, &[e]).unwrap();
    prefill(&mut fabric, 1, 3, &[99]).unwrap();
    let (events, monitor, _) = simulate(fabric, 2000);
    let path: Vec<(&str, u64)> = events
        .iter()
        .filter(|e| {
            e.connector.starts_with("inject")
                || e.connector.starts_with("hop")
                || e.connector.starts_with("deliver")
        })
        .map(|e| (e.connector.as_str(), e.tick))
        .collect();
    assert_eq!(
        path,
        vec![
            ("inject_T2_S1", 1),
            ("hop_S1_S2", 1),
            ("hop_S2_S4", 1),
            ("deliver_S4_T5", 1)
        ]
    );
    let (phase_at_delivery, _) = events
        .iter()
        .find(|e| e.connector == "deliver_S4_T5")
        .map(|e| (e.value("S4.phase").unwrap(), e))
        .unwrap();
    assert_eq!(phase_at_delivery, 3);
    assert_eq!(monitor.contentions().count(), 0);
}

#[test]
fn shared_switch_in_one_tick_is_contention() {
    let topo = Topology::reference();
    // both flows need S1 at tick 1
    let a = entry(1, 3, 4, 1, &[0, 2], 2);
    let b = entry(0, 4, 4, 1, &[1, 0], 1);
    let mut fabric = build_ttsoc(&topo, &[a, b]).unwrap();
    prefill(&mut fabric, 1, 3, &[1]).unwrap();
    prefill(&mut fabric, 0, 4, &[2]).unwrap();
    let (_, monitor, _) = simulate(fabric, 2000);
    assert!(monitor.contentions().any(|c| c.tick == 1));
}

#[test]
fn unknown_host_port_is_a_config_error() {
    let topo = Topology::minimal();
    let fabric = build_ttsoc(&topo, &[entry(0, 7, 2, 0, &[0], 1)]).unwrap();
    let (def, h) = make_tiss("T9", &fabric.layout.entries).unwrap();
    let st = def.initial_state();
    let c2t = def.port_id("core2tiss_io").unwrap();
    let t = def.first_enabled_on(&st, c2t).unwrap().unwrap();
    let err = def
        .fire(
            &st,
            t,
            &[(
                h.from_host,
                crate::value::Value::msg(crate::value::Message::host(8, 1)),
            )],
        )
        .unwrap_err();
    assert!(err.to_string().contains("port 8"), "{err}");
}

#[test]
fn rejects_inconsistent_entries() {
    let topo = Topology::minimal();
    assert!(build_ttsoc(&topo, &[entry(0, 1, 4, 4, &[0], 1)]).is_err());
    assert!(build_ttsoc(&topo, &[entry(0, 1, 4, 0, &[0], 5)]).is_err());
    let mut bad = topo.clone();
    bad.attach = vec![0, 3];
    assert!(build_ttsoc(&bad, &[]).is_err());
}
