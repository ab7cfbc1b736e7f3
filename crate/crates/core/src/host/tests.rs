use super::*;
use crate::atomic::AtomicComponentDef;
use crate::connector::{ConnectorDef, Transfer};
use crate::system::{Simulation, SystemBuilder};
use crate::trace::TraceEvent;
use crate::ttnoc::make_global_timer;
use crate::value::{Message, Stamped, Value};

fn fire_port(
    def: &AtomicComponentDef,
    st: &mut crate::atomic::ComponentState,
    port: &str,
    data: &[(&str, Value)],
) {
    let p = def.port_id(port).unwrap();
    let t = def.first_enabled_on(st, p).unwrap().expect("port enabled");
    let values: Vec<_> = def
        .port(p)
        .support
        .iter()
        .map(|&var| {
            let given = data.iter().find(|(n, _)| def.var_id(n) == Some(var));
            (
                var,
                given.map_or_else(|| st.valuation.get(var).clone(), |(_, v)| v.clone()),
            )
        })
        .collect();
    *st = def.fire(st, t, &values).unwrap();
}

fn stamped(pid: u32, value: i32, tick: u32) -> Value {
    Value::msg(Message::host(pid, Stamped::new(value, tick).pack()))
}

fn voted(inputs: &[i32]) -> i32 {
    let pids: Vec<u32> = (1..=inputs.len() as u32).collect();
    let (def, _) = make_voting_service("v", &pids, 9).unwrap();
    let mut st = def.initial_state();
    for (i, &x) in inputs.iter().enumerate() {
        fire_port(
            &def,
            &mut st,
            &format!("in_{}", i + 1),
            &[("input", stamped(i as u32 + 1, x, 5 + i as u32))],
        );
    }
    let out = st
        .valuation
        .msg(def.var_id("out").unwrap())
        .unwrap()
        .unwrap()
        .clone();
    assert_eq!(out.port_id, 9);
    let s = Stamped::unpack(out.payload);
    assert_eq!(s.tick, 5, "oldest stamp");
    s.value
}

#[test]
fn voter_means() {
    assert_eq!(voted(&[10, 12, 14]), 12);
    assert_eq!(voted(&[7]), 7);
    assert_eq!(voted(&[3, 4]), 3);
    assert_eq!(voted(&[-3, -4]), -3);
}

#[test]
fn voter_blocks_second_value_in_round() {
    let (def, _) = make_voting_service("v", &[1, 2], 9).unwrap();
    let mut st = def.initial_state();
    fire_port(&def, &mut st, "in_1", &[("input", stamped(1, 1, 0))]);
    let p = def.port_id("in_1").unwrap();
    assert!(def.first_enabled_on(&st, p).unwrap().is_none());
    fire_port(&def, &mut st, "in_2", &[("input", stamped(2, 3, 0))]);
    let emit = def.port_id("emit").unwrap();
    assert!(def.first_enabled_on(&st, emit).unwrap().is_some());
    assert!(def
        .first_enabled_on(&st, def.port_id("in_2").unwrap())
        .unwrap()
        .is_none());
}

/// Timer broadcasting ticks to `listeners`, plus unary connectors on the
/// listed extra ports.
fn with_timer(components: Vec<AtomicComponentDef>, unary: &[(usize, &str)]) -> crate::SystemDef {
    let mut b = SystemBuilder::new();
    let (timer, _) = make_global_timer("timer").unwrap();
    let t = b.add_component(timer);
    let idx: Vec<usize> = components.into_iter().map(|c| b.add_component(c)).collect();
    let receivers: Vec<_> = idx
        .iter()
        .filter_map(|&i| b.port_ref(i, "tick").ok())
        .collect();
    let tick = ConnectorDef::broadcast("tick", b.port_ref(t, "tick").unwrap(), &receivers);
    let tc = b.add_connector(tick);
    b.set_tick_connector(tc);
    for &(c, p) in unary {
        let r = b.port_ref(idx[c], p).unwrap();
        b.add_connector(ConnectorDef::rendezvous(format!("{p}_{c}"), &[r]));
    }
    b.build().unwrap()
}

fn run(sys: &crate::SystemDef, steps: u64, seed: u64) -> Vec<TraceEvent> {
    Simulation::new(sys, seed).run(steps).unwrap().events
}

#[test]
fn scripted_sensor_samples_on_period() {
    let (s, _) = make_sensor("s", 1, Stimulus::Script(vec![1, 5, 9]), 2).unwrap();
    let sys = with_timer(vec![s], &[(0, "send")]);
    let samples: Vec<(i32, u32)> = run(&sys, 200, 3)
        .iter()
        .filter(|e| e.connector == "send_0")
        .map(|e| Stamped::unpack(e.value("s.out").unwrap()))
        .map(|s| (s.value, s.tick))
        .collect();
    let mut distinct = samples.clone();
    distinct.dedup();
    assert_eq!(distinct.len(), samples.len(), "each sample sent once");
    let firsts: Vec<_> = samples.iter().take(4).copied().collect();
    for (value, tick) in &firsts {
        assert_eq!(tick % 2, 0);
        let expect = [1, 5, 9][(*tick as usize / 2).min(2)];
        assert_eq!(*value, expect);
    }
}

#[test]
fn random_stimulus_replays() {
    let a = Stimulus::Random {
        seed: 11,
        lo: 0,
        hi: 99,
    };
    let xs: Vec<i32> = (0..50).map(|i| a.value(i)).collect();
    let ys: Vec<i32> = (0..50).map(|i| a.value(i)).collect();
    assert_eq!(xs, ys);
    assert!(xs.iter().all(|x| (0..=99).contains(x)));
    assert_eq!(Stimulus::Script(vec![2, 4]).value(7), 4);
}

fn machine(
    steps: &[(&str, Compute, u32)],
    branches: &[(&str, &str, Vec<Condition>)],
) -> StepMachineDef {
    StepMachineDef {
        steps: steps
            .iter()
            .map(|(n, c, s)| Step {
                name: n.to_string(),
                compute: c.clone(),
                time_slice: *s,
            })
            .collect(),
        transitions: branches
            .iter()
            .map(|(f, t, w)| StepTransition {
                from: f.to_string(),
                to: t.to_string(),
                when: w.clone(),
            })
            .collect(),
    }
}

#[test]
fn two_step_loop_alternates_and_honours_slices() {
    let def = machine(
        &[
            (
                "A",
                Compute::Send {
                    port: 1,
                    value: Operand::Const(4),
                },
                3,
            ),
            ("B", Compute::Noop, 1),
        ],
        &[("A", "B", vec![]), ("B", "A", vec![])],
    );
    let (app, _, _) = make_application("app", &def).unwrap();
    let sys = with_timer(
        vec![app],
        &[(0, "compute"), (0, "flush"), (0, "branch"), (0, "collect")],
    );
    let events = run(&sys, 500, 1);
    let computes: Vec<i64> = events
        .iter()
        .filter(|e| e.connector == "compute_0")
        .map(|e| e.value("app.step").unwrap())
        .collect();
    assert!(computes.len() > 4);
    for (i, s) in computes.iter().enumerate() {
        assert_eq!(*s, (i % 2) as i64);
    }
    let mut started = None;
    for e in &events {
        match e.connector.as_str() {
            "compute_0" => started = Some((e.tick, e.value("app.step").unwrap())),
            "flush_0" => {
                let (t0, s) = started.take().unwrap();
                let slice = if s == 0 { 3 } else { 1 };
                assert!(
                    e.tick - t0 >= slice,
                    "flush at {} after compute at {t0}",
                    e.tick
                );
            }
            _ => {}
        }
    }
}

#[test]
fn branch_follows_received_value() {
    let def = machine(
        &[
            (
                "Read",
                Compute::Receive {
                    port: 4,
                    reg: "h".into(),
                },
                1,
            ),
            ("Eject", Compute::Noop, 1),
            ("Pass", Compute::Noop, 1),
        ],
        &[
            (
                "Read",
                "Eject",
                vec![
                    Condition {
                        reg: "have".into(),
                        op: CmpOp::Eq,
                        value: 1,
                    },
                    Condition {
                        reg: "h".into(),
                        op: CmpOp::Ge,
                        value: 50,
                    },
                ],
            ),
            (
                "Read",
                "Pass",
                vec![Condition {
                    reg: "have".into(),
                    op: CmpOp::Eq,
                    value: 1,
                }],
            ),
            ("Read", "Read", vec![]),
            ("Eject", "Read", vec![]),
            ("Pass", "Read", vec![]),
        ],
    );
    for (value, expect) in [(70, "Eject"), (20, "Pass")] {
        let (app, ends, _) = make_application("app", &def).unwrap();
        assert_eq!(ends.receive, vec![(4, "deliver_4".to_string())]);
        let mut st = app.initial_state();
        fire_port(
            &app,
            &mut st,
            "deliver_4",
            &[("delivered", stamped(4, value, 0))],
        );
        fire_port(&app, &mut st, "compute", &[]);
        fire_port(&app, &mut st, "tick", &[]);
        fire_port(&app, &mut st, "flush", &[]);
        fire_port(&app, &mut st, "branch", &[]);
        assert_eq!(app.location_name(st.location), expect);
    }
}

#[test]
fn non_exhaustive_branches_fail_to_build() {
    let def = machine(
        &[("A", Compute::Noop, 1)],
        &[(
            "A",
            "A",
            vec![Condition {
                reg: "x".into(),
                op: CmpOp::Lt,
                value: 0,
            }],
        )],
    );
    let err = make_application("app", &def).unwrap_err();
    assert!(err.to_string().contains("not exhaustive"), "{err}");
    let zero = machine(&[("A", Compute::Noop, 0)], &[("A", "A", vec![])]);
    assert!(make_application("app", &zero).is_err());
}

#[test]
fn comm_routes_by_port_and_keeps_fifo() {
    let comm = make_comm_service("comm", &[4]).unwrap();
    let mut st = comm.initial_state();
    for x in [1, 2, 3] {
        fire_port(
            &comm,
            &mut st,
            "tiss2core",
            &[("from_tiss", stamped(4, x, 0))],
        );
    }
    let head = comm.var_id("head_4").unwrap();
    let mut got = Vec::new();
    for _ in 0..3 {
        let m = st.valuation.msg(head).unwrap().unwrap().clone();
        got.push(Stamped::unpack(m.payload).value);
        fire_port(&comm, &mut st, "to_4", &[]);
    }
    assert_eq!(got, vec![1, 2, 3]);
    assert!(comm
        .first_enabled_on(&st, comm.port_id("to_4").unwrap())
        .unwrap()
        .is_none());
    assert!(comm
        .first_enabled_on(&st, comm.port_id("core2tiss_io").unwrap())
        .unwrap()
        .is_none());
    let p = comm.port_id("tiss2core").unwrap();
    let t = comm.first_enabled_on(&st, p).unwrap().unwrap();
    let bad = comm.fire(
        &st,
        t,
        &[(comm.var_id("from_tiss").unwrap(), stamped(5, 0, 0))],
    );
    assert!(bad.is_err());
}

#[test]
fn comm_data_transfer_into_client() {
    let comm = make_comm_service("comm", &[2]).unwrap();
    let (act, ends) = make_actuator("pusher", 2).unwrap();
    let mut b = SystemBuilder::new();
    let c = b.add_component(comm);
    let a = b.add_component(act);
    let from = b.port_ref(c, "to_2").unwrap();
    let to = b.port_ref(a, &ends.receive[0].1).unwrap();
    b.add_connector(
        ConnectorDef::rendezvous("recv", &[from, to]).with_transfer(Transfer::copy((0, 0), (1, 0))),
    );
    let q: std::collections::VecDeque<_> = [stamped(2, 1, 17)]
        .into_iter()
        .map(|v| v.as_msg().unwrap().unwrap().clone())
        .collect();
    let qv = b.component(c).var_id("down_2").unwrap();
    let hv = b.component(c).var_id("head_2").unwrap();
    b.set_initial(c, qv, Value::Queue(std::sync::Arc::new(q.clone())));
    b.set_initial(c, hv, Value::Msg(q.front().cloned()));
    let sys = b.build().unwrap();
    let events = run(&sys, 10, 0);
    assert_eq!(events.len(), 1);
    let r = StatusRecord::from_event(&events[0], "pusher").unwrap();
    assert_eq!(r.value, 1);
}

#[test]
fn recorder_writes_sorted_lines_and_empty_files() {
    let dir = tempfile::tempdir().unwrap();
    let specs = vec![
        ActuatorSpec {
            id: "pusher1".into(),
            sink: "shared.status".into(),
        },
        ActuatorSpec {
            id: "gate".into(),
            sink: "shared.status".into(),
        },
        ActuatorSpec {
            id: "idle".into(),
            sink: "idle.status".into(),
        },
    ];
    let mut rec = ActuatorRecorder::create(dir.path(), &specs).unwrap();
    let ev = |tick, who: &str, v| TraceEvent {
        step: 0,
        tick,
        connector: "recv".into(),
        ports: vec![format!("comm.to_5"), format!("{who}.recv")],
        data: vec![(format!("{who}.command"), Stamped::new(v, 3).pack())],
    };
    rec.record(&ev(17, "pusher1", 1));
    rec.record(&ev(17, "gate", 0));
    rec.record(&ev(9, "pusher1", 2));
    rec.finish().unwrap();
    let shared = std::fs::read_to_string(dir.path().join("shared.status")).unwrap();
    assert_eq!(shared, "9 pusher1 2\n17 gate 0\n17 pusher1 1\n");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("idle.status")).unwrap(),
        ""
    );
    let missing = dir.path().join("no/such/dir");
    assert!(ActuatorRecorder::create(&missing, &specs).is_err());
}
