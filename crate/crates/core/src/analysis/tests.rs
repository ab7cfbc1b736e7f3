use std::collections::BTreeMap;

use super::*;
use crate::trace::parse_event;

fn ev(line: &str) -> TraceEvent {
    parse_event(line).unwrap()
}

fn sample(step: u64, tick: u64, stamp: u32) -> TraceEvent {
    let v = Stamped::new(7, stamp).pack();
    ev(&format!(
        "step={step} tick={tick} conn=deliver_ctl_4 ports=ctl.deliver_4 data=ctl.sample={v},ctl.sample.port=4"
    ))
}

#[test]
fn age_at_limit_is_not_a_violation() {
    let events = [sample(1, 15, 10), sample(2, 16, 10)];
    let r = analyze_events(
        &events,
        Limits {
            max_age: Some(5),
            max_latency: None,
        },
        None,
        None,
    )
    .unwrap();
    assert_eq!(r.ages.iter().map(|o| o.value).collect::<Vec<_>>(), [5, 6]);
    assert_eq!(r.violations.len(), 1);
    assert_eq!(r.violations[0].tick, 16);
}

#[test]
fn synthetic_old_sample_is_reported() {
    let text = format!("# seed=3\n# max_age=5\n{}\n", sample(4, 12, 2));
    let r = analyze_text(&text, Limits::default()).unwrap();
    assert_eq!(r.seed, Some(3));
    assert_eq!(r.max_age(), Some(10));
    let v = &r.violations;
    assert_eq!(v.len(), 1);
    assert_eq!(
        (v[0].metric, v[0].tick, v[0].value, v[0].limit),
        (Metric::Age, 12, 10, 5)
    );
    assert_eq!(v[0].channel, "ctl.sample@4");
    assert!(r.render_table().contains("VIOLATION age tick 12"));
    assert!(r.render_kv().contains("violations=1\n"));
}

#[test]
fn explicit_limit_overrides_header() {
    let text = format!("# max_age=5\n{}\n", sample(4, 12, 2));
    let r = analyze_text(
        &text,
        Limits {
            max_age: Some(10),
            max_latency: None,
        },
    )
    .unwrap();
    assert!(r.is_clean());
}

#[test]
fn stamp_from_the_future_is_rejected() {
    let err = analyze_events(&[sample(1, 3, 9)], Limits::default(), None, None).unwrap_err();
    assert!(matches!(err, AnalyzeError::Inconsistent { step: 1, .. }));
}

#[test]
fn latency_uses_command_keys() {
    let v = Stamped::new(1, 4).pack();
    let e = ev(&format!(
        "step=9 tick=11 conn=recv_pusher_5 ports=pusher.recv data=pusher.command={v},pusher.command.port=5"
    ));
    let r = analyze_events(
        &[e],
        Limits {
            max_age: None,
            max_latency: Some(6),
        },
        None,
        None,
    )
    .unwrap();
    assert_eq!(r.max_latency(), Some(7));
    assert_eq!(r.violations[0].metric, Metric::Latency);
    assert_eq!(r.latency_stats[0].channel, "pusher.command@5");
}

#[test]
fn exclusivity_counts_receptions_per_tick() {
    let events = [
        ev("step=1 tick=1 conn=inject_T1_S2 ports=T1.ttnoc_comm,S2.recv data="),
        ev("step=2 tick=1 conn=hop_S1_S2 ports=S1.fwd,S2.recv data="),
        ev("step=3 tick=2 conn=inject_T1_S2 ports=T1.ttnoc_comm,S2.recv data="),
    ];
    let v = switch_exclusivity(&events);
    assert_eq!(
        v,
        [ExclusivityViolation {
            tick: 1,
            switch: "S2".into(),
            messages: 2
        }]
    );
}

#[test]
fn deliveries_pair_by_payload() {
    let events = [
        ev("step=1 tick=1 conn=inject_T1_S2 ports=T1.ttnoc_comm,S2.recv data=T1.link=5,T1.link.port=2,T1.link.hops=1"),
        ev("step=2 tick=2 conn=inject_T1_S2 ports=T1.ttnoc_comm,S2.recv data=T1.link=6,T1.link.port=2,T1.link.hops=1"),
        ev("step=3 tick=2 conn=deliver_S2_T4 ports=S2.fwd,T4.ttnoc_comm data=S2.phase=1,T4.link=6,T4.link.port=2"),
        ev("step=4 tick=3 conn=deliver_S2_T4 ports=S2.fwd,T4.ttnoc_comm data=S2.phase=1,T4.link=9,T4.link.port=2"),
    ];
    let c = deliveries(&events);
    assert_eq!(c.deliveries.len(), 1);
    let d = &c.deliveries[0];
    assert_eq!(
        (
            d.source.as_str(),
            d.target.as_str(),
            d.injected,
            d.delivered
        ),
        ("T1", "T4", 2, 2)
    );
    assert_eq!(d.subtick, 1);
    assert_eq!(c.lost, [("T1".to_string(), 1, 2)]);
    assert_eq!(c.unmatched, [("T4".to_string(), 3)]);
    assert_eq!(parallel_ticks(&c, &[("T1", "T4")]), [2]);
    assert!(parallel_ticks(&c, &[("T1", "T4"), ("T2", "T3")]).is_empty());
}

#[test]
fn early_flush_is_flagged() {
    let events = [
        ev("step=1 tick=1 conn=compute_ctl ports=ctl.compute data=ctl.step=0"),
        ev("step=2 tick=3 conn=flush_ctl ports=ctl.flush data=ctl.step=0"),
        ev("step=3 tick=3 conn=compute_ctl ports=ctl.compute data=ctl.step=1"),
        ev("step=4 tick=4 conn=flush_ctl ports=ctl.flush data=ctl.step=1"),
    ];
    let slices = BTreeMap::from([("ctl".to_string(), vec![2, 3])]);
    assert_eq!(
        time_slice_violations(&events, &slices).unwrap(),
        [("ctl".to_string(), 1, 3, 4)]
    );
    let bad = BTreeMap::new();
    assert!(time_slice_violations(&events, &bad).is_err());
}
