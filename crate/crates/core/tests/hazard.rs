use bipsim::analysis::{analyze_events, Limits};
use bipsim::scenario::{build_scenario, parse_scenario, simulate};

fn max_age(file: &str, seed: u64) -> u64 {
    let path = format!("{}/../../scenarios/{file}", env!("CARGO_MANIFEST_DIR"));
    let s = parse_scenario(&std::fs::read_to_string(path).unwrap()).unwrap();
    let b = build_scenario(&s).unwrap();
    let out = simulate(&b, seed, b.run.max_steps, |_| {}).unwrap();
    let limits = Limits {
        max_age: b.run.max_age,
        max_latency: b.run.max_latency,
    };
    let r = analyze_events(&out.trace.events, limits, Some(seed), None).unwrap();
    r.max_age().unwrap()
}

#[test]
fn seed_0_exceeds_the_age_limit_without_priority() {
    assert_eq!(max_age("sorting.scn", 0), 24);
}

#[test]
fn seed_0_stays_fresh_with_priority() {
    assert_eq!(max_age("sorting-priority.scn", 0), 15);
}
