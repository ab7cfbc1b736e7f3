use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::trace::TraceEvent;

/// A switch receiving more than one message within one global tick.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExclusivityViolation {
    pub tick: u64,
    pub switch: String,
    pub messages: usize,
}

fn receiving_switch(e: &TraceEvent) -> Option<&str> {
    if !(e.connector.starts_with("inject_") || e.connector.starts_with("hop_")) {
        return None;
    }
    e.ports.iter().find_map(|p| p.strip_suffix(".recv"))
}

/// Per-switch exclusivity, read from the trace alone.
pub fn switch_exclusivity(events: &[TraceEvent]) -> Vec<ExclusivityViolation> {
    let mut count: BTreeMap<(u64, &str), usize> = BTreeMap::new();
    for e in events {
        if let Some(s) = receiving_switch(e) {
            *count.entry((e.tick, s)).or_default() += 1;
        }
    }
    count
        .into_iter()
        .filter(|(_, n)| *n > 1)
        .map(|((tick, s), n)| ExclusivityViolation {
            tick,
            switch: s.to_string(),
            messages: n,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delivery {
    pub source: String,
    pub target: String,
    pub port_id: i64,
    pub payload: i64,
    pub injected: u64,
    pub delivered: u64,
    /// Route length at injection.
    pub hops: i64,
    /// Subtick (0 = tick, 1..=3 = t1..t3) of the final hop.
    pub subtick: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeliveryCheck {
    pub deliveries: Vec<Delivery>,
    /// Injections never delivered, as `(source, tick, port id)`.
    pub lost: Vec<(String, u64, i64)>,
    /// Deliveries without a matching injection, as `(target, tick)`.
    pub unmatched: Vec<(String, u64)>,
}

fn parts<'a>(e: &'a TraceEvent, prefix: &str) -> Option<(&'a str, &'a str)> {
    e.connector.strip_prefix(prefix)?.split_once('_')
}

// (port id, payload) -> (source, injection tick, hops), oldest first
type Pending = HashMap<(i64, i64), VecDeque<(String, u64, i64)>>;

/// Pairs every fabric injection with its delivery (FIFO per port id and
/// payload).
pub fn deliveries(events: &[TraceEvent]) -> DeliveryCheck {
    let mut pending: Pending = HashMap::new();
    let mut out = DeliveryCheck::default();
    for e in events {
        if let Some((t, _)) = parts(e, "inject_") {
            let key = format!("{t}.link");
            let (Some(payload), Some(port), Some(hops)) = (
                e.value(&key),
                e.value(&format!("{key}.port")),
                e.value(&format!("{key}.hops")),
            ) else {
                continue;
            };
            pending
                .entry((port, payload))
                .or_default()
                .push_back((t.to_string(), e.tick, hops));
        } else if let Some((s, t)) = parts(e, "deliver_") {
            let key = format!("{t}.link");
            let (Some(payload), Some(port)) = (e.value(&key), e.value(&format!("{key}.port")))
            else {
                out.unmatched.push((t.to_string(), e.tick));
                continue;
            };
            match pending
                .get_mut(&(port, payload))
                .and_then(VecDeque::pop_front)
            {
                Some((source, injected, hops)) => out.deliveries.push(Delivery {
                    source,
                    target: t.to_string(),
                    port_id: port,
                    payload,
                    injected,
                    delivered: e.tick,
                    hops,
                    subtick: e.value(&format!("{s}.phase")).unwrap_or(-1),
                }),
                None => out.unmatched.push((t.to_string(), e.tick)),
            }
        }
    }
    let mut lost: Vec<_> = pending
        .into_iter()
        .flat_map(|((port, _), q)| q.into_iter().map(move |(s, t, _)| (s, t, port)))
        .collect();
    lost.sort();
    out.lost = lost;
    out
}

/// Ticks in which every `(source, target)` pair has one delivery.
pub fn parallel_ticks(check: &DeliveryCheck, pairs: &[(&str, &str)]) -> Vec<u64> {
    let mut by_tick: BTreeMap<u64, Vec<(&str, &str)>> = BTreeMap::new();
    for d in &check.deliveries {
        if d.injected == d.delivered {
            by_tick
                .entry(d.delivered)
                .or_default()
                .push((d.source.as_str(), d.target.as_str()));
        }
    }
    by_tick
        .into_iter()
        .filter(|(_, got)| pairs.iter().all(|p| got.contains(p)))
        .map(|(t, _)| t)
        .collect()
}

/// Flushes that came too early: `(app, step index, compute tick, flush tick)`.
/// `slices` maps an application to the time slice of each step.
pub fn time_slice_violations(
    events: &[TraceEvent],
    slices: &BTreeMap<String, Vec<u32>>,
) -> Result<Vec<(String, i64, u64, u64)>, String> {
    let mut started: BTreeMap<&str, (i64, u64)> = BTreeMap::new();
    let mut out = Vec::new();
    for e in events {
        if let Some(app) = e.connector.strip_prefix("compute_") {
            let step = e
                .value(&format!("{app}.step"))
                .ok_or_else(|| format!("step {}: compute without step index", e.step))?;
            started.insert(app, (step, e.tick));
        } else if let Some(app) = e.connector.strip_prefix("flush_") {
            let (step, t0) = started
                .remove(app)
                .ok_or_else(|| format!("step {}: flush of {app} without compute", e.step))?;
            let slice = slices
                .get(app)
                .and_then(|s| s.get(step as usize))
                .ok_or_else(|| format!("no time slice for {app} step {step}"))?;
            if e.tick - t0 < u64::from(*slice) {
                out.push((app.to_string(), step, t0, e.tick));
            }
        }
    }
    Ok(out)
}
