use std::fmt::Write;

use crate::host::Stimulus;

use super::model::{HostKind, Scenario};

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Canonical text form; [`super::parse_scenario`] reads it back to an equal
/// scenario.
pub fn print_scenario(s: &Scenario) -> String {
    let t = &s.topology;
    let mut out = String::new();
    out.push_str("[topology]\n");
    if !t.switches.is_empty() {
        let _ = writeln!(out, "switch {}", t.switches.join(" "));
    }
    for &(a, b) in &t.links {
        let _ = writeln!(
            out,
            "link {} {}",
            t.switches[a as usize], t.switches[b as usize]
        );
    }
    for (i, name) in t.tiss.iter().enumerate() {
        let _ = writeln!(out, "tiss {name} at {}", t.switches[t.attach[i] as usize]);
    }
    for (name, m) in &s.machines {
        let _ = writeln!(out, "\n[machine {name}]");
        for st in &m.steps {
            let _ = writeln!(
                out,
                "step {} {} slice={}",
                st.name, st.compute, st.time_slice
            );
        }
        for tr in &m.transitions {
            let _ = write!(out, "next {} -> {}", tr.from, tr.to);
            if !tr.when.is_empty() {
                let conds: Vec<String> = tr.when.iter().map(|c| c.to_string()).collect();
                let _ = write!(out, " when {}", conds.join(" and "));
            }
            out.push('\n');
        }
    }
    if !s.schedule.is_empty() {
        out.push_str("\n[schedule]\n");
    }
    for e in &s.schedule {
        let route: Vec<&str> = e
            .route
            .iter()
            .map(|&r| t.switches[r as usize].as_str())
            .collect();
        let _ = write!(
            out,
            "entry {} port={} period={}",
            t.tiss[e.source as usize], e.port_id, e.period
        );
        if let Some(p) = e.phase {
            let _ = write!(out, " phase={p}");
        }
        let _ = writeln!(
            out,
            " route={} target={}",
            route.join(","),
            t.tiss[e.target as usize]
        );
    }
    if !s.hosts.is_empty() {
        out.push_str("\n[hosts]\n");
    }
    for h in &s.hosts {
        let _ = write!(
            out,
            "{} {} at {}",
            h.kind.kind_name(),
            h.name,
            t.tiss[h.tiss as usize]
        );
        match &h.kind {
            HostKind::Comm => {}
            HostKind::App { machine } => {
                let _ = write!(out, " machine={machine}");
            }
            HostKind::Sensor {
                port,
                stimulus,
                period,
            } => {
                let _ = write!(out, " port={port} period={period}");
                match stimulus {
                    Stimulus::Script(v) => {
                        let _ = write!(out, " script={}", join(v));
                    }
                    Stimulus::Random { seed, lo, hi } => {
                        let _ = write!(out, " random={seed}:{lo}:{hi}");
                    }
                }
            }
            HostKind::Voter { inputs, output } => {
                let _ = write!(out, " inputs={} output={output}", join(inputs));
            }
            HostKind::Actuator { port, sink } => {
                let _ = write!(out, " port={port}");
                if let Some(sink) = sink {
                    let _ = write!(out, " sink={sink}");
                }
            }
        }
        out.push('\n');
    }
    if !s.priorities.is_empty() {
        out.push_str("\n[priorities]\n");
    }
    for p in &s.priorities {
        let _ = writeln!(out, "{} < {}", p.lower.join(" "), p.higher.join(" "));
    }
    let r = &s.run;
    let _ = write!(out, "\n[run]\nseed={} max_steps={}", r.seed, r.max_steps);
    if let Some(a) = r.max_age {
        let _ = write!(out, " max_age={a}");
    }
    if let Some(l) = r.max_latency {
        let _ = write!(out, " max_latency={l}");
    }
    let _ = writeln!(
        out,
        " hyperperiod_bound={} high_water={}",
        r.hyperperiod_bound, r.high_water
    );
    out
}
