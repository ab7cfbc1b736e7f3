use std::collections::BTreeSet;
use std::fmt;

use crate::ttnoc::{ScheduleEntry, Topology, MAX_ROUTE_LEN};

use super::model::Scenario;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteError {
    pub entry: String,
    pub message: String,
}

impl fmt::Display for RouteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "route entry={} {}", self.entry, self.message)
    }
}

/// Checks every route: 1 to 3 distinct switches, consecutive ones linked,
/// first at the source TISS and last at the target TISS.
pub fn validate_routes(s: &Scenario) -> Result<(), Vec<RouteError>> {
    let t = &s.topology;
    let mut errors = Vec::new();
    for e in &s.schedule {
        let mut err = |m: String| {
            errors.push(RouteError {
                entry: s.entry_label(e),
                message: m,
            })
        };
        let name = |x: u16| t.switches[x as usize].as_str();
        if e.route.is_empty() {
            err("is empty; at least the switch of the source must appear".into());
            continue;
        }
        if e.route.len() > MAX_ROUTE_LEN {
            err(format!(
                "has {} switches, more than {MAX_ROUTE_LEN}",
                e.route.len()
            ));
        }
        let distinct: BTreeSet<_> = e.route.iter().collect();
        if distinct.len() != e.route.len() {
            err("visits a switch twice".into());
        }
        for w in e.route.windows(2) {
            if !t.adjacent(w[0], w[1]) {
                err(format!("hops {}-{} without a link", name(w[0]), name(w[1])));
            }
        }
        let (first, last) = (e.route[0], e.route[e.route.len() - 1]);
        if t.attach[e.source as usize] != first {
            err(format!(
                "starts at {} but {} is attached to {}",
                name(first),
                t.tiss[e.source as usize],
                name(t.attach[e.source as usize])
            ));
        }
        if t.attach[e.target as usize] != last {
            err(format!(
                "ends at {} but {} is attached to {}",
                name(last),
                t.tiss[e.target as usize],
                name(t.attach[e.target as usize])
            ));
        }
        if e.source == e.target {
            err("sends to its own TISS".into());
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Two entries claiming one switch or one TISS in the same global tick.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Conflict {
    /// Tick within the hyperperiod.
    pub tick: u64,
    /// `switch` or `tiss`.
    pub kind: &'static str,
    pub resource: String,
    pub first: String,
    pub second: String,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "conflict tick={} {}={} entries={},{}",
            self.tick, self.kind, self.resource, self.first, self.second
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScheduleError {
    Hyperperiod {
        hyperperiod: Option<u64>,
        bound: u64,
    },
    MissingPhase(Vec<String>),
    Routes(Vec<RouteError>),
    Infeasible {
        entry: String,
        period: u32,
    },
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::Hyperperiod { hyperperiod, bound } => {
                match hyperperiod {
                    Some(h) => write!(f, "hyperperiod {h} exceeds the bound {bound}")?,
                    None => write!(f, "hyperperiod overflows (bound {bound})")?,
                }
                f.write_str("; use periods that divide each other (e.g. powers of two) or raise hyperperiod_bound in [run]")
            }
            ScheduleError::MissingPhase(v) => {
                write!(
                    f,
                    "entries without phase: {}; run suggest first",
                    v.join(", ")
                )
            }
            ScheduleError::Routes(v) => {
                let lines: Vec<String> = v.iter().map(|e| e.to_string()).collect();
                f.write_str(&lines.join("\n"))
            }
            ScheduleError::Infeasible { entry, period } => {
                write!(f, "infeasible: no phase below {period} fits entry {entry}")
            }
        }
    }
}

impl std::error::Error for ScheduleError {}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Least common multiple of the periods, `None` on overflow.
pub fn hyperperiod(periods: impl IntoIterator<Item = u32>) -> Option<u64> {
    periods.into_iter().try_fold(1u64, |acc, p| {
        let p = u64::from(p.max(1));
        (acc / gcd(acc, p)).checked_mul(p)
    })
}

fn resources(topo: &Topology, e: &ScheduleEntry) -> Vec<(&'static str, String)> {
    let mut r: Vec<(&'static str, String)> = e
        .route
        .iter()
        .filter_map(|&s| topo.switches.get(s as usize))
        .map(|n| ("switch", n.clone()))
        .collect();
    for t in [e.source, e.target] {
        if let Some(n) = topo.tiss.get(t as usize) {
            r.push(("tiss", n.clone()));
        }
    }
    r.sort();
    r.dedup();
    r
}

/// All conflicts of `entries` over one hyperperiod, sorted.
pub fn schedule_conflicts(
    topo: &Topology,
    entries: &[ScheduleEntry],
    labels: &[String],
    bound: u64,
) -> Result<Vec<Conflict>, ScheduleError> {
    let h = hyperperiod(entries.iter().map(|e| e.period));
    let h = match h {
        Some(h) if h <= bound => h,
        _ => {
            return Err(ScheduleError::Hyperperiod {
                hyperperiod: h,
                bound,
            })
        }
    };
    let res: Vec<_> = entries.iter().map(|e| resources(topo, e)).collect();
    let mut out = Vec::new();
    for tick in 0..h {
        let due: Vec<usize> = (0..entries.len())
            .filter(|&i| entries[i].due(tick))
            .collect();
        for (a, &i) in due.iter().enumerate() {
            for &j in &due[a + 1..] {
                for r in res[i].iter().filter(|r| res[j].contains(r)) {
                    out.push(Conflict {
                        tick,
                        kind: r.0,
                        resource: r.1.clone(),
                        first: labels[i].clone(),
                        second: labels[j].clone(),
                    });
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Conflicts of the scenario's (fully phased) schedule; empty means clean.
pub fn validate_schedule(s: &Scenario) -> Result<Vec<Conflict>, ScheduleError> {
    let entries = s.entries().map_err(ScheduleError::MissingPhase)?;
    let labels: Vec<String> = s.schedule.iter().map(|e| s.entry_label(e)).collect();
    schedule_conflicts(&s.topology, &entries, &labels, s.run.hyperperiod_bound)
}

/// Assigns each entry without a phase the smallest phase that conflicts with
/// no entry placed before it. Entries with a phase keep it.
pub fn suggest_schedule(s: &Scenario) -> Result<Scenario, ScheduleError> {
    let bound = s.run.hyperperiod_bound;
    let h = hyperperiod(s.schedule.iter().map(|e| e.period));
    if !h.is_some_and(|h| h <= bound) {
        return Err(ScheduleError::Hyperperiod {
            hyperperiod: h,
            bound,
        });
    }
    let mut out = s.clone();
    let fixed: Vec<ScheduleEntry> = s.schedule.iter().filter_map(|e| e.to_entry()).collect();
    let mut placed: Vec<ScheduleEntry> = fixed;
    for i in 0..out.schedule.len() {
        if out.schedule[i].phase.is_some() {
            continue;
        }
        let e = out.schedule[i].clone();
        let mut chosen = None;
        for phase in 0..e.period {
            let mut trial = placed.clone();
            let mut cand = e.clone();
            cand.phase = Some(phase);
            trial.push(cand.to_entry().expect("phase set"));
            let labels: Vec<String> = (0..trial.len()).map(|k| k.to_string()).collect();
            if schedule_conflicts(&s.topology, &trial, &labels, bound)?.is_empty() {
                chosen = Some(phase);
                break;
            }
        }
        let Some(phase) = chosen else {
            return Err(ScheduleError::Infeasible {
                entry: s.entry_label(&e),
                period: e.period,
            });
        };
        out.schedule[i].phase = Some(phase);
        placed.push(out.schedule[i].to_entry().expect("phase set"));
    }
    Ok(out)
}
