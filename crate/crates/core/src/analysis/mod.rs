//! Trace analysis: sensor-data ages, actuator latencies, deadline
//! violations, fabric invariants, and seed sweeps.

mod checks;
mod sweep;

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use crate::trace::{parse_trace, ParsedTrace, TraceEvent, TraceParseError};
use crate::value::Stamped;

pub use checks::{
    deliveries, parallel_ticks, switch_exclusivity, time_slice_violations, Delivery, DeliveryCheck,
    ExclusivityViolation,
};
pub use sweep::{sweep, SweepRow};

/// Data key suffix of consumed sensor samples; the payload stamp is the
/// production tick.
pub const AGE_SUFFIX: &str = ".sample";
/// Data key suffix of delivered actuator commands; the payload stamp is the
/// compute tick of the issuing step.
pub const LATENCY_SUFFIX: &str = ".command";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Limits {
    pub max_age: Option<u64>,
    pub max_latency: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Age,
    Latency,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Age => "age",
            Metric::Latency => "latency",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub tick: u64,
    pub step: u64,
    /// `<data key>@<port id>`.
    pub channel: String,
    pub value: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelStats {
    pub channel: String,
    pub count: usize,
    pub max: u64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub metric: Metric,
    pub tick: u64,
    pub step: u64,
    pub channel: String,
    pub value: u64,
    pub limit: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport {
    pub seed: Option<u64>,
    pub scenario_hash: Option<String>,
    pub limits: Limits,
    pub ages: Vec<Observation>,
    pub latencies: Vec<Observation>,
    pub age_stats: Vec<ChannelStats>,
    pub latency_stats: Vec<ChannelStats>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Parse(#[from] TraceParseError),
    #[error("step {step}: {message}")]
    Inconsistent { step: u64, message: String },
}

fn stats(obs: &[Observation]) -> Vec<ChannelStats> {
    let mut by: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for o in obs {
        by.entry(&o.channel).or_default().push(o.value);
    }
    by.into_iter()
        .map(|(c, v)| ChannelStats {
            channel: c.to_string(),
            count: v.len(),
            max: v.iter().copied().max().unwrap_or(0),
            mean: v.iter().sum::<u64>() as f64 / v.len() as f64,
        })
        .collect()
}

fn observe(events: &[TraceEvent], suffix: &str) -> Result<Vec<Observation>, AnalyzeError> {
    let mut out = Vec::new();
    for e in events {
        for (k, v) in &e.data {
            if !k.ends_with(suffix) {
                continue;
            }
            let port = e.value(&format!("{k}.port")).unwrap_or(-1);
            let stamp = u64::from(Stamped::unpack(*v).tick);
            if stamp > e.tick {
                return Err(AnalyzeError::Inconsistent {
                    step: e.step,
                    message: format!("{k} stamped at tick {stamp}, after tick {}", e.tick),
                });
            }
            out.push(Observation {
                tick: e.tick,
                step: e.step,
                channel: format!("{k}@{port}"),
                value: e.tick - stamp,
            });
        }
    }
    Ok(out)
}

fn violations(obs: &[Observation], metric: Metric, limit: Option<u64>) -> Vec<Violation> {
    let Some(limit) = limit else {
        return Vec::new();
    };
    obs.iter()
        .filter(|o| o.value > limit)
        .map(|o| Violation {
            metric,
            tick: o.tick,
            step: o.step,
            channel: o.channel.clone(),
            value: o.value,
            limit,
        })
        .collect()
}

/// Pure function of the events and limits.
pub fn analyze_events(
    events: &[TraceEvent],
    limits: Limits,
    seed: Option<u64>,
    scenario_hash: Option<String>,
) -> Result<AnalysisReport, AnalyzeError> {
    let ages = observe(events, AGE_SUFFIX)?;
    let latencies = observe(events, LATENCY_SUFFIX)?;
    let mut v = violations(&ages, Metric::Age, limits.max_age);
    v.extend(violations(&latencies, Metric::Latency, limits.max_latency));
    v.sort_by_key(|x| (x.step, x.metric));
    Ok(AnalysisReport {
        seed,
        scenario_hash,
        limits,
        age_stats: stats(&ages),
        latency_stats: stats(&latencies),
        ages,
        latencies,
        violations: v,
    })
}

/// Analyzes a parsed trace. Limits not given fall back to the trace header.
pub fn analyze_trace(trace: &ParsedTrace, limits: Limits) -> Result<AnalysisReport, AnalyzeError> {
    let header_u64 = |k: &str| trace.header_value(k).and_then(|v| v.parse().ok());
    let limits = Limits {
        max_age: limits.max_age.or_else(|| header_u64("max_age")),
        max_latency: limits.max_latency.or_else(|| header_u64("max_latency")),
    };
    analyze_events(
        &trace.events,
        limits,
        header_u64("seed"),
        trace.header_value("scenario_hash").map(str::to_string),
    )
}

pub fn analyze_text(text: &str, limits: Limits) -> Result<AnalysisReport, AnalyzeError> {
    analyze_trace(&parse_trace(text)?, limits)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

impl AnalysisReport {
    pub fn max_age(&self) -> Option<u64> {
        self.ages.iter().map(|o| o.value).max()
    }

    pub fn max_latency(&self) -> Option<u64> {
        self.latencies.iter().map(|o| o.value).max()
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "seed {}  scenario {}",
            opt(self.seed),
            self.scenario_hash.as_deref().unwrap_or("-")
        );
        let _ = writeln!(
            out,
            "{:<8} {:<32} {:>7} {:>7} {:>9}",
            "metric", "channel", "count", "max", "mean"
        );
        for (metric, st) in [
            (Metric::Age, &self.age_stats),
            (Metric::Latency, &self.latency_stats),
        ] {
            for s in st {
                let _ = writeln!(
                    out,
                    "{:<8} {:<32} {:>7} {:>7} {:>9.3}",
                    metric.name(),
                    s.channel,
                    s.count,
                    s.max,
                    s.mean
                );
            }
        }
        let _ = writeln!(
            out,
            "limits: max_age {}  max_latency {}",
            opt(self.limits.max_age),
            opt(self.limits.max_latency)
        );
        if self.violations.is_empty() {
            out.push_str("no violations\n");
        }
        for v in &self.violations {
            let _ = writeln!(
                out,
                "VIOLATION {} tick {} step {} channel {}: {} > {}",
                v.metric.name(),
                v.tick,
                v.step,
                v.channel,
                v.value,
                v.limit
            );
        }
        out
    }

    /// Machine-readable form, one `key=value` record per line.
    pub fn render_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed={}", opt(self.seed));
        let _ = writeln!(
            out,
            "scenario_hash={}",
            self.scenario_hash.as_deref().unwrap_or("-")
        );
        let _ = writeln!(out, "max_age={}", opt(self.max_age()));
        let _ = writeln!(out, "max_latency={}", opt(self.max_latency()));
        for (metric, st) in [
            (Metric::Age, &self.age_stats),
            (Metric::Latency, &self.latency_stats),
        ] {
            for s in st {
                let _ = writeln!(
                    out,
                    "channel metric={} name={} count={} max={} mean={:.3}",
                    metric.name(),
                    s.channel,
                    s.count,
                    s.max,
                    s.mean
                );
            }
        }
        let _ = writeln!(out, "violations={}", self.violations.len());
        for v in &self.violations {
            let _ = writeln!(
                out,
                "violation metric={} tick={} step={} channel={} value={} limit={}",
                v.metric.name(),
                v.tick,
                v.step,
                v.channel,
                v.value,
                v.limit
            );
        }
        out
    }
}

#[cfg(test)]
mod tests;
