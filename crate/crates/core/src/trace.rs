//! Trace events and their line-oriented text form:
//!
//! ```text
//! step=<n> tick=<t> conn=<name> ports=<c1.p1,c2.p2,...> data=<k=v,...>
//! ```
//!
//! Lines starting with `#` are header comments (`# key=value`).

use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub step: u64,
    /// Number of global ticks fired so far, this event included.
    pub tick: u64,
    pub connector: String,
    pub ports: Vec<String>,
    /// Port-attached values after the step, rendered as decimal integers.
    pub data: Vec<(String, i64)>,
}

impl TraceEvent {
    pub fn value(&self, key: &str) -> Option<i64> {
        self.data.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn has_port(&self, label: &str) -> bool {
        self.ports.iter().any(|p| p == label)
    }

    /// Component names of the ports involved, in port order.
    pub fn components(&self) -> impl Iterator<Item = &str> {
        self.ports
            .iter()
            .map(|p| p.rsplit_once('.').map_or(p.as_str(), |(c, _)| c))
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step={} tick={} conn={} ports={} data=",
            self.step,
            self.tick,
            self.connector,
            self.ports.join(",")
        )?;
        for (i, (k, v)) in self.data.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    StepLimit,
    Quiescent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    pub termination: Termination,
}

impl Trace {
    /// Renders the trace with optional `# key=value` header lines.
    pub fn render(&self, header: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in header {
            out.push_str(&format!("# {k}={v}\n"));
        }
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("trace line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParsedTrace {
    pub header: Vec<(String, String)>,
    pub events: Vec<TraceEvent>,
}

impl ParsedTrace {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub fn parse_trace(text: &str) -> Result<ParsedTrace, TraceParseError> {
    let mut out = ParsedTrace::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                out.header
                    .push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        out.events
            .push(parse_event(line).map_err(|message| TraceParseError {
                line: line_no,
                message,
            })?);
    }
    Ok(out)
}

pub fn parse_event(line: &str) -> Result<TraceEvent, String> {
    let mut fields = line.split(' ').filter(|f| !f.is_empty());
    let mut take = |name: &str| -> Result<&str, String> {
        let f = fields
            .next()
            .ok_or_else(|| format!("missing field {name}"))?;
        f.strip_prefix(name)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| format!("expected {name}=..., found {f}"))
    };
    let step = take("step")?
        .parse()
        .map_err(|e| format!("bad step: {e}"))?;
    let tick = take("tick")?
        .parse()
        .map_err(|e| format!("bad tick: {e}"))?;
    let connector = take("conn")?.to_string();
    if connector.is_empty() {
        return Err("empty connector name".into());
    }
    let ports: Vec<String> = take("ports")?
        .split(',')
        .filter(|p| !p.is_empty())
        .map(str::to_string)
        .collect();
    let data_field = take("data")?;
    let mut data = Vec::new();
    for kv in data_field.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .rsplit_once('=')
            .ok_or_else(|| format!("bad data entry {kv}"))?;
        let v: i64 = v.parse().map_err(|e| format!("bad value for {k}: {e}"))?;
        data.push((k.to_string(), v));
    }
    if fields.next().is_some() {
        return Err("trailing fields".into());
    }
    Ok(TraceEvent {
        step,
        tick,
        connector,
        ports,
        data,
    })
}
