use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::atomic::{AtomicBuilder, AtomicComponentDef, Guard, TransitionDef, Update};
use crate::error::{BipError, Result};
use crate::rng::mix64;
use crate::trace::TraceEvent;
use crate::value::{Message, Stamped, Value};

use super::Endpoints;

/// Value source of a sensor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stimulus {
    /// Played in order; the last value repeats once exhausted.
    Script(Vec<i32>),
    /// Uniform in `lo..=hi`, a pure function of `seed` and the sample index.
    Random { seed: u64, lo: i32, hi: i32 },
}

impl Stimulus {
    pub fn value(&self, idx: u64) -> i32 {
        match self {
            Stimulus::Script(vals) => match vals.len() {
                0 => 0,
                n => vals[(idx as usize).min(n - 1)],
            },
            Stimulus::Random { seed, lo, hi } => {
                let span = (i64::from(*hi) - i64::from(*lo) + 1).max(1) as u64;
                let r = mix64(seed ^ mix64(idx)) % span;
                (i64::from(*lo) + r as i64) as i32
            }
        }
    }
}

fn sample(port_id: u32, stimulus: &Stimulus, idx: u64, tick: u64) -> Value {
    let payload = Stamped::new(stimulus.value(idx), tick as u32).pack();
    Value::msg(Message::host(port_id, payload))
}

/// Sensor producing a stamped sample on `port_id` at tick 0 and every
/// `period` ticks after. An unsent sample is overwritten by the next one.
pub fn make_sensor(
    name: &str,
    port_id: u32,
    stimulus: Stimulus,
    period: u32,
) -> Result<(AtomicComponentDef, Endpoints)> {
    if period == 0 {
        return Err(BipError::Build(format!("sensor {name} has period 0")));
    }
    let mut b = AtomicBuilder::new(name);
    let ticks = b.var("ticks", Value::Int(0));
    let idx = b.var("idx", Value::Int(1));
    let ready = b.var("ready", Value::Bool(true));
    let out = b.var("out", sample(port_id, &stimulus, 0, 0));
    let l = b.location("l0");
    let tick = b.port("tick", &[ticks]);
    let send = b.port("send", &[out]);
    let stimulus = Arc::new(stimulus);
    b.transition(
        TransitionDef::new(l, tick, l).with_update(Update::new("sample", move |v| {
            let t = crate::value::checked_add(v.int(ticks)?, 1)?;
            v.set_int(ticks, t);
            if t % i64::from(period) == 0 {
                let i = v.int(idx)?;
                v.set(out, sample(port_id, &stimulus, i as u64, t as u64));
                v.set_int(idx, i + 1);
                v.set_bool(ready, true);
            }
            Ok(())
        })),
    );
    b.transition(
        TransitionDef::new(l, send, l)
            .with_guard(Guard::new("ready", move |v| v.bool(ready)))
            .with_update(Update::new("ready=false", move |v| {
                v.set_bool(ready, false);
                Ok(())
            })),
    );
    let endpoints = Endpoints {
        send: Some("send".into()),
        receive: Vec::new(),
        tick: Some("tick".into()),
    };
    Ok((b.build()?, endpoints))
}

/// Actuator accepting commands on `port_id`. Its status file is written by
/// [`ActuatorRecorder`] from the trace.
pub fn make_actuator(name: &str, port_id: u32) -> Result<(AtomicComponentDef, Endpoints)> {
    let mut b = AtomicBuilder::new(name);
    let command = b.var("command", Value::empty_msg());
    let l = b.location("l0");
    let recv = b.port("recv", &[command]);
    b.transition(TransitionDef::new(l, recv, l));
    let endpoints = Endpoints {
        send: None,
        receive: vec![(port_id, "recv".into())],
        tick: None,
    };
    Ok((b.build()?, endpoints))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActuatorSpec {
    pub id: String,
    /// Status file name, relative to the output directory.
    pub sink: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct StatusRecord {
    pub tick: u64,
    pub actuator: String,
    pub value: i32,
}

impl StatusRecord {
    /// The record for `event` if it delivers a command to `actuator`.
    pub fn from_event(event: &TraceEvent, actuator: &str) -> Option<Self> {
        if !event.has_port(&format!("{actuator}.recv")) {
            return None;
        }
        let payload = event.value(&format!("{actuator}.command"))?;
        Some(StatusRecord {
            tick: event.tick,
            actuator: actuator.to_string(),
            value: Stamped::unpack(payload).value,
        })
    }
}

/// Collects actuator commands from trace events and writes one status file
/// per sink, lines `<tick> <actuator> <value>` ordered by tick then actuator.
#[derive(Debug)]
pub struct ActuatorRecorder {
    dir: PathBuf,
    specs: Vec<ActuatorSpec>,
    files: BTreeMap<PathBuf, (File, Vec<StatusRecord>)>,
}

impl ActuatorRecorder {
    /// Creates (truncates) every status file up front so an unwritable sink
    /// fails before the run starts.
    pub fn create(dir: &Path, specs: &[ActuatorSpec]) -> io::Result<Self> {
        let mut files = BTreeMap::new();
        for s in specs {
            let path = dir.join(&s.sink);
            if let Entry::Vacant(slot) = files.entry(path) {
                let f = File::create(slot.key()).map_err(|e| {
                    io::Error::new(e.kind(), format!("{}: {e}", slot.key().display()))
                })?;
                slot.insert((f, Vec::new()));
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            specs: specs.to_vec(),
            files,
        })
    }

    pub fn record(&mut self, event: &TraceEvent) {
        for s in &self.specs {
            if let Some(r) = StatusRecord::from_event(event, &s.id) {
                if let Some((_, recs)) = self.files.get_mut(&self.dir.join(&s.sink)) {
                    recs.push(r);
                }
            }
        }
    }

    pub fn finish(self) -> io::Result<()> {
        for (_, (mut f, mut recs)) in self.files {
            recs.sort();
            let mut text = String::new();
            for r in recs {
                text.push_str(&format!("{} {} {}\n", r.tick, r.actuator, r.value));
            }
            f.write_all(text.as_bytes())?;
            f.flush()?;
        }
        Ok(())
    }
}
