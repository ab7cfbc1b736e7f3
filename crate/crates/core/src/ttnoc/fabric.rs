use std::sync::Arc;

use crate::connector::{
    ConnectorDef, ConnectorGuard, ConnectorPort, PortData, PortKind, PortRef, PortSet, Transfer,
};
use crate::error::{BipError, EvalError, Result};
use crate::system::SystemBuilder;
use crate::value::{Hop, SwitchIdx, TissIdx, Value};

use super::components::{
    make_global_timer, make_switch, make_tick_splitter, make_tiss, SwitchHandles, TimerHandles,
    TissHandles, SUBTICKS,
};
use super::{ScheduleEntry, Topology};

pub const TICK_CONNECTOR: &str = "tick";

/// Component indices and variable handles of a built fabric.
#[derive(Clone, Debug)]
pub struct FabricLayout {
    pub topology: Topology,
    pub entries: Vec<ScheduleEntry>,
    pub timer: usize,
    pub timer_vars: TimerHandles,
    pub splitter: usize,
    pub switches: Vec<usize>,
    pub switch_vars: SwitchHandles,
    pub tiss: Vec<usize>,
    pub tiss_vars: Vec<TissHandles>,
    pub tick_connector: usize,
}

impl FabricLayout {
    pub fn switch_component(&self, s: SwitchIdx) -> usize {
        self.switches[s as usize]
    }

    pub fn tiss_component(&self, t: TissIdx) -> usize {
        self.tiss[t as usize]
    }

    pub fn tiss_name(&self, t: TissIdx) -> &str {
        &self.topology.tiss[t as usize]
    }

    pub fn switch_name(&self, s: SwitchIdx) -> &str {
        &self.topology.switches[s as usize]
    }
}

/// Fabric under construction; host components and connectors are added to
/// `builder` before it is built.
pub struct Fabric {
    pub builder: SystemBuilder,
    pub layout: FabricLayout,
}

impl Fabric {
    /// Lets an extra component observe the global tick.
    pub fn add_tick_listener(&mut self, port: PortRef) {
        let c = self.builder.connector_mut(self.layout.tick_connector);
        c.ports.push(ConnectorPort {
            port,
            kind: PortKind::Synchron,
        });
    }

    pub fn tiss_port(&self, t: TissIdx, name: &str) -> Result<PortRef> {
        self.builder.port_ref(self.layout.tiss_component(t), name)
    }
}

fn next_hop(d: &PortData, port: usize, var: usize) -> Result<Hop, EvalError> {
    Ok(match d.get(port, var) {
        Some(v) => match v.as_msg()? {
            Some(m) => m.next_hop(),
            None => Hop::Nowhere,
        },
        None => Hop::Nowhere,
    })
}

fn flag(d: &PortData, port: usize, var: usize) -> Result<bool, EvalError> {
    d.get(port, var).map_or(Ok(false), Value::as_bool)
}

fn int(d: &PortData, port: usize, var: usize) -> Result<i64, EvalError> {
    d.get(port, var).map_or(Ok(-1), Value::as_int)
}

// positions within the supports declared by the switch and TISS
const COMM_LINK: usize = 0;
const COMM_SENDING: usize = 1;
const COMM_PHASE: usize = 2;
const SWITCH_MSG: usize = 0;

/// Builds timer, splitter, switches, TISS and their connectors.
///
/// Entries are checked for endpoint consistency only; route legality is the
/// job of the scenario validator.
pub fn build_ttsoc(topology: &Topology, entries: &[ScheduleEntry]) -> Result<Fabric> {
    let problems = topology.problems();
    if !problems.is_empty() {
        return Err(BipError::Build(problems.join("; ")));
    }
    for e in entries {
        if e.source as usize >= topology.tiss.len() || e.target as usize >= topology.tiss.len() {
            return Err(BipError::Build(format!(
                "schedule entry for port {} names an unknown TISS",
                e.port_id
            )));
        }
        if e.period == 0 || e.phase >= e.period {
            return Err(BipError::Build(format!(
                "schedule entry for port {} has phase {} outside period {}",
                e.port_id, e.phase, e.period
            )));
        }
    }
    let mut b = SystemBuilder::new();
    let (timer_def, timer_vars) = make_global_timer("timer")?;
    let timer = b.add_component(timer_def);
    let splitter = b.add_component(make_tick_splitter("splitter")?);

    let mut switches = Vec::new();
    let mut switch_vars = None;
    for (s, name) in topology.switches.iter().enumerate() {
        let s = s as SwitchIdx;
        let (def, h) = make_switch(name, s, &topology.neighbors(s), &topology.attached_tiss(s))?;
        switch_vars = Some(h);
        switches.push(b.add_component(def));
    }
    let mut tiss = Vec::new();
    let mut tiss_vars = Vec::new();
    for (t, name) in topology.tiss.iter().enumerate() {
        let own: Vec<ScheduleEntry> = entries
            .iter()
            .filter(|e| e.source as usize == t)
            .cloned()
            .collect();
        let (def, h) = make_tiss(name, &own)?;
        tiss_vars.push(h);
        tiss.push(b.add_component(def));
    }
    let fabric: Vec<usize> = switches.iter().chain(&tiss).copied().collect();

    let listeners = |b: &SystemBuilder, port: &str| -> Result<Vec<PortRef>> {
        fabric.iter().map(|&c| b.port_ref(c, port)).collect()
    };
    let mut receivers = vec![b.port_ref(splitter, "tick")?];
    receivers.extend(listeners(&b, "tick")?);
    let all = PortSet::full(receivers.len() + 1);
    let tick = ConnectorDef::broadcast(TICK_CONNECTOR, b.port_ref(timer, "tick")?, &receivers)
        .with_guard(ConnectorGuard::requiring("fabric ready", all));
    let tick_connector = b.add_connector(tick);
    b.set_tick_connector(tick_connector);
    for sub in SUBTICKS {
        let receivers = listeners(&b, sub)?;
        let all = PortSet::full(receivers.len() + 1);
        let c = ConnectorDef::broadcast(sub, b.port_ref(splitter, sub)?, &receivers)
            .with_guard(ConnectorGuard::requiring("fabric ready", all));
        b.add_connector(c);
    }

    for (t, &tc) in tiss.iter().enumerate() {
        let t = t as TissIdx;
        let s = topology.attach[t as usize];
        let sc = switches[s as usize];
        let tname = &topology.tiss[t as usize];
        let sname = &topology.switches[s as usize];
        let comm = b.port_ref(tc, "ttnoc_comm")?;
        let recv = b.port_ref(sc, "recv")?;
        let fwd = b.port_ref(sc, "fwd")?;
        b.add_connector(
            ConnectorDef::rendezvous(format!("inject_{tname}_{sname}"), &[comm, recv])
                .with_guard(ConnectorGuard::new("sending towards switch", move |d| {
                    Ok(flag(d, 0, COMM_SENDING)? && next_hop(d, 0, COMM_LINK)? == Hop::Switch(s))
                }))
                .with_transfer(Transfer::copy((0, COMM_LINK), (1, SWITCH_MSG))),
        );
        let deliver = b.add_connector(
            ConnectorDef::rendezvous(format!("deliver_{sname}_{tname}"), &[fwd, comm])
                .with_guard(ConnectorGuard::new("addressed here", move |d| {
                    Ok(next_hop(d, 0, SWITCH_MSG)? == Hop::Tiss(t) && !flag(d, 1, COMM_SENDING)?)
                }))
                .with_transfer(Transfer::copy((0, SWITCH_MSG), (1, COMM_LINK))),
        );
        let idle = b.add_connector(
            ConnectorDef::rendezvous(format!("idle_{tname}"), &[comm]).with_guard(
                ConnectorGuard::new("nothing arrived", |d| {
                    Ok(int(d, 0, COMM_PHASE)? == 3 && !flag(d, 0, COMM_SENDING)?)
                }),
            ),
        );
        let lower = b.connector(idle).name.clone();
        let higher = b.connector(deliver).name.clone();
        b.prefer_connectors(&lower, &higher)?;
    }
    let mut directed: Vec<(SwitchIdx, SwitchIdx)> = Vec::new();
    for &(x, y) in &topology.links {
        directed.push((x, y));
        directed.push((y, x));
    }
    directed.sort_unstable();
    directed.dedup();
    for (a, z) in directed {
        let fwd = b.port_ref(switches[a as usize], "fwd")?;
        let recv = b.port_ref(switches[z as usize], "recv")?;
        let name = format!(
            "hop_{}_{}",
            topology.switches[a as usize], topology.switches[z as usize]
        );
        b.add_connector(
            ConnectorDef::rendezvous(name, &[fwd, recv])
                .with_guard(ConnectorGuard::new("next switch", move |d| {
                    Ok(next_hop(d, 0, SWITCH_MSG)? == Hop::Switch(z))
                }))
                .with_transfer(Transfer::copy((0, SWITCH_MSG), (1, SWITCH_MSG))),
        );
    }

    let layout = FabricLayout {
        topology: topology.clone(),
        entries: entries.to_vec(),
        timer,
        timer_vars,
        splitter,
        switches,
        switch_vars: switch_vars.expect("topology has switches"),
        tiss,
        tiss_vars,
        tick_connector,
    };
    Ok(Fabric { builder: b, layout })
}

/// Appends `messages` to TISS buffers in the initial state, as if the host had
/// written them before the first tick.
pub fn prefill(fabric: &mut Fabric, t: TissIdx, port_id: u32, payloads: &[i64]) -> Result<()> {
    let h = &fabric.layout.tiss_vars[t as usize];
    let buf = h.buffer(port_id).ok_or_else(|| {
        BipError::Build(format!(
            "{} has no buffer for port {port_id}",
            fabric.layout.tiss_name(t)
        ))
    })?;
    let q: std::collections::VecDeque<_> = payloads
        .iter()
        .map(|&p| Arc::new(crate::value::Message::host(port_id, p)))
        .collect();
    fabric.builder.set_initial(
        fabric.layout.tiss_component(t),
        buf,
        Value::Queue(Arc::new(q)),
    );
    Ok(())
}
