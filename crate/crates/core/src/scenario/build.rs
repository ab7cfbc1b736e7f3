use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

use crate::connector::{ConnectorDef, Transfer};
use crate::error::{BipError, Result};
use crate::host::{
    make_actuator, make_application, make_comm_service, make_sensor, make_voting_service,
    ActuatorSpec, CommPorts, Endpoints,
};
use crate::system::SystemDef;
use crate::ttnoc::{build_ttsoc, FabricLayout};
use crate::value::TissIdx;

use super::model::{HostKind, RunParams, Scenario};
use super::print::print_scenario;

/// Step names and time slices of one application, indexed by step number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppInfo {
    pub name: String,
    pub steps: Vec<String>,
    pub slices: Vec<u32>,
}

/// A scenario turned into an executable system.
pub struct BuiltScenario {
    pub system: SystemDef,
    pub layout: FabricLayout,
    pub actuators: Vec<ActuatorSpec>,
    pub apps: Vec<AppInfo>,
    pub run: RunParams,
    /// SHA-256 of the canonical printed scenario, hex encoded.
    pub hash: String,
}

pub fn scenario_hash(s: &Scenario) -> String {
    let digest = Sha256::digest(print_scenario(s).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Whether `name` matches `pattern`, which may contain one `*`.
pub fn matches_pattern(pattern: &str, name: &str) -> bool {
    match pattern.split_once('*') {
        None => pattern == name,
        Some((pre, post)) => {
            name.len() >= pre.len() + post.len() && name.starts_with(pre) && name.ends_with(post)
        }
    }
}

fn copy_connector(name: String, from: crate::PortRef, to: crate::PortRef) -> ConnectorDef {
    ConnectorDef::rendezvous(name, &[from, to]).with_transfer(Transfer::copy((0, 0), (1, 0)))
}

/// Builds fabric, communication services, host components, their
/// connectors and the declared priorities. The schedule is not validated
/// here; see [`super::validate_schedule`].
pub fn build_scenario(s: &Scenario) -> Result<BuiltScenario> {
    let entries = s.entries().map_err(|missing| {
        BipError::Build(format!(
            "entries without phase: {}; run suggest first",
            missing.join(", ")
        ))
    })?;
    let topo = &s.topology;
    let mut problems = Vec::new();

    // per-TISS endpoints: what each host sends and receives
    struct HostPart {
        name: String,
        tiss: TissIdx,
        def: crate::AtomicComponentDef,
        ends: Endpoints,
        sends: Vec<u32>,
    }
    let mut parts: Vec<HostPart> = Vec::new();
    let mut explicit_comm: BTreeMap<TissIdx, String> = BTreeMap::new();
    let mut actuators = Vec::new();
    let mut apps = Vec::new();
    for h in &s.hosts {
        let built = match &h.kind {
            HostKind::Comm => {
                if explicit_comm.insert(h.tiss, h.name.clone()).is_some() {
                    problems.push(format!(
                        "two communication services at {}",
                        topo.tiss[h.tiss as usize]
                    ));
                }
                continue;
            }
            HostKind::App { machine } => {
                let m = s.machine(machine).ok_or_else(|| {
                    BipError::Build(format!("app {} uses unknown machine {machine}", h.name))
                })?;
                let (def, ends, mb) = make_application(&h.name, m)?;
                apps.push(AppInfo {
                    name: h.name.clone(),
                    steps: m.steps.iter().map(|x| x.name.clone()).collect(),
                    slices: m.steps.iter().map(|x| x.time_slice).collect(),
                });
                (def, ends, mb.send_ports)
            }
            HostKind::Sensor {
                port,
                stimulus,
                period,
            } => {
                let (def, ends) = make_sensor(&h.name, *port, stimulus.clone(), *period)?;
                (def, ends, vec![*port])
            }
            HostKind::Voter { inputs, output } => {
                let (def, ends) = make_voting_service(&h.name, inputs, *output)?;
                (def, ends, vec![*output])
            }
            HostKind::Actuator { port, sink } => {
                let (def, ends) = make_actuator(&h.name, *port)?;
                actuators.push(ActuatorSpec {
                    id: h.name.clone(),
                    sink: sink
                        .clone()
                        .unwrap_or_else(|| format!("{}.status", h.name))
                        .into(),
                });
                (def, ends, Vec::new())
            }
        };
        parts.push(HostPart {
            name: h.name.clone(),
            tiss: h.tiss,
            def: built.0,
            ends: built.1,
            sends: built.2,
        });
    }

    let mut receivers: BTreeMap<(TissIdx, u32), &str> = BTreeMap::new();
    for p in &parts {
        let tname = &topo.tiss[p.tiss as usize];
        for &pid in &p.sends {
            if !entries
                .iter()
                .any(|e| e.source == p.tiss && e.port_id == pid)
            {
                problems.push(format!(
                    "{} sends port {pid} but {tname} has no schedule entry for it",
                    p.name
                ));
            }
        }
        for (pid, _) in &p.ends.receive {
            if let Some(other) = receivers.insert((p.tiss, *pid), &p.name) {
                problems.push(format!(
                    "port {pid} at {tname} has two receivers, {other} and {}",
                    p.name
                ));
            }
            if !entries
                .iter()
                .any(|e| e.target == p.tiss && e.port_id == *pid)
            {
                problems.push(format!(
                    "{} receives port {pid} but no schedule entry delivers it to {tname}",
                    p.name
                ));
            }
        }
    }
    let hosted: BTreeSet<TissIdx> = parts
        .iter()
        .map(|p| p.tiss)
        .chain(explicit_comm.keys().copied())
        .collect();
    for (decl, e) in s.schedule.iter().zip(&entries) {
        if hosted.contains(&e.target) && !receivers.contains_key(&(e.target, e.port_id)) {
            problems.push(format!(
                "{} delivers port {} to {} where nothing receives it",
                s.entry_label(decl),
                e.port_id,
                topo.tiss[e.target as usize]
            ));
        }
    }
    if !problems.is_empty() {
        return Err(BipError::Build(problems.join("; ")));
    }

    let mut fabric = build_ttsoc(topo, &entries)?;
    let mut comms: BTreeMap<TissIdx, usize> = BTreeMap::new();
    for &t in &hosted {
        let tname = topo.tiss[t as usize].clone();
        let name = explicit_comm
            .get(&t)
            .cloned()
            .unwrap_or_else(|| format!("comm_{tname}"));
        let inbound: Vec<u32> = receivers
            .keys()
            .filter(|(x, _)| *x == t)
            .map(|(_, p)| *p)
            .collect();
        let c = fabric
            .builder
            .add_component(make_comm_service(&name, &inbound)?);
        comms.insert(t, c);
        let b = &fabric.builder;
        let c2t = copy_connector(
            format!("c2t_{tname}"),
            b.port_ref(c, CommPorts::NAMES.to_tiss)?,
            fabric.tiss_port(t, "core2tiss_io")?,
        );
        let t2c = copy_connector(
            format!("t2c_{tname}"),
            fabric.tiss_port(t, "tiss2core")?,
            b.port_ref(c, CommPorts::NAMES.from_tiss)?,
        );
        fabric.builder.add_connector(c2t);
        fabric.builder.add_connector(t2c);
    }
    for p in parts {
        let comm = comms[&p.tiss];
        let idx = fabric.builder.add_component(p.def);
        let b = &fabric.builder;
        let mut new = Vec::new();
        if let Some(port) = &p.ends.send {
            new.push(copy_connector(
                format!("send_{}", p.name),
                b.port_ref(idx, port)?,
                b.port_ref(comm, CommPorts::NAMES.from_client)?,
            ));
        }
        for (pid, port) in &p.ends.receive {
            new.push(copy_connector(
                format!("recv_{}_{pid}", p.name),
                b.port_ref(comm, &CommPorts::to_client(*pid))?,
                b.port_ref(idx, port)?,
            ));
        }
        for internal in ["compute", "flush", "branch"] {
            if let Ok(r) = b.port_ref(idx, internal) {
                new.push(ConnectorDef::rendezvous(
                    format!("{internal}_{}", p.name),
                    &[r],
                ));
            }
        }
        if let Some(tick) = &p.ends.tick {
            let r = b.port_ref(idx, tick)?;
            fabric.add_tick_listener(r);
        }
        for c in new {
            fabric.builder.add_connector(c);
        }
    }

    let names: Vec<String> = fabric
        .builder
        .connectors()
        .iter()
        .map(|c| c.name.clone())
        .collect();
    let expand = |pats: &[String]| -> Result<Vec<String>> {
        let mut out = Vec::new();
        for p in pats {
            let m: Vec<String> = names
                .iter()
                .filter(|n| matches_pattern(p, n))
                .cloned()
                .collect();
            if m.is_empty() {
                return Err(BipError::Build(format!(
                    "priority pattern `{p}` matches no connector"
                )));
            }
            out.extend(m);
        }
        Ok(out)
    };
    for decl in &s.priorities {
        let lower = expand(&decl.lower)?;
        let higher = expand(&decl.higher)?;
        for l in &lower {
            for h in &higher {
                if l != h {
                    fabric.builder.prefer_connectors(l, h)?;
                }
            }
        }
    }
    let layout = fabric.layout.clone();
    let system = fabric.builder.build()?;
    Ok(BuiltScenario {
        system,
        layout,
        actuators,
        apps,
        run: s.run.clone(),
        hash: scenario_hash(s),
    })
}
