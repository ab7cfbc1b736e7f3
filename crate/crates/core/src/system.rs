//! Composite systems: components glued by connectors under a priority model,
//! executed one interaction per step.
//!
//! Selection order for a step:
//! 1. per connector, the enabled interactions of maximal cardinality;
//! 2. the priority filter over all of those;
//! 3. a uniform draw from the survivors using the seeded [`SimRng`].
//!
//! Within a component, when several enabled transitions share the fired port
//! the first one in declaration order fires.

use std::collections::{BTreeMap, HashMap};

use crate::atomic::{AtomicComponentDef, ComponentState, PortId, VarId};
use crate::connector::{
    ConnectorDef, Interaction, PortData, PortRef, PortSet, MAX_CONNECTOR_PORTS,
};
use crate::error::{BipError, Result};
use crate::priority::{apply_priority, PriorityModel};
use crate::rng::SimRng;
use crate::trace::{Termination, Trace, TraceEvent};
use crate::value::Value;

/// One configuration per component, index-aligned with the system's
/// component list.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState(pub Vec<ComponentState>);

impl SystemState {
    pub fn component(&self, i: usize) -> &ComponentState {
        &self.0[i]
    }
}

pub struct SystemDef {
    components: Vec<AtomicComponentDef>,
    connectors: Vec<ConnectorDef>,
    priorities: PriorityModel,
    init: SystemState,
    tick_connector: Option<usize>,
    // trace labels, precomputed per connector port
    port_labels: Vec<Vec<String>>,
    data_keys: Vec<Vec<Vec<String>>>,
}

/// Updated component states and the port-data snapshot of one firing.
type Executed = (Vec<(usize, ComponentState)>, Vec<(String, i64)>);

impl SystemDef {
    pub fn new(
        components: Vec<AtomicComponentDef>,
        connectors: Vec<ConnectorDef>,
        priorities: PriorityModel,
        init: SystemState,
        tick_connector: Option<usize>,
    ) -> Result<Self> {
        let mut names = HashMap::new();
        for (i, c) in components.iter().enumerate() {
            if names.insert(c.name().to_string(), i).is_some() {
                return Err(BipError::Definition(format!(
                    "duplicate component name {}",
                    c.name()
                )));
            }
        }
        if init.0.len() != components.len() {
            return Err(BipError::Definition(format!(
                "initial state has {} entries for {} components",
                init.0.len(),
                components.len()
            )));
        }
        for (c, s) in components.iter().zip(&init.0) {
            c.check_state(s)?;
        }
        let mut conn_names = HashMap::new();
        for (ci, conn) in connectors.iter().enumerate() {
            if conn_names.insert(conn.name.clone(), ci).is_some() {
                return Err(BipError::Definition(format!(
                    "duplicate connector name {}",
                    conn.name
                )));
            }
            if conn.ports.is_empty() || conn.ports.len() > MAX_CONNECTOR_PORTS {
                return Err(BipError::Definition(format!(
                    "connector {} has {} ports",
                    conn.name,
                    conn.ports.len()
                )));
            }
            let mut used = Vec::new();
            for p in &conn.ports {
                let comp = components.get(p.port.component).ok_or_else(|| {
                    BipError::Definition(format!(
                        "connector {} references unknown component {}",
                        conn.name, p.port.component
                    ))
                })?;
                if p.port.port.0 >= comp.ports().len() {
                    return Err(BipError::Definition(format!(
                        "connector {} references unknown port {} of {}",
                        conn.name,
                        p.port.port.0,
                        comp.name()
                    )));
                }
                if used.contains(&p.port.component) {
                    return Err(BipError::Definition(format!(
                        "connector {} has two ports of component {}",
                        conn.name,
                        comp.name()
                    )));
                }
                used.push(p.port.component);
            }
        }
        if let Some(t) = tick_connector {
            if t >= connectors.len() {
                return Err(BipError::Definition("tick connector out of range".into()));
            }
        }
        for (lo, hi) in priorities.pairs() {
            for a in [lo, hi] {
                let ok = connectors
                    .get(a.connector)
                    .is_some_and(|c| c.is_feasible(a.ports));
                if !ok {
                    return Err(BipError::Definition(format!(
                        "priority refers to an infeasible interaction {a:?}"
                    )));
                }
            }
        }
        let port_labels = connectors
            .iter()
            .map(|c| {
                c.ports
                    .iter()
                    .map(|p| {
                        let comp = &components[p.port.component];
                        format!("{}.{}", comp.name(), comp.port(p.port.port).name)
                    })
                    .collect()
            })
            .collect();
        let data_keys = connectors
            .iter()
            .map(|c| {
                c.ports
                    .iter()
                    .map(|p| {
                        let comp = &components[p.port.component];
                        comp.port(p.port.port)
                            .support
                            .iter()
                            .map(|v| format!("{}.{}", comp.name(), comp.variables()[v.0]))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            components,
            connectors,
            priorities,
            init,
            tick_connector,
            port_labels,
            data_keys,
        })
    }

    pub fn components(&self) -> &[AtomicComponentDef] {
        &self.components
    }

    pub fn connectors(&self) -> &[ConnectorDef] {
        &self.connectors
    }

    pub fn priorities(&self) -> &PriorityModel {
        &self.priorities
    }

    pub fn tick_connector(&self) -> Option<usize> {
        self.tick_connector
    }

    pub fn initial_state(&self) -> SystemState {
        self.init.clone()
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name() == name)
    }

    pub fn connector_index(&self, name: &str) -> Option<usize> {
        self.connectors.iter().position(|c| c.name == name)
    }

    pub fn port_labels(&self, a: &Interaction) -> Vec<String> {
        a.ports
            .iter()
            .map(|i| self.port_labels[a.connector][i].clone())
            .collect()
    }

    pub fn check_state(&self, state: &SystemState) -> Result<()> {
        if state.0.len() != self.components.len() {
            return Err(BipError::Definition(
                "state not aligned with components".into(),
            ));
        }
        for (c, s) in self.components.iter().zip(&state.0) {
            c.check_state(s)?;
        }
        Ok(())
    }

    fn enabled_table(&self, state: &SystemState) -> Result<Vec<Vec<Option<usize>>>> {
        self.components
            .iter()
            .zip(&state.0)
            .map(|(c, s)| c.enabled_by_port(s))
            .collect()
    }

    fn port_data(&self, ci: usize, present: PortSet, state: &SystemState) -> PortData {
        let conn = &self.connectors[ci];
        let values = conn
            .ports
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if present.contains(i) {
                    let comp = &self.components[p.port.component];
                    let v = &state.0[p.port.component].valuation;
                    comp.port(p.port.port)
                        .support
                        .iter()
                        .map(|&var| v.get(var).clone())
                        .collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        PortData::new(present, values)
    }

    fn enabled_ports(&self, ci: usize, table: &[Vec<Option<usize>>]) -> PortSet {
        let mut e = PortSet::default();
        for (i, p) in self.connectors[ci].ports.iter().enumerate() {
            if table[p.port.component][p.port.port.0].is_some() {
                e = e.with(i);
            }
        }
        e
    }

    fn guard(&self, ci: usize, data: &PortData) -> Result<bool> {
        self.connectors[ci].guard_holds(data).map_err(|e| {
            BipError::eval(
                format!("guard of connector {}", self.connectors[ci].name),
                e,
            )
        })
    }

    /// Cardinality-maximal enabled interactions of connector `ci`.
    fn maximal_of(
        &self,
        ci: usize,
        table: &[Vec<Option<usize>>],
        state: &SystemState,
        out: &mut Vec<Interaction>,
    ) -> Result<()> {
        let conn = &self.connectors[ci];
        let enabled = self.enabled_ports(ci, table);
        if enabled.is_empty() {
            return Ok(());
        }
        let full = conn.full_set();
        let triggers = conn.trigger_set();
        let requires = conn.guard.as_ref().map(|g| g.requires).unwrap_or_default();
        if !requires.is_subset(enabled) {
            return Ok(());
        }
        let push = |out: &mut Vec<Interaction>, ports| {
            out.push(Interaction {
                connector: ci,
                ports,
            })
        };
        if !enabled.intersects(triggers) {
            if enabled == full && self.guard(ci, &self.port_data(ci, full, state))? {
                push(out, full);
            }
            return Ok(());
        }
        let data = self.port_data(ci, enabled, state);
        let has_predicate = conn.guard.as_ref().is_some_and(|g| g.has_predicate());
        if !has_predicate {
            push(out, enabled);
            return Ok(());
        }
        if self.guard(ci, &data)? {
            push(out, enabled);
            return Ok(());
        }
        let subsets: Vec<PortSet> = submasks(enabled)
            .filter(|s| *s != enabled && s.intersects(triggers) && requires.is_subset(*s))
            .collect();
        for size in (1..enabled.len()).rev() {
            let mut found = Vec::new();
            for &s in subsets.iter().filter(|s| s.len() == size) {
                let projected = data.with_present(s);
                if self.guard(ci, &projected)? {
                    found.push(s);
                }
            }
            if !found.is_empty() {
                found.sort();
                for s in found {
                    push(out, s);
                }
                return Ok(());
            }
        }
        Ok(())
    }

    fn maximal_with(
        &self,
        table: &[Vec<Option<usize>>],
        state: &SystemState,
    ) -> Result<Vec<Interaction>> {
        let mut out = Vec::new();
        for ci in 0..self.connectors.len() {
            self.maximal_of(ci, table, state, &mut out)?;
        }
        Ok(out)
    }

    fn execute(
        &self,
        a: Interaction,
        table: &[Vec<Option<usize>>],
        state: &SystemState,
    ) -> Result<Executed> {
        let conn = &self.connectors[a.connector];
        let mut data = self.port_data(a.connector, a.ports, state);
        if let Some(t) = &conn.transfer {
            t.apply(&mut data)
                .map_err(|e| BipError::eval(format!("transfer of connector {}", conn.name), e))?;
        }
        let mut updated = Vec::with_capacity(a.ports.len());
        let mut snapshot = Vec::new();
        for i in a.ports.iter() {
            let r = conn.ports[i].port;
            let comp = &self.components[r.component];
            let t = table[r.component][r.port.0].unwrap_or_else(|| {
                panic!(
                    "selected interaction of {} involves {} without an enabled transition",
                    conn.name,
                    comp.name()
                )
            });
            let support = &comp.port(r.port).support;
            let values: Vec<(VarId, Value)> = support
                .iter()
                .copied()
                .zip(data.port_values(i).iter().cloned())
                .collect();
            let next = comp.fire(&state.0[r.component], t, &values)?;
            for (var, key) in support.iter().zip(&self.data_keys[a.connector][i]) {
                next.valuation.get(*var).render_into(key, &mut snapshot);
            }
            updated.push((r.component, next));
        }
        Ok((updated, snapshot))
    }
}

fn submasks(set: PortSet) -> impl Iterator<Item = PortSet> {
    let full = set.0;
    let mut cur = Some(full);
    std::iter::from_fn(move || {
        let c = cur?;
        cur = if c == 0 { None } else { Some((c - 1) & full) };
        if c == 0 {
            None
        } else {
            Some(PortSet(c))
        }
    })
}

/// Every enabled interaction of every connector: feasible, all ports
/// enabled and connector guard true on the projected data.
///
/// Exponential in connector size; meant for small systems and for checking
/// the engine's maximal-candidate computation.
pub fn enabled_interactions(sys: &SystemDef, state: &SystemState) -> Result<Vec<Interaction>> {
    sys.check_state(state)?;
    let table = sys.enabled_table(state)?;
    let mut out = Vec::new();
    for (ci, conn) in sys.connectors.iter().enumerate() {
        let enabled = sys.enabled_ports(ci, &table);
        let data = sys.port_data(ci, enabled, state);
        let mut found: Vec<PortSet> = Vec::new();
        for s in submasks(enabled) {
            if conn.is_feasible(s) && sys.guard(ci, &data.with_present(s))? {
                found.push(s);
            }
        }
        found.sort();
        out.extend(found.into_iter().map(|ports| Interaction {
            connector: ci,
            ports,
        }));
    }
    Ok(out)
}

/// Enabled interactions that are cardinality-maximal within their connector.
pub fn maximal_interactions(sys: &SystemDef, state: &SystemState) -> Result<Vec<Interaction>> {
    sys.check_state(state)?;
    let table = sys.enabled_table(state)?;
    sys.maximal_with(&table, state)
}

/// Keeps, per connector, the candidates with the most ports and draws one of
/// the remaining candidates uniformly. `None` signals quiescence.
pub fn select_interaction(filtered: &[Interaction], rng: &mut SimRng) -> Option<Interaction> {
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    for a in filtered {
        let e = best.entry(a.connector).or_insert(0);
        *e = (*e).max(a.ports.len());
    }
    let mut candidates: Vec<Interaction> = filtered
        .iter()
        .filter(|a| a.ports.len() == best[&a.connector])
        .copied()
        .collect();
    candidates.sort();
    candidates.dedup();
    match candidates.len() {
        0 => None,
        1 => Some(candidates[0]),
        n => Some(candidates[rng.below(n)]),
    }
}

/// Result of one step of the composite semantics.
#[derive(Clone, Debug, PartialEq)]
pub struct Fired {
    pub interaction: Interaction,
    pub ports: Vec<String>,
    pub data: Vec<(String, i64)>,
}

/// One step from `state`: `None` when no interaction is enabled.
pub fn step(
    sys: &SystemDef,
    state: &SystemState,
    rng: &mut SimRng,
) -> Result<Option<(SystemState, Fired)>> {
    sys.check_state(state)?;
    let table = sys.enabled_table(state)?;
    let maximal = sys.maximal_with(&table, state)?;
    let filtered = apply_priority(&maximal, &sys.priorities);
    let Some(a) = select_interaction(&filtered, rng) else {
        return Ok(None);
    };
    let (updated, data) = sys.execute(a, &table, state)?;
    let mut next = state.clone();
    for (i, s) in updated {
        next.0[i] = s;
    }
    Ok(Some((
        next,
        Fired {
            interaction: a,
            ports: sys.port_labels(&a),
            data,
        },
    )))
}

/// Runs `sys` from its initial state for at most `max_steps` steps.
pub fn run(sys: &SystemDef, max_steps: u64, seed: u64) -> Result<Trace> {
    Simulation::new(sys, seed).run(max_steps)
}

/// Stateful stepping engine. Caches per-component enabledness and only
/// recomputes it for the components touched by the last step.
pub struct Simulation<'a> {
    sys: &'a SystemDef,
    state: SystemState,
    rng: SimRng,
    steps: u64,
    ticks: u64,
    table: Vec<Vec<Option<usize>>>,
    dirty: Vec<bool>,
}

impl<'a> Simulation<'a> {
    pub fn new(sys: &'a SystemDef, seed: u64) -> Self {
        Self::with_state(sys, sys.initial_state(), seed)
    }

    pub fn with_state(sys: &'a SystemDef, state: SystemState, seed: u64) -> Self {
        let n = sys.components.len();
        Self {
            sys,
            state,
            rng: SimRng::new(seed),
            steps: 0,
            ticks: 0,
            table: vec![Vec::new(); n],
            dirty: vec![true; n],
        }
    }

    pub fn system(&self) -> &SystemDef {
        self.sys
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn refresh(&mut self) -> Result<()> {
        for i in 0..self.dirty.len() {
            if self.dirty[i] {
                self.table[i] = self.sys.components[i].enabled_by_port(&self.state.0[i])?;
                self.dirty[i] = false;
            }
        }
        Ok(())
    }

    /// Candidates after the maximality and priority filters.
    pub fn candidates(&mut self) -> Result<Vec<Interaction>> {
        self.refresh()?;
        let maximal = self.sys.maximal_with(&self.table, &self.state)?;
        Ok(apply_priority(&maximal, &self.sys.priorities))
    }

    pub fn step(&mut self) -> Result<Option<TraceEvent>> {
        let filtered = self.candidates()?;
        let Some(a) = select_interaction(&filtered, &mut self.rng) else {
            return Ok(None);
        };
        let (updated, data) = self.sys.execute(a, &self.table, &self.state)?;
        for (i, s) in updated {
            self.state.0[i] = s;
            self.dirty[i] = true;
        }
        if self.sys.tick_connector == Some(a.connector) {
            self.ticks += 1;
        }
        let event = TraceEvent {
            step: self.steps,
            tick: self.ticks,
            connector: self.sys.connectors[a.connector].name.clone(),
            ports: self.sys.port_labels(&a),
            data,
        };
        self.steps += 1;
        Ok(Some(event))
    }

    pub fn run(&mut self, max_steps: u64) -> Result<Trace> {
        let mut events = Vec::new();
        while (events.len() as u64) < max_steps {
            match self.step()? {
                Some(e) => events.push(e),
                None => {
                    return Ok(Trace {
                        events,
                        termination: Termination::Quiescent,
                    })
                }
            }
        }
        Ok(Trace {
            events,
            termination: Termination::StepLimit,
        })
    }
}

/// Flat composition: components and connectors are collected here and
/// checked once by [`SystemBuilder::build`]. Nested composites are flattened
/// into this single level by whoever builds them.
#[derive(Default)]
pub struct SystemBuilder {
    components: Vec<AtomicComponentDef>,
    init: Vec<ComponentState>,
    connectors: Vec<ConnectorDef>,
    priorities: Vec<(Interaction, Interaction)>,
    tick_connector: Option<usize>,
}

impl SystemBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_component(&mut self, def: AtomicComponentDef) -> usize {
        self.init.push(def.initial_state());
        self.components.push(def);
        self.components.len() - 1
    }

    pub fn component(&self, i: usize) -> &AtomicComponentDef {
        &self.components[i]
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name() == name)
    }

    /// Reference to port `name` of component `i`.
    pub fn port_ref(&self, i: usize, name: &str) -> Result<PortRef> {
        let c = &self.components[i];
        let port = c
            .port_id(name)
            .ok_or_else(|| BipError::Build(format!("component {} has no port {name}", c.name())))?;
        Ok(PortRef { component: i, port })
    }

    pub fn add_connector(&mut self, def: ConnectorDef) -> usize {
        self.connectors.push(def);
        self.connectors.len() - 1
    }

    pub fn connector(&self, i: usize) -> &ConnectorDef {
        &self.connectors[i]
    }

    pub fn connector_mut(&mut self, i: usize) -> &mut ConnectorDef {
        &mut self.connectors[i]
    }

    pub fn connector_index(&self, name: &str) -> Option<usize> {
        self.connectors.iter().position(|c| c.name == name)
    }

    pub fn connectors(&self) -> &[ConnectorDef] {
        &self.connectors
    }

    pub fn set_tick_connector(&mut self, i: usize) {
        self.tick_connector = Some(i);
    }

    pub fn tick_connector(&self) -> Option<usize> {
        self.tick_connector
    }

    pub fn prefer(&mut self, lower: Interaction, higher: Interaction) {
        self.priorities.push((lower, higher));
    }

    /// `lower ≺ higher` on the full port sets of two named connectors.
    pub fn prefer_connectors(&mut self, lower: &str, higher: &str) -> Result<()> {
        let find = |n: &str| {
            self.connector_index(n)
                .ok_or_else(|| BipError::Build(format!("unknown connector {n} in priority")))
        };
        let (l, h) = (find(lower)?, find(higher)?);
        let lower = Interaction {
            connector: l,
            ports: self.connectors[l].full_set(),
        };
        let higher = Interaction {
            connector: h,
            ports: self.connectors[h].full_set(),
        };
        self.prefer(lower, higher);
        Ok(())
    }

    /// Overrides the initial value of one variable.
    pub fn set_initial(&mut self, component: usize, var: VarId, value: Value) {
        self.init[component].valuation.set(var, value);
    }

    pub fn build(self) -> Result<SystemDef> {
        let priorities = PriorityModel::new(self.priorities)?;
        SystemDef::new(
            self.components,
            self.connectors,
            priorities,
            SystemState(self.init),
            self.tick_connector,
        )
    }
}

/// Reference to a component port by index, for tests and builders.
pub fn port(component: usize, port: usize) -> PortRef {
    PortRef {
        component,
        port: PortId(port),
    }
}
