//! Atomic components: guarded labelled transition systems over a variable
//! valuation.
//!
//! A transition `(l, p, g, f, l')` can fire from configuration `(l, v)` when
//! `g(v)` holds. Firing first overwrites the variables attached to `p` with the
//! values supplied through the port and then runs `f`.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{BipError, EvalError, Result};
use crate::value::{Message, MsgQueue, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortId(pub usize);

/// Total map from a component's declared variables to values.
#[derive(Clone, Debug, PartialEq)]
pub struct Valuation(Vec<Value>);

impl Valuation {
    pub fn new(values: Vec<Value>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, var: VarId) -> &Value {
        &self.0[var.0]
    }

    pub fn set(&mut self, var: VarId, value: Value) {
        self.0[var.0] = value;
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn int(&self, var: VarId) -> Result<i64, EvalError> {
        self.get(var).as_int()
    }

    pub fn bool(&self, var: VarId) -> Result<bool, EvalError> {
        self.get(var).as_bool()
    }

    pub fn msg(&self, var: VarId) -> Result<Option<&Arc<Message>>, EvalError> {
        self.get(var).as_msg()
    }

    pub fn queue(&self, var: VarId) -> Result<&MsgQueue, EvalError> {
        self.get(var).as_queue()
    }

    pub fn set_int(&mut self, var: VarId, value: i64) {
        self.set(var, Value::Int(value));
    }

    pub fn set_bool(&mut self, var: VarId, value: bool) {
        self.set(var, Value::Bool(value));
    }

    /// Mutable access to a queue variable; the queue is cloned if shared.
    pub fn queue_mut(
        &mut self,
        var: VarId,
    ) -> Result<&mut std::collections::VecDeque<Arc<Message>>, EvalError> {
        match &mut self.0[var.0] {
            Value::Queue(q) => Ok(Arc::make_mut(q)),
            other => Err(EvalError::Type {
                expected: "queue",
                found: other.kind(),
            }),
        }
    }
}

type GuardFn = dyn Fn(&Valuation) -> Result<bool, EvalError> + Send + Sync;
type UpdateFn = dyn Fn(&mut Valuation) -> Result<(), EvalError> + Send + Sync;

/// A named boolean condition over a valuation.
#[derive(Clone)]
pub struct Guard {
    name: Arc<str>,
    f: Arc<GuardFn>,
}

impl Guard {
    pub fn new(
        name: &str,
        f: impl Fn(&Valuation) -> Result<bool, EvalError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, v: &Valuation) -> Result<bool, EvalError> {
        (self.f)(v)
    }
}

impl fmt::Debug for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Guard({})", self.name)
    }
}

/// A named computation step over a valuation.
#[derive(Clone)]
pub struct Update {
    name: Arc<str>,
    f: Arc<UpdateFn>,
}

impl Update {
    pub fn new(
        name: &str,
        f: impl Fn(&mut Valuation) -> Result<(), EvalError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, v: &mut Valuation) -> Result<(), EvalError> {
        (self.f)(v)
    }
}

impl fmt::Debug for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Update({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub struct PortDecl {
    pub name: String,
    /// Variables attached to the port, in transfer order.
    pub support: Vec<VarId>,
}

#[derive(Clone, Debug)]
pub struct TransitionDef {
    pub source: LocId,
    pub port: PortId,
    pub target: LocId,
    /// `None` means the guard is always true.
    pub guard: Option<Guard>,
    /// `None` means the identity update.
    pub update: Option<Update>,
}

impl TransitionDef {
    pub fn new(source: LocId, port: PortId, target: LocId) -> Self {
        Self {
            source,
            port,
            target,
            guard: None,
            update: None,
        }
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn with_update(mut self, update: Update) -> Self {
        self.update = Some(update);
        self
    }

    fn guard_holds(&self, v: &Valuation) -> Result<bool, EvalError> {
        match &self.guard {
            Some(g) => g.eval(v),
            None => Ok(true),
        }
    }
}

/// Configuration `(l, v)` of an atomic component.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentState {
    pub location: LocId,
    pub valuation: Valuation,
}

#[derive(Clone, Debug)]
pub struct AtomicComponentDef {
    name: String,
    ports: Vec<PortDecl>,
    locations: Vec<String>,
    transitions: Vec<TransitionDef>,
    variables: Vec<String>,
    initial_valuation: Valuation,
    initial_location: LocId,
    // transition indices grouped by source location, declaration order kept
    outgoing: Vec<Vec<usize>>,
}

impl AtomicComponentDef {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ports(&self) -> &[PortDecl] {
        &self.ports
    }

    pub fn port(&self, id: PortId) -> &PortDecl {
        &self.ports[id.0]
    }

    pub fn locations(&self) -> &[String] {
        &self.locations
    }

    pub fn transitions(&self) -> &[TransitionDef] {
        &self.transitions
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn initial_location(&self) -> LocId {
        self.initial_location
    }

    pub fn port_id(&self, name: &str) -> Option<PortId> {
        self.ports.iter().position(|p| p.name == name).map(PortId)
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v == name).map(VarId)
    }

    pub fn location_id(&self, name: &str) -> Option<LocId> {
        self.locations.iter().position(|l| l == name).map(LocId)
    }

    pub fn location_name(&self, id: LocId) -> &str {
        &self.locations[id.0]
    }

    pub fn initial_state(&self) -> ComponentState {
        ComponentState {
            location: self.initial_location,
            valuation: self.initial_valuation.clone(),
        }
    }

    pub fn check_state(&self, state: &ComponentState) -> Result<()> {
        if state.location.0 >= self.locations.len() {
            return Err(BipError::Definition(format!(
                "{}: unknown location index {}",
                self.name, state.location.0
            )));
        }
        if state.valuation.len() != self.variables.len() {
            return Err(BipError::Definition(format!(
                "{}: valuation has {} entries, {} variables declared",
                self.name,
                state.valuation.len(),
                self.variables.len()
            )));
        }
        Ok(())
    }

    /// Indices of the transitions enabled in `state`, in declaration order.
    pub fn enabled_indices(&self, state: &ComponentState) -> Result<Vec<usize>> {
        self.check_state(state)?;
        let mut out = Vec::new();
        for &i in &self.outgoing[state.location.0] {
            if self.eval_guard(i, &state.valuation)? {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// The transitions enabled in `state`, in declaration order.
    pub fn enabled_transitions(&self, state: &ComponentState) -> Result<Vec<&TransitionDef>> {
        Ok(self
            .enabled_indices(state)?
            .into_iter()
            .map(|i| &self.transitions[i])
            .collect())
    }

    /// First enabled transition labelled `port`, if any. This is the one the
    /// composite step fires when several transitions share a port.
    pub fn first_enabled_on(&self, state: &ComponentState, port: PortId) -> Result<Option<usize>> {
        for &i in &self.outgoing[state.location.0] {
            if self.transitions[i].port == port && self.eval_guard(i, &state.valuation)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// Per-port first enabled transition for every port of the component.
    pub(crate) fn enabled_by_port(&self, state: &ComponentState) -> Result<Vec<Option<usize>>> {
        let mut out = vec![None; self.ports.len()];
        for &i in &self.outgoing[state.location.0] {
            let p = self.transitions[i].port.0;
            if out[p].is_none() && self.eval_guard(i, &state.valuation)? {
                out[p] = Some(i);
            }
        }
        Ok(out)
    }

    fn eval_guard(&self, i: usize, v: &Valuation) -> Result<bool> {
        self.transitions[i]
            .guard_holds(v)
            .map_err(|e| BipError::eval(format!("{} guard of transition {i}", self.name), e))
    }

    /// Fires transition `t` with the given values for its port's support set.
    ///
    /// Port-attached variables are overwritten first, then the update runs.
    pub fn fire(
        &self,
        state: &ComponentState,
        t: usize,
        port_values: &[(VarId, Value)],
    ) -> Result<ComponentState> {
        self.check_state(state)?;
        let tr = self.transitions.get(t).ok_or_else(|| {
            BipError::Definition(format!("{}: no transition with index {t}", self.name))
        })?;
        if tr.source != state.location || !self.eval_guard(t, &state.valuation)? {
            return Err(BipError::Semantics(format!(
                "{}: transition {t} on port {} is not enabled at {}",
                self.name, self.ports[tr.port.0].name, self.locations[state.location.0]
            )));
        }
        let support = &self.ports[tr.port.0].support;
        let keys: HashSet<VarId> = port_values.iter().map(|(k, _)| *k).collect();
        let expected: HashSet<VarId> = support.iter().copied().collect();
        if keys != expected || keys.len() != port_values.len() {
            return Err(BipError::Definition(format!(
                "{}: port values for {} must cover exactly its support set",
                self.name, self.ports[tr.port.0].name
            )));
        }
        let mut valuation = state.valuation.clone();
        for (var, value) in port_values {
            valuation.set(*var, value.clone());
        }
        if let Some(u) = &tr.update {
            u.apply(&mut valuation)
                .map_err(|e| BipError::eval(format!("{} update {}", self.name, u.name()), e))?;
        }
        Ok(ComponentState {
            location: tr.target,
            valuation,
        })
    }
}

/// Incremental constructor for [`AtomicComponentDef`].
#[derive(Debug)]
pub struct AtomicBuilder {
    name: String,
    variables: Vec<String>,
    init: Vec<Value>,
    locations: Vec<String>,
    ports: Vec<PortDecl>,
    transitions: Vec<TransitionDef>,
    initial: Option<LocId>,
}

impl AtomicBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            init: Vec::new(),
            locations: Vec::new(),
            ports: Vec::new(),
            transitions: Vec::new(),
            initial: None,
        }
    }

    pub fn var(&mut self, name: impl Into<String>, init: Value) -> VarId {
        self.variables.push(name.into());
        self.init.push(init);
        VarId(self.variables.len() - 1)
    }

    pub fn location(&mut self, name: impl Into<String>) -> LocId {
        self.locations.push(name.into());
        LocId(self.locations.len() - 1)
    }

    pub fn port(&mut self, name: impl Into<String>, support: &[VarId]) -> PortId {
        self.ports.push(PortDecl {
            name: name.into(),
            support: support.to_vec(),
        });
        PortId(self.ports.len() - 1)
    }

    pub fn transition(&mut self, t: TransitionDef) -> &mut Self {
        self.transitions.push(t);
        self
    }

    pub fn initial(&mut self, loc: LocId) -> &mut Self {
        self.initial = Some(loc);
        self
    }

    pub fn build(self) -> Result<AtomicComponentDef> {
        let err = |m: String| Err(BipError::Definition(format!("{}: {m}", self.name)));
        if self.locations.is_empty() {
            return err("no locations".into());
        }
        for (what, names) in [("variable", &self.variables), ("location", &self.locations)] {
            let mut seen = HashSet::new();
            for n in names {
                if !seen.insert(n) {
                    return err(format!("duplicate {what} {n}"));
                }
            }
        }
        let mut seen = HashSet::new();
        for p in &self.ports {
            if !seen.insert(&p.name) {
                return err(format!("duplicate port {}", p.name));
            }
            if let Some(v) = p.support.iter().find(|v| v.0 >= self.variables.len()) {
                return err(format!("port {} attaches unknown variable {}", p.name, v.0));
            }
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if t.source.0 >= self.locations.len() || t.target.0 >= self.locations.len() {
                return err(format!("transition {i} references an unknown location"));
            }
            if t.port.0 >= self.ports.len() {
                return err(format!("transition {i} references an unknown port"));
            }
        }
        let initial = self.initial.unwrap_or(LocId(0));
        if initial.0 >= self.locations.len() {
            return err("initial location out of range".into());
        }
        let mut outgoing = vec![Vec::new(); self.locations.len()];
        for (i, t) in self.transitions.iter().enumerate() {
            outgoing[t.source.0].push(i);
        }
        Ok(AtomicComponentDef {
            name: self.name,
            ports: self.ports,
            locations: self.locations,
            transitions: self.transitions,
            variables: self.variables,
            initial_valuation: Valuation(self.init),
            initial_location: initial,
            outgoing,
        })
    }
}
