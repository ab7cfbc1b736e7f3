//! Connectors and the interactions they allow.
//!
//! A connector's interactions are the nonempty port subsets that either
//! contain a trigger or are the full port set. Guards and transfers are
//! defined over all attached variables; an interaction sees the projection
//! onto its own ports, so variables of absent ports are unavailable.

use std::fmt;
use std::sync::Arc;

use crate::atomic::PortId;
use crate::error::EvalError;
use crate::value::Value;

/// Maximum number of ports a single connector may carry.
pub const MAX_CONNECTOR_PORTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortRef {
    pub component: usize,
    pub port: PortId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PortKind {
    Trigger,
    Synchron,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConnectorPort {
    pub port: PortRef,
    pub kind: PortKind,
}

/// Subset of a connector's ports, as a bitmask over port positions.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortSet(pub u64);

impl PortSet {
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            PortSet(u64::MAX)
        } else {
            PortSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        PortSet(self.0 | 1 << i)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: PortSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: PortSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..64).filter(move |i| bits >> i & 1 == 1)
    }
}

impl fmt::Debug for PortSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Attached-variable values of the ports taking part in an interaction,
/// indexed by connector port position and then by support-set position.
#[derive(Clone, Debug, PartialEq)]
pub struct PortData {
    present: PortSet,
    values: Vec<Vec<Value>>,
}

impl PortData {
    pub fn new(present: PortSet, values: Vec<Vec<Value>>) -> Self {
        Self { present, values }
    }

    pub fn present(&self) -> PortSet {
        self.present
    }

    pub fn get(&self, port: usize, var: usize) -> Option<&Value> {
        if self.present.contains(port) {
            self.values.get(port).and_then(|v| v.get(var))
        } else {
            None
        }
    }

    /// Writes a value; writes to ports outside the interaction are dropped,
    /// which is the projection of the transfer onto the interaction.
    pub fn set(&mut self, port: usize, var: usize, value: Value) {
        if self.present.contains(port) {
            if let Some(slot) = self.values.get_mut(port).and_then(|v| v.get_mut(var)) {
                *slot = value;
            }
        }
    }

    /// Same values, restricted to `present` (which must be a subset).
    pub fn with_present(&self, present: PortSet) -> PortData {
        PortData {
            present: PortSet(present.0 & self.present.0),
            values: self.values.clone(),
        }
    }

    pub fn port_values(&self, port: usize) -> &[Value] {
        &self.values[port]
    }
}

type PredicateFn = dyn Fn(&PortData) -> Result<bool, EvalError> + Send + Sync;
type TransferFn = dyn Fn(&mut PortData) -> Result<(), EvalError> + Send + Sync;

/// Connector guard `G`.
///
/// `requires` lists the ports whose variables the guard reads
/// unconditionally; its projection onto an interaction missing one of them
/// is false. `predicate` is evaluated on the projected data.
#[derive(Clone)]
pub struct ConnectorGuard {
    pub name: Arc<str>,
    pub requires: PortSet,
    predicate: Option<Arc<PredicateFn>>,
}

impl ConnectorGuard {
    pub fn new(
        name: &str,
        f: impl Fn(&PortData) -> Result<bool, EvalError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            requires: PortSet::default(),
            predicate: Some(Arc::new(f)),
        }
    }

    pub fn requiring(name: &str, requires: PortSet) -> Self {
        Self {
            name: name.into(),
            requires,
            predicate: None,
        }
    }

    pub fn and_requiring(mut self, requires: PortSet) -> Self {
        self.requires = PortSet(self.requires.0 | requires.0);
        self
    }

    pub fn always_false() -> Self {
        Self::new("false", |_| Ok(false))
    }

    pub fn has_predicate(&self) -> bool {
        self.predicate.is_some()
    }

    pub fn eval(&self, data: &PortData) -> Result<bool, EvalError> {
        if !self.requires.is_subset(data.present()) {
            return Ok(false);
        }
        match &self.predicate {
            Some(p) => p(data),
            None => Ok(true),
        }
    }
}

impl fmt::Debug for ConnectorGuard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ConnectorGuard({}, requires {:?})",
            self.name, self.requires
        )
    }
}

/// Connector update `F`, run on the projected data before the involved
/// components fire.
#[derive(Clone)]
pub struct Transfer {
    pub name: Arc<str>,
    f: Arc<TransferFn>,
}

impl Transfer {
    pub fn new(
        name: &str,
        f: impl Fn(&mut PortData) -> Result<(), EvalError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// `dst := src`, both given as (connector port, support position).
    pub fn copy(src: (usize, usize), dst: (usize, usize)) -> Self {
        Self::new("copy", move |d| {
            if let Some(v) = d.get(src.0, src.1).cloned() {
                d.set(dst.0, dst.1, v);
            }
            Ok(())
        })
    }

    pub fn apply(&self, data: &mut PortData) -> Result<(), EvalError> {
        (self.f)(data)
    }
}

impl fmt::Debug for Transfer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Transfer({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub struct ConnectorDef {
    pub name: String,
    pub ports: Vec<ConnectorPort>,
    pub guard: Option<ConnectorGuard>,
    pub transfer: Option<Transfer>,
}

impl ConnectorDef {
    pub fn new(name: impl Into<String>, ports: Vec<ConnectorPort>) -> Self {
        Self {
            name: name.into(),
            ports,
            guard: None,
            transfer: None,
        }
    }

    /// All ports synchron: only the full set is an interaction.
    pub fn rendezvous(name: impl Into<String>, ports: &[PortRef]) -> Self {
        Self::new(
            name,
            ports
                .iter()
                .map(|&port| ConnectorPort {
                    port,
                    kind: PortKind::Synchron,
                })
                .collect(),
        )
    }

    /// `trigger` first, then synchron receivers.
    pub fn broadcast(name: impl Into<String>, trigger: PortRef, receivers: &[PortRef]) -> Self {
        let mut ports = vec![ConnectorPort {
            port: trigger,
            kind: PortKind::Trigger,
        }];
        ports.extend(receivers.iter().map(|&port| ConnectorPort {
            port,
            kind: PortKind::Synchron,
        }));
        Self::new(name, ports)
    }

    pub fn with_guard(mut self, guard: ConnectorGuard) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn with_transfer(mut self, transfer: Transfer) -> Self {
        self.transfer = Some(transfer);
        self
    }

    pub fn full_set(&self) -> PortSet {
        PortSet::full(self.ports.len())
    }

    pub fn trigger_set(&self) -> PortSet {
        let mut s = PortSet::default();
        for (i, p) in self.ports.iter().enumerate() {
            if p.kind == PortKind::Trigger {
                s = s.with(i);
            }
        }
        s
    }

    pub fn position_of(&self, port: PortRef) -> Option<usize> {
        self.ports.iter().position(|p| p.port == port)
    }

    /// Whether `set` is an interaction of this connector.
    pub fn is_feasible(&self, set: PortSet) -> bool {
        !set.is_empty()
            && set.is_subset(self.full_set())
            && (set.intersects(self.trigger_set()) || set == self.full_set())
    }

    /// Every interaction of the connector, ordered by bitmask.
    ///
    /// Exponential in the number of ports; the stepping engine never calls
    /// this on large broadcasts.
    pub fn feasible_interactions(&self) -> Vec<PortSet> {
        let n = self.ports.len();
        assert!(n < 32, "enumerating interactions of {n} ports");
        let full = self.full_set();
        let triggers = self.trigger_set();
        let mut out = Vec::new();
        for mask in 1..=full.0 {
            let s = PortSet(mask);
            if s.intersects(triggers) || s == full {
                out.push(s);
            }
        }
        out
    }

    pub fn guard_holds(&self, data: &PortData) -> Result<bool, EvalError> {
        match &self.guard {
            Some(g) => g.eval(data),
            None => Ok(true),
        }
    }
}


/// A feasible port subset of one connector of a system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interaction {
    pub connector: usize,
    pub ports: PortSet,
}
