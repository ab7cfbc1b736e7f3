//! Variable values and the message type carried by the fabric.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use crate::error::EvalError;

/// Index of a switch within a [`crate::ttnoc::Topology`].
pub type SwitchIdx = u16;
/// Index of a TISS within a [`crate::ttnoc::Topology`].
pub type TissIdx = u16;

/// A fixed-length fabric message.
///
/// `route` holds the switches still to be traversed. Host-side messages carry
/// an empty route and no target; the sending TISS fills both in on injection
/// and the receiving TISS strips them again.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Message {
    pub payload: i64,
    pub port_id: u32,
    pub route: Vec<SwitchIdx>,
    pub target: Option<TissIdx>,
}

impl Message {
    pub fn host(port_id: u32, payload: i64) -> Self {
        Self {
            payload,
            port_id,
            route: Vec::new(),
            target: None,
        }
    }

    /// Hop following the current holder: the next switch, or the target TISS
    /// once the route is exhausted.
    pub fn next_hop(&self) -> Hop {
        match self.route.first() {
            Some(&s) => Hop::Switch(s),
            None => match self.target {
                Some(t) => Hop::Tiss(t),
                None => Hop::Nowhere,
            },
        }
    }

    pub fn stripped(&self) -> Message {
        Message::host(self.port_id, self.payload)
    }

    pub fn pop_hop(&self) -> Message {
        let mut m = self.clone();
        if !m.route.is_empty() {
            m.route.remove(0);
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hop {
    Switch(SwitchIdx),
    Tiss(TissIdx),
    Nowhere,
}

/// FIFO queue of messages, shared copy-on-write between valuations.
pub type MsgQueue = Arc<VecDeque<Arc<Message>>>;

/// A variable value.
///
/// `Msg(None)` is the empty message slot. `Queue` is an opaque FIFO handle used
/// for TISS buffers and host mailboxes; it is never transferred by connectors.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Msg(Option<Arc<Message>>),
    Queue(MsgQueue),
}

impl Value {
    pub fn empty_msg() -> Self {
        Value::Msg(None)
    }

    pub fn msg(m: Message) -> Self {
        Value::Msg(Some(Arc::new(m)))
    }

    pub fn empty_queue() -> Self {
        Value::Queue(Arc::new(VecDeque::new()))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::Msg(_) => "msg",
            Value::Queue(_) => "queue",
        }
    }

    pub fn as_int(&self) -> Result<i64, EvalError> {
        match self {
            Value::Int(i) => Ok(*i),
            other => Err(EvalError::Type {
                expected: "int",
                found: other.kind(),
            }),
        }
    }

    pub fn as_bool(&self) -> Result<bool, EvalError> {
        match self {
            Value::Bool(b) => Ok(*b),
            other => Err(EvalError::Type {
                expected: "bool",
                found: other.kind(),
            }),
        }
    }

    pub fn as_msg(&self) -> Result<Option<&Arc<Message>>, EvalError> {
        match self {
            Value::Msg(m) => Ok(m.as_ref()),
            other => Err(EvalError::Type {
                expected: "msg",
                found: other.kind(),
            }),
        }
    }

    pub fn as_queue(&self) -> Result<&MsgQueue, EvalError> {
        match self {
            Value::Queue(q) => Ok(q),
            other => Err(EvalError::Type {
                expected: "queue",
                found: other.kind(),
            }),
        }
    }

    /// Decimal rendering used in traces. Messages expand to several keys, see
    /// [`crate::trace`].
    pub fn render_into(&self, key: &str, out: &mut Vec<(String, i64)>) {
        match self {
            Value::Int(i) => out.push((key.to_string(), *i)),
            Value::Bool(b) => out.push((key.to_string(), i64::from(*b))),
            Value::Msg(None) => {}
            Value::Msg(Some(m)) => {
                out.push((key.to_string(), m.payload));
                out.push((format!("{key}.port"), i64::from(m.port_id)));
                out.push((format!("{key}.hops"), m.route.len() as i64));
            }
            Value::Queue(q) => out.push((format!("{key}.len"), q.len() as i64)),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Msg(None) => write!(f, "_"),
            Value::Msg(Some(m)) => write!(f, "msg(port={}, payload={})", m.port_id, m.payload),
            Value::Queue(q) => write!(f, "queue(len={})", q.len()),
        }
    }
}

pub(crate) fn checked_add(a: i64, b: i64) -> Result<i64, EvalError> {
    a.checked_add(b).ok_or(EvalError::Overflow)
}

/// A sensor value or actuator command together with the tick it was produced
/// at, packed into one message payload.
///
/// The tick occupies the high 32 bits and the value the low 32 bits, so the
/// packed payload stays a single decimal integer in traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stamped {
    pub value: i32,
    pub tick: u32,
}

impl Stamped {
    pub fn new(value: i32, tick: u32) -> Self {
        Self { value, tick }
    }

    pub fn pack(self) -> i64 {
        (i64::from(self.tick) << 32) | i64::from(self.value as u32)
    }

    pub fn unpack(payload: i64) -> Self {
        Self {
            value: (payload & 0xFFFF_FFFF) as u32 as i32,
            tick: ((payload >> 32) & 0xFFFF_FFFF) as u32,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn stamped_roundtrip(value in any::<i32>(), tick in any::<u32>()) {
            let s = Stamped::new(value, tick);
            prop_assert_eq!(Stamped::unpack(s.pack()), s);
        }
    }

    #[test]
    fn next_hop_follows_route_then_target() {
        let m = Message {
            payload: 1,
            port_id: 2,
            route: vec![3, 4],
            target: Some(5),
        };
        assert_eq!(m.next_hop(), Hop::Switch(3));
        let m = m.pop_hop().pop_hop();
        assert_eq!(m.next_hop(), Hop::Tiss(5));
        assert_eq!(m.stripped(), Message::host(2, 1));
    }

    #[test]
    fn message_renders_as_decimal_keys() {
        let mut out = Vec::new();
        Value::msg(Message::host(7, 42)).render_into("c.msg", &mut out);
        Value::Msg(None).render_into("c.none", &mut out);
        Value::Bool(true).render_into("c.b", &mut out);
        assert_eq!(
            out,
            vec![
                ("c.msg".to_string(), 42),
                ("c.msg.port".to_string(), 7),
                ("c.msg.hops".to_string(), 0),
                ("c.b".to_string(), 1),
            ]
        );
    }
}
