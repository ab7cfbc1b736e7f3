use std::sync::Arc;

use crate::atomic::{
    AtomicBuilder, AtomicComponentDef, Guard, TransitionDef, Update, Valuation, VarId,
};
use crate::error::{EvalError, Result};
use crate::value::Value;

/// Port names of a communication service.
pub struct CommPorts {
    pub from_client: &'static str,
    pub to_tiss: &'static str,
    pub from_tiss: &'static str,
}

impl CommPorts {
    pub const NAMES: CommPorts = CommPorts {
        from_client: "from_client",
        to_tiss: "core2tiss_io",
        from_tiss: "tiss2core",
    };

    pub fn to_client(port_id: u32) -> String {
        format!("to_{port_id}")
    }
}

fn set_head(v: &mut Valuation, queue: VarId, head: VarId) -> Result<(), EvalError> {
    let h = v.queue(queue)?.front().cloned();
    v.set(head, Value::Msg(h));
    Ok(())
}

/// Shuttles messages between the host's clients and one TISS.
///
/// Clients hand messages in through `from_client`; they are queued and offered
/// to the TISS on `core2tiss_io`. Messages from `tiss2core` are sorted by port
/// id into per-port queues drained through `to_<pid>`. `inbound` lists the
/// port ids this host receives.
pub fn make_comm_service(name: &str, inbound: &[u32]) -> Result<AtomicComponentDef> {
    let mut b = AtomicBuilder::new(name);
    let incoming = b.var("inbound", Value::empty_msg());
    let up = b.var("up", Value::empty_queue());
    let to_tiss = b.var("to_tiss", Value::empty_msg());
    let from_tiss = b.var("from_tiss", Value::empty_msg());
    let mut pids = inbound.to_vec();
    pids.sort_unstable();
    pids.dedup();
    let down: Vec<(u32, VarId, VarId)> = pids
        .iter()
        .map(|&p| {
            let q = b.var(format!("down_{p}"), Value::empty_queue());
            let h = b.var(format!("head_{p}"), Value::empty_msg());
            (p, q, h)
        })
        .collect();
    let l = b.location("l0");
    let p_client = b.port(CommPorts::NAMES.from_client, &[incoming]);
    let p_to_tiss = b.port(CommPorts::NAMES.to_tiss, &[to_tiss]);
    let p_from_tiss = b.port(CommPorts::NAMES.from_tiss, &[from_tiss]);

    let label: Arc<str> = name.into();
    b.transition(TransitionDef::new(l, p_client, l).with_update(Update::new(
        "queue up",
        move |v| {
            let m = v
                .msg(incoming)?
                .cloned()
                .ok_or_else(|| EvalError::Config(format!("{label} got an empty client message")))?;
            v.queue_mut(up)?.push_back(m);
            set_head(v, up, to_tiss)
        },
    )));
    b.transition(
        TransitionDef::new(l, p_to_tiss, l)
            .with_guard(Guard::new("up nonempty", move |v| {
                Ok(!v.queue(up)?.is_empty())
            }))
            .with_update(Update::new("pop up", move |v| {
                v.queue_mut(up)?.pop_front();
                set_head(v, up, to_tiss)
            })),
    );
    let table: Arc<[(u32, VarId, VarId)]> = down.clone().into();
    let label: Arc<str> = name.into();
    b.transition(
        TransitionDef::new(l, p_from_tiss, l).with_update(Update::new("sort down", move |v| {
            let m = v
                .msg(from_tiss)?
                .cloned()
                .ok_or_else(|| EvalError::Config(format!("{label} got an empty TISS message")))?;
            let Some(&(_, q, h)) = table.iter().find(|(p, _, _)| *p == m.port_id) else {
                return Err(EvalError::Config(format!(
                    "{label} has no receiver for port {}",
                    m.port_id
                )));
            };
            v.queue_mut(q)?.push_back(m);
            set_head(v, q, h)
        })),
    );
    for &(p, q, h) in &down {
        let port = b.port(CommPorts::to_client(p), &[h]);
        b.transition(
            TransitionDef::new(l, port, l)
                .with_guard(Guard::new("down nonempty", move |v| {
                    Ok(!v.queue(q)?.is_empty())
                }))
                .with_update(Update::new("pop down", move |v| {
                    v.queue_mut(q)?.pop_front();
                    set_head(v, q, h)
                })),
        );
    }
    b.build()
}
