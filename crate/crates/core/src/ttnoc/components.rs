use std::sync::Arc;

use crate::atomic::{
    AtomicBuilder, AtomicComponentDef, Guard, LocId, TransitionDef, Update, VarId,
};
use crate::error::{EvalError, Result};
use crate::value::{Hop, Message, SwitchIdx, TissIdx, Value};

use super::ScheduleEntry;

pub const SUBTICKS: [&str; 3] = ["t1", "t2", "t3"];

#[derive(Clone, Copy, Debug)]
pub struct TimerHandles {
    pub time: VarId,
}

/// Free-running clock: the only enabled port is `tick`.
pub fn make_global_timer(name: &str) -> Result<(AtomicComponentDef, TimerHandles)> {
    let mut b = AtomicBuilder::new(name);
    let time = b.var("time", Value::Int(0));
    let l1 = b.location("l1");
    let tick = b.port("tick", &[time]);
    b.transition(
        TransitionDef::new(l1, tick, l1).with_update(Update::new("time+=1", move |v| {
            let t = crate::value::checked_add(v.int(time)?, 1)?;
            v.set_int(time, t);
            Ok(())
        })),
    );
    Ok((b.build()?, TimerHandles { time }))
}

/// Splits each global tick into the subticks t1, t2, t3, in that order.
pub fn make_tick_splitter(name: &str) -> Result<AtomicComponentDef> {
    let mut b = AtomicBuilder::new(name);
    let locs: Vec<LocId> = ["p0", "p1", "p2", "p3"]
        .iter()
        .map(|l| b.location(*l))
        .collect();
    let tick = b.port("tick", &[]);
    let subs: Vec<_> = SUBTICKS.iter().map(|s| b.port(*s, &[])).collect();
    b.transition(TransitionDef::new(locs[0], tick, locs[1]));
    for k in 0..3 {
        let target = if k == 2 { locs[0] } else { locs[k + 2] };
        b.transition(TransitionDef::new(locs[k + 1], subs[k], target));
    }
    b.build()
}

#[derive(Clone, Copy, Debug)]
pub struct SwitchHandles {
    pub held: VarId,
    pub out: VarId,
    pub phase: VarId,
    pub recv_phase: VarId,
    pub idle: LocId,
    pub holding: LocId,
    pub forwarded: LocId,
}

fn hop_allowed(m: &Message, neighbors: &[SwitchIdx], attached: &[TissIdx]) -> bool {
    match m.next_hop() {
        Hop::Switch(s) => neighbors.contains(&s),
        Hop::Tiss(t) => attached.contains(&t),
        Hop::Nowhere => false,
    }
}

/// Router: receives during a subtick, forwards in the next one, and accepts at
/// most one message per global tick.
pub fn make_switch(
    name: &str,
    id: SwitchIdx,
    neighbors: &[SwitchIdx],
    attached: &[TissIdx],
) -> Result<(AtomicComponentDef, SwitchHandles)> {
    let mut b = AtomicBuilder::new(name);
    let held = b.var("held", Value::empty_msg());
    let out = b.var("out", Value::empty_msg());
    let phase = b.var("phase", Value::Int(0));
    let recv_phase = b.var("recv_phase", Value::Int(0));
    let l0 = b.location("l0");
    let l1 = b.location("l1");
    let l2 = b.location("l2");
    let tick = b.port("tick", &[phase]);
    let subs: Vec<_> = SUBTICKS.iter().map(|s| b.port(*s, &[phase])).collect();
    let recv = b.port("recv", &[held, phase]);
    let fwd = b.port("fwd", &[out, phase]);

    let reset = Update::new("phase=0", move |v| {
        v.set_int(phase, 0);
        Ok(())
    });
    b.transition(TransitionDef::new(l0, tick, l0).with_update(reset.clone()));
    b.transition(TransitionDef::new(l2, tick, l0).with_update(reset));

    let waiting = Guard::new("phase==recv_phase", move |v| {
        Ok(v.int(phase)? == v.int(recv_phase)?)
    });
    for (k, &p) in subs.iter().enumerate() {
        let k = k as i64 + 1;
        let set = Update::new("phase=k", move |v| {
            v.set_int(phase, k);
            Ok(())
        });
        b.transition(TransitionDef::new(l0, p, l0).with_update(set.clone()));
        b.transition(
            TransitionDef::new(l1, p, l1)
                .with_guard(waiting.clone())
                .with_update(set.clone()),
        );
        b.transition(TransitionDef::new(l2, p, l2).with_update(set));
    }

    let neighbors: Arc<[SwitchIdx]> = neighbors.into();
    let attached: Arc<[TissIdx]> = attached.into();
    let label: Arc<str> = name.into();
    b.transition(
        TransitionDef::new(l0, recv, l1)
            .with_guard(Guard::new("phase<=2", move |v| Ok(v.int(phase)? <= 2)))
            .with_update(Update::new("out=pop(held)", move |v| {
                let m = v
                    .msg(held)?
                    .ok_or_else(|| EvalError::Config(format!("{label} received an empty slot")))?;
                if m.route.first() != Some(&id) {
                    return Err(EvalError::Config(format!(
                        "{label} received a message routed elsewhere"
                    )));
                }
                let next = m.pop_hop();
                if !hop_allowed(&next, &neighbors, &attached) {
                    return Err(EvalError::Config(format!(
                        "{label} has no link towards {:?}",
                        next.next_hop()
                    )));
                }
                let p = v.int(phase)?;
                v.set_int(recv_phase, p);
                v.set(out, Value::msg(next));
                Ok(())
            })),
    );
    let due = move |v: &crate::atomic::Valuation| Ok(v.int(phase)? == v.int(recv_phase)? + 1);
    let clear = Update::new("out=none", move |v| {
        v.set(out, Value::empty_msg());
        Ok(())
    });
    b.transition(
        TransitionDef::new(l1, fwd, l2)
            .with_guard(Guard::new("due&&phase<3", move |v| {
                Ok(due(v)? && v.int(phase)? < 3)
            }))
            .with_update(clear.clone()),
    );
    b.transition(
        TransitionDef::new(l1, fwd, l0)
            .with_guard(Guard::new("due&&phase==3", move |v| {
                Ok(due(v)? && v.int(phase)? == 3)
            }))
            .with_update(clear),
    );
    b.initial(l0);
    let def = b.build()?;
    Ok((
        def,
        SwitchHandles {
            held,
            out,
            phase,
            recv_phase,
            idle: l0,
            holding: l1,
            forwarded: l2,
        },
    ))
}

#[derive(Clone, Debug)]
pub struct TissHandles {
    pub counter: VarId,
    pub phase: VarId,
    pub sending: VarId,
    pub link: VarId,
    pub from_host: VarId,
    pub to_host: VarId,
    pub rx: VarId,
    /// `(port id, buffer variable)` in ascending port id order.
    pub buffers: Vec<(u32, VarId)>,
    pub waiting: LocId,
    pub ready: LocId,
}

impl TissHandles {
    pub fn buffer(&self, port_id: u32) -> Option<VarId> {
        self.buffers
            .iter()
            .find(|(p, _)| *p == port_id)
            .map(|(_, v)| *v)
    }
}

/// Network interface: buffers host messages per port, injects the head of a
/// due buffer at the start of its slot, and queues arriving messages for the
/// host. `entries` are the schedule entries whose source is this TISS.
pub fn make_tiss(
    name: &str,
    entries: &[ScheduleEntry],
) -> Result<(AtomicComponentDef, TissHandles)> {
    let mut b = AtomicBuilder::new(name);
    let counter = b.var("counter", Value::Int(0));
    let phase = b.var("phase", Value::Int(0));
    let sending = b.var("sending", Value::Bool(false));
    let link = b.var("link", Value::empty_msg());
    let from_host = b.var("from_host", Value::empty_msg());
    let to_host = b.var("to_host", Value::empty_msg());
    let rx = b.var("rx", Value::empty_queue());
    let mut port_ids: Vec<u32> = entries.iter().map(|e| e.port_id).collect();
    port_ids.sort_unstable();
    port_ids.dedup();
    let buffers: Vec<(u32, VarId)> = port_ids
        .iter()
        .map(|&p| (p, b.var(format!("buf_{p}"), Value::empty_queue())))
        .collect();

    let l0 = b.location("l0");
    let l1 = b.location("l1");
    let tick = b.port("tick", &[counter]);
    let subs: Vec<_> = SUBTICKS.iter().map(|s| b.port(*s, &[phase])).collect();
    let comm = b.port("ttnoc_comm", &[link, sending, phase]);
    let c2t = b.port("core2tiss_io", &[from_host]);
    let t2c = b.port("tiss2core", &[to_host]);

    let slots: Arc<[(ScheduleEntry, VarId)]> = entries
        .iter()
        .map(|e| {
            let var = buffers.iter().find(|(p, _)| *p == e.port_id).unwrap().1;
            (e.clone(), var)
        })
        .collect();
    b.transition(TransitionDef::new(l0, tick, l1).with_update(Update::new(
        "start slot",
        move |v| {
            let c = crate::value::checked_add(v.int(counter)?, 1)?;
            v.set_int(counter, c);
            v.set_int(phase, 0);
            v.set(link, Value::empty_msg());
            v.set_bool(sending, false);
            for (e, buf) in slots.iter() {
                if !e.due(c as u64) {
                    continue;
                }
                if let Some(head) = v.queue(*buf)?.front() {
                    let mut m = head.stripped();
                    m.route = e.route.clone();
                    m.target = Some(e.target);
                    v.set(link, Value::msg(m));
                    v.set_bool(sending, true);
                    break;
                }
            }
            Ok(())
        },
    )));

    let quiet = Guard::new("!sending", move |v| Ok(!v.bool(sending)?));
    for (k, &p) in subs.iter().enumerate() {
        let k = k as i64 + 1;
        let set = Update::new("phase=k", move |v| {
            v.set_int(phase, k);
            Ok(())
        });
        b.transition(TransitionDef::new(l0, p, l0).with_update(set.clone()));
        b.transition(
            TransitionDef::new(l1, p, l1)
                .with_guard(quiet.clone())
                .with_update(set),
        );
    }

    let bufs: Arc<[(u32, VarId)]> = buffers.clone().into();
    b.transition(
        TransitionDef::new(l1, comm, l0).with_update(Update::new("exchange", move |v| {
            if v.bool(sending)? {
                let pid = v.msg(link)?.map(|m| m.port_id);
                if let Some(&(_, buf)) = bufs.iter().find(|(p, _)| Some(*p) == pid) {
                    v.queue_mut(buf)?.pop_front();
                }
                v.set_bool(sending, false);
            } else if let Some(m) = v.msg(link)?.cloned() {
                v.queue_mut(rx)?.push_back(Arc::new(m.stripped()));
                if v.msg(to_host)?.is_none() {
                    v.set(to_host, Value::msg(m.stripped()));
                }
            }
            Ok(())
        })),
    );

    let bufs: Arc<[(u32, VarId)]> = buffers.clone().into();
    let label: Arc<str> = name.into();
    let accept = Update::new("buffer", move |v| {
        let m = v
            .msg(from_host)?
            .cloned()
            .ok_or_else(|| EvalError::Config(format!("{label} got an empty host message")))?;
        let Some(&(_, buf)) = bufs.iter().find(|(p, _)| *p == m.port_id) else {
            return Err(EvalError::Config(format!(
                "{label} has no schedule entry for port {}",
                m.port_id
            )));
        };
        v.queue_mut(buf)?.push_back(m);
        Ok(())
    });
    let pending = Guard::new("rx nonempty", move |v| Ok(!v.queue(rx)?.is_empty()));
    let hand_over = Update::new("pop rx", move |v| {
        let q = v.queue_mut(rx)?;
        q.pop_front();
        let next = q.front().map(|m| Value::Msg(Some(m.clone())));
        v.set(to_host, next.unwrap_or_else(Value::empty_msg));
        Ok(())
    });
    for l in [l0, l1] {
        b.transition(TransitionDef::new(l, c2t, l).with_update(accept.clone()));
        b.transition(
            TransitionDef::new(l, t2c, l)
                .with_guard(pending.clone())
                .with_update(hand_over.clone()),
        );
    }
    b.initial(l0);
    let def = b.build()?;
    Ok((
        def,
        TissHandles {
            counter,
            phase,
            sending,
            link,
            from_host,
            to_host,
            rx,
            buffers,
            waiting: l0,
            ready: l1,
        },
    ))
}
