use std::sync::Arc;

use crate::atomic::{AtomicBuilder, AtomicComponentDef, Guard, TransitionDef, Update, VarId};
use crate::error::{BipError, EvalError, Result};
use crate::value::{Message, Stamped, Value};

use super::Endpoints;

/// Voting service: collects one value per input port, then emits their mean
/// (truncated toward zero) on `output_port`, stamped with the oldest input
/// stamp. A round blocks until every input has arrived.
pub fn make_voting_service(
    name: &str,
    input_ports: &[u32],
    output_port: u32,
) -> Result<(AtomicComponentDef, Endpoints)> {
    if input_ports.is_empty() {
        return Err(BipError::Build(format!(
            "voter {name} needs at least one input"
        )));
    }
    let mut b = AtomicBuilder::new(name);
    let input = b.var("input", Value::empty_msg());
    let out = b.var("out", Value::empty_msg());
    let ready = b.var("ready", Value::Bool(false));
    let slots: Vec<(u32, VarId, VarId, VarId)> = input_ports
        .iter()
        .map(|&p| {
            (
                p,
                b.var(format!("have_{p}"), Value::Bool(false)),
                b.var(format!("val_{p}"), Value::Int(0)),
                b.var(format!("stamp_{p}"), Value::Int(0)),
            )
        })
        .collect();
    let l = b.location("l0");
    let mut endpoints = Endpoints {
        send: Some("emit".into()),
        ..Endpoints::default()
    };
    let all: Arc<[(u32, VarId, VarId, VarId)]> = slots.clone().into();
    for &(p, have, val, stamp) in &slots {
        let port_name = format!("in_{p}");
        let port = b.port(port_name.clone(), &[input]);
        endpoints.receive.push((p, port_name));
        let all = all.clone();
        b.transition(
            TransitionDef::new(l, port, l)
                .with_guard(Guard::new("slot free", move |v| {
                    Ok(!v.bool(have)? && !v.bool(ready)?)
                }))
                .with_update(Update::new("vote", move |v| {
                    let m = v
                        .msg(input)?
                        .ok_or_else(|| EvalError::Config("voter input slot is empty".into()))?;
                    let s = Stamped::unpack(m.payload);
                    v.set_int(val, i64::from(s.value));
                    v.set_int(stamp, i64::from(s.tick));
                    v.set_bool(have, true);
                    let mut sum = 0i64;
                    let mut oldest = u32::MAX;
                    for &(_, h, x, t) in all.iter() {
                        if !v.bool(h)? {
                            return Ok(());
                        }
                        sum += v.int(x)?;
                        oldest = oldest.min(v.int(t)? as u32);
                    }
                    let mean = sum / all.len() as i64;
                    let payload = Stamped::new(mean as i32, oldest).pack();
                    v.set(out, Value::msg(Message::host(output_port, payload)));
                    v.set_bool(ready, true);
                    for &(_, h, _, _) in all.iter() {
                        v.set_bool(h, false);
                    }
                    Ok(())
                })),
        );
    }
    let emit = b.port("emit", &[out]);
    b.transition(
        TransitionDef::new(l, emit, l)
            .with_guard(Guard::new("ready", move |v| v.bool(ready)))
            .with_update(Update::new("ready=false", move |v| {
                v.set_bool(ready, false);
                Ok(())
            })),
    );
    Ok((b.build()?, endpoints))
}
