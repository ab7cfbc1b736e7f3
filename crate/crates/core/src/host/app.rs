use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::atomic::{
    AtomicBuilder, AtomicComponentDef, Guard, LocId, TransitionDef, Update, Valuation, VarId,
};
use crate::error::{BipError, EvalError, Result};
use crate::value::{Message, Stamped, Value};

use super::Endpoints;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Const(i64),
    Reg(String),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Const(c) => write!(f, "{c}"),
            Operand::Reg(r) => f.write_str(r),
        }
    }
}

/// Catalog of step computations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Compute {
    Noop,
    /// `try_receive(port)`: sets `reg` to the value and `have` to 1, or
    /// `have` to 0 when the inbox is empty.
    Receive {
        port: u32,
        reg: String,
    },
    /// `send(port, value)`, released when the step's time slice is over.
    Send {
        port: u32,
        value: Operand,
    },
}

impl fmt::Display for Compute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Compute::Noop => f.write_str("noop"),
            Compute::Receive { port, reg } => write!(f, "receive {port} {reg}"),
            Compute::Send { port, value } => write!(f, "send {port} {value}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Step {
    pub name: String,
    pub compute: Compute,
    pub time_slice: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.symbol() == s)
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Condition {
    pub reg: String,
    pub op: CmpOp,
    pub value: i64,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.reg, self.op.symbol(), self.value)
    }
}

/// Branch from one step to the next; `when` is a conjunction, empty meaning
/// unconditional. Branches of a step are tried in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StepTransition {
    pub from: String,
    pub to: String,
    pub when: Vec<Condition>,
}

/// Application as a loop of steps. The first step is the initial one.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct StepMachineDef {
    pub steps: Vec<Step>,
    pub transitions: Vec<StepTransition>,
}

pub const HAVE_REG: &str = "have";

impl StepMachineDef {
    fn step_index(&self, name: &str) -> Option<usize> {
        self.steps.iter().position(|s| s.name == name)
    }

    /// Problems that make the machine unbuildable. Branches are exhaustive
    /// when the last branch declared from each step is unconditional.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.steps.is_empty() {
            out.push("step machine has no steps".to_string());
        }
        let mut seen = BTreeSet::new();
        for s in &self.steps {
            if !seen.insert(&s.name) {
                out.push(format!("duplicate step {}", s.name));
            }
            if s.time_slice == 0 {
                out.push(format!("step {} has time slice 0", s.name));
            }
        }
        for t in &self.transitions {
            for n in [&t.from, &t.to] {
                if self.step_index(n).is_none() {
                    out.push(format!(
                        "branch {} -> {} names unknown step {n}",
                        t.from, t.to
                    ));
                }
            }
        }
        for s in &self.steps {
            match self.transitions.iter().rfind(|t| t.from == s.name) {
                None => out.push(format!("step {} has no successor", s.name)),
                Some(t) if !t.when.is_empty() => out.push(format!(
                    "branches from step {} are not exhaustive: the last one needs no condition",
                    s.name
                )),
                _ => {}
            }
        }
        out
    }

    pub fn registers(&self) -> Vec<String> {
        let mut regs: BTreeSet<String> = BTreeSet::new();
        regs.insert(HAVE_REG.to_string());
        for s in &self.steps {
            match &s.compute {
                Compute::Receive { reg, .. } => {
                    regs.insert(reg.clone());
                }
                Compute::Send {
                    value: Operand::Reg(r),
                    ..
                } => {
                    regs.insert(r.clone());
                }
                _ => {}
            }
        }
        for t in &self.transitions {
            regs.extend(t.when.iter().map(|c| c.reg.clone()));
        }
        regs.into_iter().collect()
    }

    pub fn receive_ports(&self) -> Vec<u32> {
        let ports: BTreeSet<u32> = self
            .steps
            .iter()
            .filter_map(|s| match s.compute {
                Compute::Receive { port, .. } => Some(port),
                _ => None,
            })
            .collect();
        ports.into_iter().collect()
    }

    pub fn send_ports(&self) -> Vec<u32> {
        let ports: BTreeSet<u32> = self
            .steps
            .iter()
            .filter_map(|s| match s.compute {
                Compute::Send { port, .. } => Some(port),
                _ => None,
            })
            .collect();
        ports.into_iter().collect()
    }
}

/// Variables of an application's mailbox.
#[derive(Clone, Debug)]
pub struct MailboxVars {
    pub inbox: Vec<(u32, VarId)>,
    /// Messages produced by the current step, held back until its slice ends.
    pub staged: VarId,
    pub send_ports: Vec<u32>,
}

/// Send and receive primitives available to step computations.
pub struct Mailbox<'a> {
    v: &'a mut Valuation,
    vars: &'a MailboxVars,
    tick: u32,
}

impl<'a> Mailbox<'a> {
    pub fn new(v: &'a mut Valuation, vars: &'a MailboxVars, tick: u32) -> Self {
        Self { v, vars, tick }
    }

    /// Stages `value` for `port`, stamped with the current tick.
    pub fn send(&mut self, port: u32, value: i32) -> Result<(), EvalError> {
        if !self.vars.send_ports.contains(&port) {
            return Err(EvalError::Config(format!("no outgoing port {port}")));
        }
        let payload = Stamped::new(value, self.tick).pack();
        self.v
            .queue_mut(self.vars.staged)?
            .push_back(Arc::new(Message::host(port, payload)));
        Ok(())
    }

    pub fn try_receive(&mut self, port: u32) -> Result<Option<Arc<Message>>, EvalError> {
        let Some(&(_, q)) = self.vars.inbox.iter().find(|(p, _)| *p == port) else {
            return Err(EvalError::Config(format!("no incoming port {port}")));
        };
        Ok(self.v.queue_mut(q)?.pop_front())
    }
}

fn set_head(v: &mut Valuation, queue: VarId, head: VarId) -> Result<(), EvalError> {
    let h = v.queue(queue)?.front().cloned();
    v.set(head, Value::Msg(h));
    Ok(())
}

/// Builds the application component. Each step `S` has locations `S`,
/// `S.wait` and `S.done`:
/// `compute` runs the step (`S` to `S.wait`), `flush` releases its output
/// once `time_slice` ticks have passed (`S.wait` to `S.done`), and `branch`
/// picks the successor. Ticks, deliveries and collection are accepted in
/// every location.
pub fn make_application(
    name: &str,
    def: &StepMachineDef,
) -> Result<(AtomicComponentDef, Endpoints, MailboxVars)> {
    let problems = def.problems();
    if !problems.is_empty() {
        return Err(BipError::Build(format!(
            "application {name}: {}",
            problems.join("; ")
        )));
    }
    let mut b = AtomicBuilder::new(name);
    let ticks = b.var("ticks", Value::Int(0));
    let started = b.var("started", Value::Int(0));
    let step = b.var("step", Value::Int(0));
    let sample = b.var("sample", Value::empty_msg());
    let staged = b.var("staged", Value::empty_queue());
    let outbox = b.var("outbox", Value::empty_queue());
    let collect_out = b.var("collect_out", Value::empty_msg());
    let delivered = b.var("delivered", Value::empty_msg());
    let inbox: Vec<(u32, VarId)> = def
        .receive_ports()
        .into_iter()
        .map(|p| (p, b.var(format!("inbox_{p}"), Value::empty_queue())))
        .collect();
    let regs: Vec<(String, VarId)> = def
        .registers()
        .into_iter()
        .map(|r| {
            let id = b.var(format!("reg_{r}"), Value::Int(0));
            (r, id)
        })
        .collect();
    let reg = |n: &str| regs.iter().find(|(r, _)| r == n).map(|(_, v)| *v).unwrap();
    let mailbox = MailboxVars {
        inbox: inbox.clone(),
        staged,
        send_ports: def.send_ports(),
    };

    let locs: Vec<[LocId; 3]> = def
        .steps
        .iter()
        .map(|s| {
            [
                b.location(s.name.clone()),
                b.location(format!("{}.wait", s.name)),
                b.location(format!("{}.done", s.name)),
            ]
        })
        .collect();
    let p_tick = b.port("tick", &[ticks]);
    let p_compute = b.port("compute", &[step, sample]);
    let p_flush = b.port("flush", &[step]);
    let p_branch = b.port("branch", &[step]);
    let p_collect = b.port("collect", &[collect_out]);
    let p_deliver: Vec<_> = inbox
        .iter()
        .map(|&(p, q)| (b.port(format!("deliver_{p}"), &[delivered]), q))
        .collect();

    let tick = Update::new("ticks+=1", move |v| {
        let t = crate::value::checked_add(v.int(ticks)?, 1)?;
        v.set_int(ticks, t);
        Ok(())
    });
    let collect_guard = Guard::new("outbox nonempty", move |v| Ok(!v.queue(outbox)?.is_empty()));
    let collect = Update::new("pop outbox", move |v| {
        v.queue_mut(outbox)?.pop_front();
        set_head(v, outbox, collect_out)
    });
    for l in locs.iter().flatten().copied() {
        b.transition(TransitionDef::new(l, p_tick, l).with_update(tick.clone()));
        b.transition(
            TransitionDef::new(l, p_collect, l)
                .with_guard(collect_guard.clone())
                .with_update(collect.clone()),
        );
        for &(port, q) in &p_deliver {
            b.transition(TransitionDef::new(l, port, l).with_update(Update::new(
                "inbox",
                move |v| {
                    if let Some(m) = v.msg(delivered)?.cloned() {
                        v.queue_mut(q)?.push_back(m);
                    }
                    Ok(())
                },
            )));
        }
    }

    let mailbox_vars = Arc::new(mailbox.clone());
    for (i, s) in def.steps.iter().enumerate() {
        let [run, wait, done] = locs[i];
        let compute = s.compute.clone();
        let mb = mailbox_vars.clone();
        let have = reg(HAVE_REG);
        let target = match &s.compute {
            Compute::Receive { reg: r, .. } => Some(reg(r)),
            _ => None,
        };
        let operand = match &s.compute {
            Compute::Send {
                value: Operand::Reg(r),
                ..
            } => Some(reg(r)),
            _ => None,
        };
        b.transition(
            TransitionDef::new(run, p_compute, wait).with_update(Update::new(&s.name, move |v| {
                let now = v.int(ticks)?;
                v.set_int(step, i as i64);
                v.set_int(started, now);
                v.set(sample, Value::empty_msg());
                match &compute {
                    Compute::Noop => {}
                    Compute::Receive { port, .. } => {
                        let got = Mailbox::new(v, &mb, now as u32).try_receive(*port)?;
                        match got {
                            Some(m) => {
                                let value = Stamped::unpack(m.payload).value;
                                v.set_int(target.unwrap(), i64::from(value));
                                v.set_int(have, 1);
                                v.set(sample, Value::Msg(Some(m)));
                            }
                            None => v.set_int(have, 0),
                        }
                    }
                    Compute::Send { port, value } => {
                        let x = match (value, operand) {
                            (_, Some(r)) => v.int(r)?,
                            (Operand::Const(c), None) => *c,
                            (Operand::Reg(_), None) => unreachable!("register resolved at build"),
                        };
                        let x = i32::try_from(x).map_err(|_| EvalError::Overflow)?;
                        Mailbox::new(v, &mb, now as u32).send(*port, x)?;
                    }
                }
                Ok(())
            })),
        );
        let slice = i64::from(s.time_slice);
        b.transition(
            TransitionDef::new(wait, p_flush, done)
                .with_guard(Guard::new("slice elapsed", move |v| {
                    Ok(v.int(ticks)? - v.int(started)? >= slice)
                }))
                .with_update(Update::new("flush", move |v| {
                    let out: Vec<_> = v.queue_mut(staged)?.drain(..).collect();
                    v.queue_mut(outbox)?.extend(out);
                    set_head(v, outbox, collect_out)
                })),
        );
        for t in def.transitions.iter().filter(|t| t.from == s.name) {
            let to = locs[def.step_index(&t.to).unwrap()][0];
            let conds: Arc<[(VarId, CmpOp, i64)]> = t
                .when
                .iter()
                .map(|c| (reg(&c.reg), c.op, c.value))
                .collect();
            let label = t
                .when
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" and ");
            let mut tr = TransitionDef::new(done, p_branch, to);
            if !conds.is_empty() {
                tr = tr.with_guard(Guard::new(&label, move |v| {
                    for &(r, op, x) in conds.iter() {
                        if !op.holds(v.int(r)?, x) {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                }));
            }
            b.transition(tr);
        }
    }
    b.initial(locs[0][0]);
    let endpoints = Endpoints {
        send: (!mailbox.send_ports.is_empty()).then(|| "collect".to_string()),
        receive: inbox
            .iter()
            .map(|&(p, _)| (p, format!("deliver_{p}")))
            .collect(),
        tick: Some("tick".into()),
    };
    Ok((b.build()?, endpoints, mailbox))
}
