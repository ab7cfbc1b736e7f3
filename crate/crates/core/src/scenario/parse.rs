use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::host::{
    CmpOp, Compute, Condition, Operand, Step, StepMachineDef, StepTransition, Stimulus,
};
use crate::ttnoc::Topology;
use crate::value::{SwitchIdx, TissIdx};

use super::model::{EntryDecl, HostDecl, HostKind, PriorityDecl, RunParams, Scenario};

/// A parse or resolution problem; `line` is 1-based, 0 for whole-file issues.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    Topology,
    Schedule,
    Hosts,
    Machine(usize),
    Priorities,
    Run,
}

struct Line<'a> {
    no: usize,
    tokens: Vec<&'a str>,
}

#[derive(Default)]
struct Raw<'a> {
    topology: Option<usize>,
    sections: Vec<(Section, Line<'a>)>,
    machines: Vec<(usize, String)>,
}

pub fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Ctx {
    diags: Vec<Diagnostic>,
}

impl Ctx {
    fn err(&mut self, line: usize, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            line,
            message: message.into(),
        });
    }
}

/// `key=value` arguments of one statement.
struct Args<'a> {
    line: usize,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Args<'a> {
    fn new(ctx: &mut Ctx, line: usize, tokens: &[&'a str], allowed: &[&str]) -> Self {
        let mut map = BTreeMap::new();
        for t in tokens {
            let Some((k, v)) = t.split_once('=') else {
                ctx.err(line, format!("expected key=value, found `{t}`"));
                continue;
            };
            if !allowed.contains(&k) {
                ctx.err(line, format!("unknown key `{k}`"));
            } else if map.insert(k, v).is_some() {
                ctx.err(line, format!("duplicate key `{k}`"));
            }
        }
        Args { line, map }
    }

    fn opt<T: FromStr>(&self, ctx: &mut Ctx, key: &str) -> Option<T> {
        let v = self.map.get(key)?;
        match v.parse() {
            Ok(x) => Some(x),
            Err(_) => {
                ctx.err(self.line, format!("`{key}` has invalid value `{v}`"));
                None
            }
        }
    }

    fn req<T: FromStr>(&self, ctx: &mut Ctx, key: &str) -> Option<T> {
        if !self.map.contains_key(key) {
            ctx.err(self.line, format!("missing `{key}=`"));
            return None;
        }
        self.opt(ctx, key)
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.map.get(key).copied()
    }
}

fn int_list<T: FromStr>(ctx: &mut Ctx, line: usize, key: &str, s: &str) -> Option<Vec<T>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    let mut out = Vec::new();
    for x in s.split(',') {
        match x.parse() {
            Ok(v) => out.push(v),
            Err(_) => {
                ctx.err(line, format!("`{key}` has invalid element `{x}`"));
                return None;
            }
        }
    }
    Some(out)
}

fn split_sections<'a>(ctx: &mut Ctx, text: &'a str) -> Raw<'a> {
    let mut raw = Raw::default();
    let mut current: Option<Section> = None;
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (i, full) in text.lines().enumerate() {
        let no = i + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(inner) = rest.strip_suffix(']') else {
                ctx.err(no, "unterminated section header");
                current = None;
                continue;
            };
            let words: Vec<&str> = inner.split_whitespace().collect();
            let key = words.join(" ");
            if !seen.insert(key.clone()) {
                ctx.err(no, format!("duplicate section [{key}]"));
            }
            current = match words.as_slice() {
                ["topology"] => {
                    raw.topology = Some(no);
                    Some(Section::Topology)
                }
                ["schedule"] => Some(Section::Schedule),
                ["hosts"] => Some(Section::Hosts),
                ["priorities"] => Some(Section::Priorities),
                ["run"] => Some(Section::Run),
                ["machine", name] if is_ident(name) => {
                    raw.machines.push((no, name.to_string()));
                    Some(Section::Machine(raw.machines.len() - 1))
                }
                _ => {
                    ctx.err(no, format!("unknown section [{inner}]"));
                    None
                }
            };
            continue;
        }
        match current {
            Some(s) => raw.sections.push((
                s,
                Line {
                    no,
                    tokens: content.split_whitespace().collect(),
                },
            )),
            None => ctx.err(no, "statement outside of a section"),
        }
    }
    raw
}

fn parse_topology(ctx: &mut Ctx, raw: &Raw) -> Topology {
    let mut topo = Topology::default();
    let mut names: BTreeSet<String> = BTreeSet::new();
    let mut declare = |ctx: &mut Ctx, no: usize, name: &str| -> bool {
        if !is_ident(name) {
            ctx.err(no, format!("invalid name `{name}`"));
            false
        } else if !names.insert(name.to_string()) {
            ctx.err(no, format!("`{name}` declared twice"));
            false
        } else {
            true
        }
    };
    let lines = raw.sections.iter().filter(|(s, _)| *s == Section::Topology);
    let mut pending_links = Vec::new();
    let mut pending_tiss = Vec::new();
    for (_, l) in lines {
        match l.tokens.as_slice() {
            ["switch", rest @ ..] if !rest.is_empty() => {
                for s in rest {
                    if declare(ctx, l.no, s) {
                        topo.switches.push(s.to_string());
                    }
                }
            }
            ["link", a, b] => pending_links.push((l.no, *a, *b)),
            ["tiss", t, "at", s] => {
                if declare(ctx, l.no, t) {
                    pending_tiss.push((l.no, t.to_string(), *s));
                }
            }
            _ => ctx.err(
                l.no,
                "expected `switch <name>...`, `link <a> <b>` or `tiss <name> at <switch>`",
            ),
        }
    }
    for (no, a, b) in pending_links {
        let (Some(x), Some(y)) = (topo.switch_index(a), topo.switch_index(b)) else {
            for n in [a, b] {
                if topo.switch_index(n).is_none() {
                    ctx.err(no, format!("link names unknown switch `{n}`"));
                }
            }
            continue;
        };
        if x == y {
            ctx.err(no, format!("link from `{a}` to itself"));
        } else if topo.adjacent(x, y) {
            ctx.err(no, format!("link {a}-{b} declared twice"));
        } else {
            topo.links.push((x, y));
        }
    }
    for (no, t, s) in pending_tiss {
        match topo.switch_index(s) {
            Some(x) => {
                topo.tiss.push(t);
                topo.attach.push(x);
            }
            None => ctx.err(no, format!("tiss {t} attached to unknown switch `{s}`")),
        }
    }
    if raw.topology.is_some() {
        if topo.switches.is_empty() {
            ctx.err(raw.topology.unwrap_or(0), "topology declares no switches");
        }
        if topo.tiss.is_empty() {
            ctx.err(raw.topology.unwrap_or(0), "topology declares no TISS");
        }
    }
    topo
}

fn tiss_ref(ctx: &mut Ctx, topo: &Topology, no: usize, name: &str) -> Option<TissIdx> {
    let t = topo.tiss_index(name);
    if t.is_none() {
        ctx.err(no, format!("unknown TISS `{name}`"));
    }
    t
}

fn parse_schedule(ctx: &mut Ctx, raw: &Raw, topo: &Topology) -> Vec<EntryDecl> {
    let mut out = Vec::new();
    for (_, l) in raw.sections.iter().filter(|(s, _)| *s == Section::Schedule) {
        let ["entry", src, rest @ ..] = l.tokens.as_slice() else {
            ctx.err(
                l.no,
                "expected `entry <tiss> port=.. period=.. [phase=..] route=.. target=..`",
            );
            continue;
        };
        let args = Args::new(
            ctx,
            l.no,
            rest,
            &["port", "period", "phase", "route", "target"],
        );
        let source = tiss_ref(ctx, topo, l.no, src);
        let port_id: Option<u32> = args.req(ctx, "port");
        let period: Option<u32> = args.req(ctx, "period");
        let phase: Option<u32> = args.opt(ctx, "phase");
        let target = match args.raw("target") {
            Some(t) => tiss_ref(ctx, topo, l.no, t),
            None => {
                ctx.err(l.no, "missing `target=`");
                None
            }
        };
        let mut route = Some(Vec::new());
        match args.raw("route") {
            Some("") => {}
            Some(r) => {
                for s in r.split(',') {
                    match topo.switch_index(s) {
                        Some(x) => {
                            if let Some(v) = route.as_mut() {
                                v.push(x as SwitchIdx);
                            }
                        }
                        None => {
                            ctx.err(l.no, format!("route names unknown switch `{s}`"));
                            route = None;
                        }
                    }
                }
            }
            None => {
                ctx.err(l.no, "missing `route=`");
                route = None;
            }
        }
        if period == Some(0) {
            ctx.err(l.no, "period must be at least 1");
            continue;
        }
        if let (Some(p), Some(per)) = (phase, period) {
            if p >= per {
                ctx.err(l.no, format!("phase {p} is not below period {per}"));
                continue;
            }
        }
        if let (Some(source), Some(port_id), Some(period), Some(route), Some(target)) =
            (source, port_id, period, route, target)
        {
            out.push(EntryDecl {
                source,
                port_id,
                period,
                phase,
                route,
                target,
            });
        }
    }
    out
}

fn parse_stimulus(ctx: &mut Ctx, args: &Args) -> Option<Stimulus> {
    match (args.raw("script"), args.raw("random")) {
        (Some(s), None) => {
            let vals: Vec<i32> = int_list(ctx, args.line, "script", s)?;
            if vals.is_empty() {
                ctx.err(args.line, "`script` needs at least one value");
                return None;
            }
            Some(Stimulus::Script(vals))
        }
        (None, Some(r)) => {
            let parts: Vec<&str> = r.split(':').collect();
            let parsed = match parts.as_slice() {
                [s, lo, hi] => match (s.parse(), lo.parse(), hi.parse()) {
                    (Ok(seed), Ok(lo), Ok(hi)) if lo <= hi => {
                        Some(Stimulus::Random { seed, lo, hi })
                    }
                    _ => None,
                },
                _ => None,
            };
            if parsed.is_none() {
                ctx.err(
                    args.line,
                    format!("`random` expects seed:lo:hi with lo <= hi, found `{r}`"),
                );
            }
            parsed
        }
        (Some(_), Some(_)) => {
            ctx.err(args.line, "give either `script=` or `random=`, not both");
            None
        }
        (None, None) => {
            ctx.err(args.line, "sensor needs `script=` or `random=`");
            None
        }
    }
}

fn parse_hosts(ctx: &mut Ctx, raw: &Raw, topo: &Topology) -> Vec<HostDecl> {
    let mut out = Vec::new();
    let mut names: BTreeSet<String> = topo.switches.iter().chain(&topo.tiss).cloned().collect();
    for (_, l) in raw.sections.iter().filter(|(s, _)| *s == Section::Hosts) {
        let [kind, name, "at", tiss, rest @ ..] = l.tokens.as_slice() else {
            ctx.err(l.no, "expected `<kind> <name> at <tiss> key=value...`");
            continue;
        };
        if !is_ident(name) {
            ctx.err(l.no, format!("invalid name `{name}`"));
            continue;
        }
        if !names.insert(name.to_string()) {
            ctx.err(l.no, format!("`{name}` declared twice"));
            continue;
        }
        let tiss = tiss_ref(ctx, topo, l.no, tiss);
        let kind = match *kind {
            "comm" => {
                Args::new(ctx, l.no, rest, &[]);
                Some(HostKind::Comm)
            }
            "app" => {
                let a = Args::new(ctx, l.no, rest, &["machine"]);
                match a.raw("machine") {
                    Some(m) if is_ident(m) => Some(HostKind::App {
                        machine: m.to_string(),
                    }),
                    Some(m) => {
                        ctx.err(l.no, format!("invalid machine name `{m}`"));
                        None
                    }
                    None => {
                        ctx.err(l.no, "missing `machine=`");
                        None
                    }
                }
            }
            "sensor" => {
                let a = Args::new(ctx, l.no, rest, &["port", "period", "script", "random"]);
                let port = a.req(ctx, "port");
                let period: Option<u32> = a.req(ctx, "period");
                let stimulus = parse_stimulus(ctx, &a);
                if period == Some(0) {
                    ctx.err(l.no, "period must be at least 1");
                }
                match (port, period, stimulus) {
                    (Some(port), Some(period), Some(stimulus)) if period > 0 => {
                        Some(HostKind::Sensor {
                            port,
                            stimulus,
                            period,
                        })
                    }
                    _ => None,
                }
            }
            "voter" => {
                let a = Args::new(ctx, l.no, rest, &["inputs", "output"]);
                let inputs = match a.raw("inputs") {
                    Some(s) => int_list(ctx, l.no, "inputs", s),
                    None => {
                        ctx.err(l.no, "missing `inputs=`");
                        None
                    }
                };
                if inputs.as_ref().is_some_and(Vec::is_empty) {
                    ctx.err(l.no, "voter needs at least one input");
                }
                let output = a.req(ctx, "output");
                match (inputs, output) {
                    (Some(inputs), Some(output)) if !inputs.is_empty() => {
                        Some(HostKind::Voter { inputs, output })
                    }
                    _ => None,
                }
            }
            "actuator" => {
                let a = Args::new(ctx, l.no, rest, &["port", "sink"]);
                let sink = a.raw("sink").map(str::to_string);
                if sink
                    .as_deref()
                    .is_some_and(|s| s.is_empty() || s.contains('/'))
                {
                    ctx.err(l.no, "`sink` must be a plain file name");
                }
                a.req(ctx, "port")
                    .map(|port| HostKind::Actuator { port, sink })
            }
            other => {
                ctx.err(l.no, format!("unknown host kind `{other}`"));
                None
            }
        };
        if let (Some(tiss), Some(kind)) = (tiss, kind) {
            out.push(HostDecl {
                name: name.to_string(),
                tiss,
                kind,
            });
        }
    }
    out
}

fn parse_compute(ctx: &mut Ctx, no: usize, toks: &[&str]) -> Option<Compute> {
    match toks {
        ["noop"] => Some(Compute::Noop),
        ["receive", port, reg] => {
            let port = port.parse().ok();
            if port.is_none() || !is_ident(reg) {
                ctx.err(no, "expected `receive <port> <register>`");
                return None;
            }
            Some(Compute::Receive {
                port: port?,
                reg: reg.to_string(),
            })
        }
        ["send", port, value] => {
            let Ok(port) = port.parse() else {
                ctx.err(no, "expected `send <port> <value|register>`");
                return None;
            };
            let value = match value.parse::<i64>() {
                Ok(c) => Operand::Const(c),
                Err(_) if is_ident(value) => Operand::Reg(value.to_string()),
                Err(_) => {
                    ctx.err(no, format!("invalid operand `{value}`"));
                    return None;
                }
            };
            Some(Compute::Send { port, value })
        }
        _ => {
            ctx.err(
                no,
                "expected `noop`, `receive <port> <reg>` or `send <port> <value>`",
            );
            None
        }
    }
}

fn parse_conditions(ctx: &mut Ctx, no: usize, toks: &[&str]) -> Option<Vec<Condition>> {
    let mut out = Vec::new();
    for (i, chunk) in toks.split(|t| *t == "and").enumerate() {
        match chunk {
            [reg, op, value] => {
                let op = CmpOp::parse(op);
                let value = value.parse().ok();
                match (is_ident(reg), op, value) {
                    (true, Some(op), Some(value)) => out.push(Condition {
                        reg: reg.to_string(),
                        op,
                        value,
                    }),
                    _ => {
                        ctx.err(no, format!("condition {} is not `<reg> <op> <int>`", i + 1));
                        return None;
                    }
                }
            }
            _ => {
                ctx.err(no, format!("condition {} is not `<reg> <op> <int>`", i + 1));
                return None;
            }
        }
    }
    Some(out)
}

fn parse_machines(ctx: &mut Ctx, raw: &Raw) -> Vec<(String, StepMachineDef)> {
    let mut out: Vec<(String, StepMachineDef)> = Vec::new();
    for (mi, (header, name)) in raw.machines.iter().enumerate() {
        let mut def = StepMachineDef::default();
        let mut ok = true;
        for (_, l) in raw
            .sections
            .iter()
            .filter(|(s, _)| *s == Section::Machine(mi))
        {
            match l.tokens.as_slice() {
                ["step", step, rest @ ..] => {
                    let (slice, compute): (Vec<&str>, Vec<&str>) =
                        rest.iter().partition(|t| t.starts_with("slice="));
                    let slice = match slice.as_slice() {
                        [s] => s["slice=".len()..].parse::<u32>().ok().filter(|&x| x > 0),
                        _ => None,
                    };
                    if slice.is_none() {
                        ctx.err(l.no, "step needs exactly one `slice=<n>` with n >= 1");
                    }
                    if !is_ident(step) {
                        ctx.err(l.no, format!("invalid step name `{step}`"));
                    }
                    let compute = parse_compute(ctx, l.no, &compute);
                    match (slice, compute) {
                        (Some(time_slice), Some(compute)) if is_ident(step) => {
                            def.steps.push(Step {
                                name: step.to_string(),
                                compute,
                                time_slice,
                            })
                        }
                        _ => ok = false,
                    }
                }
                ["next", from, "->", to, rest @ ..] => {
                    let when = match rest {
                        [] => Some(Vec::new()),
                        ["when", conds @ ..] if !conds.is_empty() => {
                            parse_conditions(ctx, l.no, conds)
                        }
                        _ => {
                            ctx.err(l.no, "expected `when <condition> [and <condition>]...`");
                            None
                        }
                    };
                    match when {
                        Some(when) => def.transitions.push(StepTransition {
                            from: from.to_string(),
                            to: to.to_string(),
                            when,
                        }),
                        None => ok = false,
                    }
                }
                _ => {
                    ctx.err(
                        l.no,
                        "expected `step ...` or `next <from> -> <to> [when ...]`",
                    );
                    ok = false;
                }
            }
        }
        if ok {
            for p in def.problems() {
                ctx.err(*header, format!("machine {name}: {p}"));
            }
        }
        out.push((name.clone(), def));
    }
    out
}

fn parse_priorities(ctx: &mut Ctx, raw: &Raw) -> Vec<PriorityDecl> {
    let mut out = Vec::new();
    for (_, l) in raw
        .sections
        .iter()
        .filter(|(s, _)| *s == Section::Priorities)
    {
        let Some(split) = l.tokens.iter().position(|t| *t == "<") else {
            ctx.err(l.no, "expected `<lower>... < <higher>...`");
            continue;
        };
        let lower: Vec<String> = l.tokens[..split].iter().map(|s| s.to_string()).collect();
        let higher: Vec<String> = l.tokens[split + 1..]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if lower.is_empty() || higher.is_empty() || higher.iter().any(|t| t == "<") {
            ctx.err(l.no, "expected `<lower>... < <higher>...`");
            continue;
        }
        let bad: Vec<&String> = lower
            .iter()
            .chain(&higher)
            .filter(|p| p.matches('*').count() > 1 || !is_ident(&p.replace('*', "")) && *p != "*")
            .collect();
        if !bad.is_empty() {
            ctx.err(l.no, format!("invalid connector pattern `{}`", bad[0]));
            continue;
        }
        out.push(PriorityDecl { lower, higher });
    }
    out
}

fn parse_run(ctx: &mut Ctx, raw: &Raw) -> RunParams {
    let mut run = RunParams::default();
    let keys = [
        "seed",
        "max_steps",
        "max_age",
        "max_latency",
        "hyperperiod_bound",
        "high_water",
    ];
    let tokens: Vec<&str> = raw
        .sections
        .iter()
        .filter(|(s, _)| *s == Section::Run)
        .flat_map(|(_, l)| l.tokens.iter().copied())
        .collect();
    let line = raw
        .sections
        .iter()
        .find(|(s, _)| *s == Section::Run)
        .map_or(0, |(_, l)| l.no);
    let a = Args::new(ctx, line, &tokens, &keys);
    if let Some(x) = a.opt(ctx, "seed") {
        run.seed = x;
    }
    if let Some(x) = a.opt(ctx, "max_steps") {
        run.max_steps = x;
    }
    run.max_age = a.opt(ctx, "max_age");
    run.max_latency = a.opt(ctx, "max_latency");
    if let Some(x) = a.opt::<u64>(ctx, "hyperperiod_bound") {
        if x == 0 {
            ctx.err(line, "hyperperiod_bound must be at least 1");
        }
        run.hyperperiod_bound = x;
    }
    if let Some(x) = a.opt(ctx, "high_water") {
        run.high_water = x;
    }
    run
}

fn cross_check(ctx: &mut Ctx, s: &Scenario, raw: &Raw) {
    let header = |name: &str| {
        raw.machines
            .iter()
            .find(|(_, n)| n == name)
            .map_or(0, |(l, _)| *l)
    };
    for h in &s.hosts {
        if let HostKind::App { machine } = &h.kind {
            if s.machine(machine).is_none() {
                ctx.err(
                    0,
                    format!("app {} uses unknown machine `{machine}`", h.name),
                );
            }
        }
    }
    for (name, _) in &s.machines {
        let used = s
            .hosts
            .iter()
            .any(|h| matches!(&h.kind, HostKind::App { machine } if machine == name));
        if !used {
            ctx.err(
                header(name),
                format!("machine {name} is not used by any app"),
            );
        }
    }
}

/// Parses and resolves a scenario. Never panics; on failure every problem
/// found is returned, in line order.
pub fn parse_scenario(text: &str) -> Result<Scenario, Vec<Diagnostic>> {
    let mut ctx = Ctx { diags: Vec::new() };
    let raw = split_sections(&mut ctx, text);
    if raw.topology.is_none() {
        ctx.err(0, "missing topology");
    }
    let topology = parse_topology(&mut ctx, &raw);
    let machines = parse_machines(&mut ctx, &raw);
    let schedule = parse_schedule(&mut ctx, &raw, &topology);
    let hosts = parse_hosts(&mut ctx, &raw, &topology);
    let priorities = parse_priorities(&mut ctx, &raw);
    let run = parse_run(&mut ctx, &raw);
    let scenario = Scenario {
        topology,
        schedule,
        hosts,
        machines,
        priorities,
        run,
    };
    cross_check(&mut ctx, &scenario, &raw);
    if ctx.diags.is_empty() {
        Ok(scenario)
    } else {
        ctx.diags.sort_by_key(|d| d.line);
        Err(ctx.diags)
    }
}
