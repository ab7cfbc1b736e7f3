use std::collections::BTreeSet;

use crate::value::{SwitchIdx, TissIdx};

/// Longest route the four-phase global tick can carry.
pub const MAX_ROUTE_LEN: usize = 3;

/// Mesh of switches with TISS attachments.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Topology {
    pub switches: Vec<String>,
    /// Undirected switch links.
    pub links: Vec<(SwitchIdx, SwitchIdx)>,
    pub tiss: Vec<String>,
    /// `attach[t]` is the switch TISS `t` hangs off.
    pub attach: Vec<SwitchIdx>,
}

impl Topology {
    /// 2x2 grid S1-S2, S1-S3, S2-S4, S3-S4 with six TISS attached as
    /// S1:{T2}, S2:{T1,T4}, S3:{T3}, S4:{T5,T6}.
    pub fn reference() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Topology {
            switches: s(&["S1", "S2", "S3", "S4"]),
            links: vec![(0, 1), (0, 2), (1, 3), (2, 3)],
            tiss: s(&["T1", "T2", "T3", "T4", "T5", "T6"]),
            attach: vec![1, 0, 2, 1, 3, 3],
        }
    }

    /// One switch with two TISS.
    pub fn minimal() -> Self {
        Topology {
            switches: vec!["S1".into()],
            links: Vec::new(),
            tiss: vec!["T1".into(), "T2".into()],
            attach: vec![0, 0],
        }
    }

    pub fn switch_index(&self, name: &str) -> Option<SwitchIdx> {
        self.switches
            .iter()
            .position(|s| s == name)
            .map(|i| i as SwitchIdx)
    }

    pub fn tiss_index(&self, name: &str) -> Option<TissIdx> {
        self.tiss
            .iter()
            .position(|s| s == name)
            .map(|i| i as TissIdx)
    }

    pub fn adjacent(&self, a: SwitchIdx, b: SwitchIdx) -> bool {
        self.links
            .iter()
            .any(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b))
    }

    pub fn neighbors(&self, s: SwitchIdx) -> Vec<SwitchIdx> {
        let mut out: BTreeSet<SwitchIdx> = BTreeSet::new();
        for &(x, y) in &self.links {
            if x == s {
                out.insert(y);
            } else if y == s {
                out.insert(x);
            }
        }
        out.into_iter().collect()
    }

    pub fn attached_tiss(&self, s: SwitchIdx) -> Vec<TissIdx> {
        self.attach
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == s)
            .map(|(t, _)| t as TissIdx)
            .collect()
    }

    /// Structural problems, empty when the topology is usable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.switches.is_empty() {
            out.push("topology has no switches".to_string());
        }
        if self.tiss.is_empty() {
            out.push("topology has no TISS".to_string());
        }
        if self.attach.len() != self.tiss.len() {
            out.push(format!(
                "{} TISS but {} attachments",
                self.tiss.len(),
                self.attach.len()
            ));
        }
        let n = self.switches.len() as SwitchIdx;
        for &(a, b) in &self.links {
            if a >= n || b >= n {
                out.push(format!("dangling link {a}-{b}"));
            } else if a == b {
                out.push(format!("self link on {}", self.switches[a as usize]));
            }
        }
        for (t, &s) in self.attach.iter().enumerate() {
            if s >= n {
                let name = self.tiss.get(t).map_or("?", String::as_str);
                out.push(format!("TISS {name} attached to unknown switch {s}"));
            }
        }
        let mut seen = BTreeSet::new();
        for name in self.switches.iter().chain(&self.tiss) {
            if !seen.insert(name) {
                out.push(format!("duplicate name {name}"));
            }
        }
        out
    }
}

/// Periodic slot of one TISS: port `port_id` is sent at every tick `t` with
/// `t % period == phase`, along `route` to `target`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ScheduleEntry {
    pub source: TissIdx,
    pub port_id: u32,
    pub period: u32,
    pub phase: u32,
    pub route: Vec<SwitchIdx>,
    pub target: TissIdx,
}

impl ScheduleEntry {
    pub fn due(&self, tick: u64) -> bool {
        tick % u64::from(self.period) == u64::from(self.phase)
    }
}
