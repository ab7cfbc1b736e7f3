use std::collections::BTreeSet;

use crate::system::SystemState;
use crate::value::{Hop, TissIdx};

use super::FabricLayout;

/// A message that cannot make progress because its next hop is occupied.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Contention {
    pub tick: u64,
    /// Component holding the blocked message.
    pub holder: String,
    /// Component that cannot accept it.
    pub blocked_by: String,
}

/// Watches fabric state between steps for contention and for TISS buffers
/// growing past a high-water mark.
#[derive(Debug)]
pub struct FabricMonitor {
    high_water: usize,
    contentions: BTreeSet<Contention>,
    warned: BTreeSet<(TissIdx, u32)>,
    warnings: Vec<String>,
}

impl FabricMonitor {
    pub fn new(high_water: usize) -> Self {
        Self {
            high_water,
            contentions: BTreeSet::new(),
            warned: BTreeSet::new(),
            warnings: Vec::new(),
        }
    }

    pub fn contentions(&self) -> impl Iterator<Item = &Contention> {
        self.contentions.iter()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn observe(&mut self, layout: &FabricLayout, state: &SystemState, tick: u64) {
        let sv = layout.switch_vars;
        let switch_free = |s: u16| {
            let c = state.component(layout.switch_component(s));
            c.location == sv.idle && c.valuation.int(sv.phase).is_ok_and(|p| p <= 2)
        };
        let tiss_free = |t: TissIdx| {
            let h = &layout.tiss_vars[t as usize];
            let c = state.component(layout.tiss_component(t));
            c.location == h.ready && c.valuation.bool(h.sending).is_ok_and(|b| !b)
        };
        let mut found = Vec::new();
        for (s, &ci) in layout.switches.iter().enumerate() {
            let c = state.component(ci);
            if c.location != sv.holding {
                continue;
            }
            let (Ok(phase), Ok(recv)) = (c.valuation.int(sv.phase), c.valuation.int(sv.recv_phase))
            else {
                continue;
            };
            if phase != recv + 1 {
                continue;
            }
            let Ok(Some(m)) = c.valuation.msg(sv.out) else {
                continue;
            };
            let holder = layout.switch_name(s as u16).to_string();
            match m.next_hop() {
                Hop::Switch(z) if !switch_free(z) => {
                    found.push((holder, layout.switch_name(z).to_string()))
                }
                Hop::Tiss(t) if !tiss_free(t) => {
                    found.push((holder, layout.tiss_name(t).to_string()))
                }
                _ => {}
            }
        }
        for (t, h) in layout.tiss_vars.iter().enumerate() {
            let t = t as TissIdx;
            let c = state.component(layout.tiss_component(t));
            if c.location == h.ready && c.valuation.bool(h.sending).unwrap_or(false) {
                let s = layout.topology.attach[t as usize];
                if !switch_free(s) {
                    found.push((
                        layout.tiss_name(t).to_string(),
                        layout.switch_name(s).to_string(),
                    ));
                }
            }
            for &(pid, buf) in &h.buffers {
                let len = c.valuation.queue(buf).map_or(0, |q| q.len());
                if len > self.high_water && self.warned.insert((t, pid)) {
                    self.warnings.push(format!(
                        "tick {tick}: {} buffer for port {pid} holds {len} messages",
                        layout.tiss_name(t)
                    ));
                }
            }
        }
        for (holder, blocked_by) in found {
            self.contentions.insert(Contention {
                tick,
                holder,
                blocked_by,
            });
        }
    }
}
